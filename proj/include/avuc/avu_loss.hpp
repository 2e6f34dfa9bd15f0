/*
 * Copyright (c) 2026 avuc project contributors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef AVUC_AVU_LOSS_HPP_
#define AVUC_AVU_LOSS_HPP_

#include <cmath>
#include <vector>

#include "avuc/graph.hpp"
#include "avuc/uncertainty.hpp"

namespace avuc {

inline constexpr double kAvucEps = 1e-10;

// Mass in the four accuracy-vs-certainty cells at one threshold.
// Hard counts are integers stored as doubles; soft counts are fractional.
struct AvuCounts {
  double n_ac = 0.0;  // accurate and certain
  double n_au = 0.0;  // accurate but uncertain
  double n_ic = 0.0;  // inaccurate but certain
  double n_iu = 0.0;  // inaccurate and uncertain
  double u_th = 0.0;

  double total() const { return n_ac + n_au + n_ic + n_iu; }
};

// One evaluated batch: averaged predictive distribution plus the per-example
// summaries every downstream metric consumes.
struct PredictiveBatch {
  Tensor probs;  // (B, K)
  std::vector<int> pred_label;
  std::vector<int> true_label;
  std::vector<double> confidence;   // prob of predicted class
  std::vector<double> uncertainty;  // predictive entropy, nats

  std::size_t size() const { return true_label.size(); }

  static PredictiveBatch from_probs(Tensor probs,
                                    const std::vector<int>& labels) {
    validate_prob_rows(probs, "PredictiveBatch");
    if (labels.size() != probs.rows()) {
      throw std::invalid_argument("PredictiveBatch: label count mismatch");
    }
    const double max_entropy =
        std::log(static_cast<double>(probs.cols())) + 1e-9;
    PredictiveBatch batch;
    batch.pred_label = argmax_rows(probs);
    batch.true_label = labels;
    batch.confidence.resize(probs.rows());
    batch.uncertainty.resize(probs.rows());
    for (std::size_t i = 0; i < probs.rows(); ++i) {
      if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= probs.cols()) {
        throw std::invalid_argument("PredictiveBatch: label out of range");
      }
      batch.confidence[i] = probs.at(i, batch.pred_label[i]);
      batch.uncertainty[i] = entropy_of_row(probs, i);
      if (batch.uncertainty[i] < 0.0 || batch.uncertainty[i] > max_entropy) {
        throw std::invalid_argument("PredictiveBatch: entropy out of range");
      }
    }
    batch.probs = std::move(probs);
    return batch;
  }

  static PredictiveBatch from_prediction(const McPrediction& pred,
                                         const std::vector<int>& labels) {
    return from_probs(pred.mean_probs, labels);
  }
};

// Indicator partition: prediction right/wrong crossed with
// uncertainty <= / > threshold. Every example lands in exactly one cell.
inline AvuCounts hard_counts(const PredictiveBatch& batch, double u_th) {
  if (batch.size() == 0) throw std::invalid_argument("hard_counts: empty batch");
  AvuCounts counts;
  counts.u_th = u_th;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const bool accurate = batch.pred_label[i] == batch.true_label[i];
    const bool certain = batch.uncertainty[i] <= u_th;
    if (accurate && certain) counts.n_ac += 1.0;
    if (accurate && !certain) counts.n_au += 1.0;
    if (!accurate && certain) counts.n_ic += 1.0;
    if (!accurate && !certain) counts.n_iu += 1.0;
  }
  return counts;
}

// AvU = (n_ac + n_iu) / all four; in [0, 1], higher is better.
inline double avu(const AvuCounts& counts) {
  const double total = counts.total();
  if (total <= 0.0) throw std::invalid_argument("avu: zero total mass");
  return (counts.n_ac + counts.n_iu) / total;
}

// Graph-side view of a batch: the averaged probabilities with the
// confidence and entropy heads, plus detached labels for routing.
struct SoftBatch {
  Value probs;        // (B, K)
  Value confidence;   // (B), prob of predicted class
  Value uncertainty;  // (B), entropy with guarded log
  std::vector<int> pred_label;
  std::vector<int> true_label;

  std::size_t size() const { return true_label.size(); }
};

// Averages softmaxed samples and wires up the differentiable confidence
// and uncertainty per example. Predicted labels come from detached values.
inline SoftBatch soft_batch_from_logits(const std::vector<Value>& logit_samples,
                                        const std::vector<int>& labels) {
  if (logit_samples.empty()) {
    throw std::invalid_argument("soft_batch_from_logits: no samples");
  }
  Value probs = softmax(logit_samples.front());
  for (std::size_t t = 1; t < logit_samples.size(); ++t) {
    probs = add(probs, softmax(logit_samples[t]));
  }
  probs = mul_scalar(probs, 1.0 / static_cast<double>(logit_samples.size()));
  if (labels.size() != probs.value().rows()) {
    throw std::invalid_argument("soft_batch_from_logits: label count mismatch");
  }
  for (int label : labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= probs.value().cols()) {
      throw std::invalid_argument("soft_batch_from_logits: label out of range");
    }
  }
  SoftBatch batch;
  batch.pred_label = argmax_rows(probs.value());
  batch.true_label = labels;
  batch.confidence = gather_cols(probs, batch.pred_label);
  batch.uncertainty = negate(row_sum(mul(probs, log_eps(probs, kEntropyEps))));
  batch.probs = probs;
  return batch;
}

struct SoftAvuCounts {
  Value n_ac, n_au, n_ic, n_iu;
  double u_th = 0.0;

  Value total() const { return add(add(n_ac, n_au), add(n_ic, n_iu)); }
};

// Differentiable cell masses: membership is decided on detached values;
// gradients flow only through the confidence/uncertainty weights
// p*(1 - tanh u), p*tanh u, (1-p)*(1 - tanh u), (1-p)*tanh u.
inline SoftAvuCounts soft_counts(const SoftBatch& batch, double u_th) {
  if (batch.size() == 0) throw std::invalid_argument("soft_counts: empty batch");
  const std::size_t n = batch.size();
  Tensor m_ac = Tensor::zeros({n}), m_au = Tensor::zeros({n});
  Tensor m_ic = Tensor::zeros({n}), m_iu = Tensor::zeros({n});
  const Tensor& u_vals = batch.uncertainty.value();
  for (std::size_t i = 0; i < n; ++i) {
    const bool accurate = batch.pred_label[i] == batch.true_label[i];
    const bool certain = u_vals[i] <= u_th;
    (accurate ? (certain ? m_ac : m_au) : (certain ? m_ic : m_iu))[i] = 1.0;
  }
  const Value& p = batch.confidence;
  Value tanh_u = tanh(batch.uncertainty);
  Value certain_w = 1.0 - tanh_u;
  Value inacc_p = 1.0 - p;
  SoftAvuCounts counts;
  counts.u_th = u_th;
  counts.n_ac = sum(mul(constant(m_ac), mul(p, certain_w)));
  counts.n_au = sum(mul(constant(m_au), mul(p, tanh_u)));
  counts.n_ic = sum(mul(constant(m_ic), mul(inacc_p, certain_w)));
  counts.n_iu = sum(mul(constant(m_iu), mul(inacc_p, tanh_u)));
  return counts;
}

inline Value soft_avu(const SoftAvuCounts& counts) {
  return divide(add(counts.n_ac, counts.n_iu), counts.total());
}

// -log AvU rearranged so only the well-behaved ratio needs guarding:
// log(1 + (n_au + n_ic) / (n_ac + n_iu + eps)).
inline Value avuc_loss(const SoftAvuCounts& counts) {
  Value ratio = divide(add(counts.n_au, counts.n_ic),
                       add_scalar(add(counts.n_ac, counts.n_iu), kAvucEps));
  return log(add_scalar(ratio, 1.0));
}

// Mean cross-entropy of a logit batch against integer labels.
inline Value cross_entropy_loss(const Value& logits,
                                const std::vector<int>& labels) {
  return negate(mean(gather_cols(log_softmax(logits), labels)));
}

// Negative ELBO: average per-sample cross-entropy plus scaled KL.
// kl_scale is typically 1/M for M mini-batches per epoch.
inline Value elbo_loss(const std::vector<Value>& logit_samples,
                       const std::vector<int>& labels, const Value& kl,
                       double kl_scale) {
  if (logit_samples.empty()) {
    throw std::invalid_argument("elbo_loss: no logit samples");
  }
  if (kl_scale < 0.0) throw std::invalid_argument("elbo_loss: kl_scale < 0");
  Value ce = cross_entropy_loss(logit_samples.front(), labels);
  for (std::size_t t = 1; t < logit_samples.size(); ++t) {
    ce = add(ce, cross_entropy_loss(logit_samples[t], labels));
  }
  ce = mul_scalar(ce, 1.0 / static_cast<double>(logit_samples.size()));
  return add(ce, mul_scalar(kl, kl_scale));
}

inline Value total_loss(const Value& elbo, const Value& avuc, double beta) {
  if (beta < 0.0) throw std::invalid_argument("total_loss: beta < 0");
  return add(elbo, mul_scalar(avuc, beta));
}

inline std::vector<double> default_t_grid(int points = 21) {
  if (points < 2) throw std::invalid_argument("t_grid needs >= 2 points");
  std::vector<double> grid(points);
  for (int i = 0; i < points; ++i) {
    grid[i] = static_cast<double>(i) / static_cast<double>(points - 1);
  }
  return grid;
}

// Threshold-free variant: soft AvU is integrated over thresholds swept
// between the batch's min and max uncertainty, u_th(t) = u_min + t*(span).
// Loss = log((1 + eps) / (AUC + eps)), which is -log(AUC + eps) shifted by
// a constant eps so a saturated perfect batch lands exactly at zero.
inline Value au_avuc_loss(const SoftBatch& batch,
                          const std::vector<double>& t_grid) {
  if (t_grid.size() < 2) {
    throw std::invalid_argument("au_avuc_loss: t_grid needs >= 2 points");
  }
  for (std::size_t i = 0; i + 1 < t_grid.size(); ++i) {
    if (t_grid[i + 1] <= t_grid[i]) {
      throw std::invalid_argument("au_avuc_loss: t_grid must be increasing");
    }
  }
  if (t_grid.front() < 0.0 || t_grid.back() > 1.0) {
    throw std::invalid_argument("au_avuc_loss: t_grid must lie in [0, 1]");
  }
  const Tensor& u = batch.uncertainty.value();
  double u_min = u[0], u_max = u[0];
  for (std::size_t i = 1; i < u.numel(); ++i) {
    u_min = std::min(u_min, u[i]);
    u_max = std::max(u_max, u[i]);
  }
  if (u_max - u_min < 1e-15) {
    // Degenerate sweep: every threshold sees the same partition.
    return add_scalar(negate(log_eps(soft_avu(soft_counts(batch, u_min)),
                                     kAvucEps)),
                      std::log(1.0 + kAvucEps));
  }
  std::vector<Value> avu_at_t;
  avu_at_t.reserve(t_grid.size());
  for (double t : t_grid) {
    avu_at_t.push_back(soft_avu(soft_counts(batch, u_min + t * (u_max - u_min))));
  }
  Value auc = constant(0.0);
  for (std::size_t j = 0; j + 1 < t_grid.size(); ++j) {
    Value panel = mul_scalar(add(avu_at_t[j], avu_at_t[j + 1]),
                             0.5 * (t_grid[j + 1] - t_grid[j]));
    auc = add(auc, panel);
  }
  return add_scalar(negate(log_eps(auc, kAvucEps)), std::log(1.0 + kAvucEps));
}

}  // namespace avuc

#endif  // AVUC_AVU_LOSS_HPP_
