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

#ifndef AVUC_UNCERTAINTY_HPP_
#define AVUC_UNCERTAINTY_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "avuc/random.hpp"
#include "avuc/variational.hpp"

namespace avuc {

inline constexpr double kEntropyEps = 1e-12;

inline void validate_prob_rows(const Tensor& probs, const char* who) {
  if (probs.rank() != 2) {
    throw std::invalid_argument(std::string(who) + ": probs must be rank 2");
  }
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < probs.cols(); ++j) {
      const double p = probs.at(i, j);
      if (p < 0.0) {
        throw std::invalid_argument(std::string(who) +
                                    ": negative probability");
      }
      row += p;
    }
    if (std::abs(row - 1.0) > 1e-6) {
      throw std::invalid_argument(std::string(who) +
                                  ": probability row does not sum to 1");
    }
  }
}

// Shannon entropy in nats with the guarded log; zero entries contribute 0.
// The guard makes a one-hot row come out at -eps, so clamp at zero.
inline double entropy_of_row(const Tensor& probs, std::size_t row) {
  double h = 0.0;
  for (std::size_t j = 0; j < probs.cols(); ++j) {
    const double p = probs.at(row, j);
    h -= p * std::log(p + kEntropyEps);
  }
  return std::max(0.0, h);
}

inline std::vector<double> predictive_entropy(const Tensor& probs) {
  validate_prob_rows(probs, "predictive_entropy");
  std::vector<double> h(probs.rows());
  for (std::size_t i = 0; i < probs.rows(); ++i) h[i] = entropy_of_row(probs, i);
  return h;
}

// H(mean prediction) - mean(H(per-sample prediction)), clamped at zero
// against floating point cancellation.
inline std::vector<double> mutual_information(
    const std::vector<Tensor>& per_sample_probs) {
  if (per_sample_probs.empty()) {
    throw std::invalid_argument("mutual_information: no samples");
  }
  const std::size_t rows = per_sample_probs.front().rows();
  const std::size_t cols = per_sample_probs.front().cols();
  Tensor mean_probs = Tensor::zeros({rows, cols});
  std::vector<double> mean_entropy(rows, 0.0);
  for (const Tensor& probs : per_sample_probs) {
    validate_prob_rows(probs, "mutual_information");
    if (probs.rows() != rows || probs.cols() != cols) {
      throw std::invalid_argument("mutual_information: ragged sample shapes");
    }
    for (std::size_t i = 0; i < rows; ++i) {
      mean_entropy[i] += entropy_of_row(probs, i);
      for (std::size_t j = 0; j < cols; ++j) {
        mean_probs.at(i, j) += probs.at(i, j);
      }
    }
  }
  const double inv = 1.0 / static_cast<double>(per_sample_probs.size());
  std::vector<double> mi(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) mean_probs.at(i, j) *= inv;
    mi[i] = std::max(0.0, entropy_of_row(mean_probs, i) - mean_entropy[i] * inv);
  }
  return mi;
}

inline std::vector<int> argmax_rows(const Tensor& m) {
  std::vector<int> idx(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < m.cols(); ++j) {
      if (m.at(i, j) > m.at(i, best)) best = j;
    }
    idx[i] = static_cast<int>(best);
  }
  return idx;
}

// Monte Carlo predictive distribution: mean of T softmaxed stochastic
// forward passes, plus the uncertainty summaries derived from it.
struct McPrediction {
  std::vector<Tensor> per_sample_probs;  // T tensors, each (B, K)
  Tensor mean_probs;                     // (B, K)
  std::vector<int> pred_label;
  std::vector<double> confidence;   // probability of the predicted class
  std::vector<double> entropy;      // of mean_probs, nats
  std::vector<double> mutual_info;  // epistemic part
};

inline McPrediction mc_predict(const BnnModel& model, const Tensor& x,
                               int samples, Rng& rng,
                               double temperature = 1.0) {
  if (samples < 1) throw std::invalid_argument("mc_predict: samples must be >= 1");
  if (temperature <= 0.0) {
    throw std::invalid_argument("mc_predict: temperature must be positive");
  }
  McPrediction out;
  const Value input = constant(x);
  for (int t = 0; t < samples; ++t) {
    Tensor logits = model.sample_forward(input, rng).value();
    if (temperature != 1.0) {
      for (double& v : logits.data()) v /= temperature;
    }
    out.per_sample_probs.push_back(softmax_values(logits));
  }
  const std::size_t rows = x.rows();
  const std::size_t cols = out.per_sample_probs.front().cols();
  out.mean_probs = Tensor::zeros({rows, cols});
  for (const Tensor& probs : out.per_sample_probs) {
    for (std::size_t i = 0; i < probs.numel(); ++i) out.mean_probs[i] += probs[i];
  }
  for (double& v : out.mean_probs.data()) {
    v /= static_cast<double>(samples);
  }
  out.pred_label = argmax_rows(out.mean_probs);
  out.confidence.resize(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    out.confidence[i] = out.mean_probs.at(i, out.pred_label[i]);
  }
  out.entropy = predictive_entropy(out.mean_probs);
  out.mutual_info = mutual_information(out.per_sample_probs);
  return out;
}

inline McPrediction mc_predict(const BnnModel& model, const Tensor& x,
                               int samples, std::uint64_t seed,
                               double temperature = 1.0) {
  Rng rng(seed);
  return mc_predict(model, x, samples, rng, temperature);
}

struct ThresholdResult {
  double u_th = 0.0;
  bool fallback = false;  // one of the two groups was empty
};

// Midpoint of the mean uncertainty of accurate and of inaccurate
// predictions. If either group is empty, falls back to the median.
inline ThresholdResult learn_threshold(const std::vector<double>& uncertainty,
                                       const std::vector<bool>& correct) {
  if (uncertainty.empty() || uncertainty.size() != correct.size()) {
    throw std::invalid_argument("learn_threshold: bad input lengths");
  }
  double sum_acc = 0.0, sum_inacc = 0.0;
  std::size_t n_acc = 0, n_inacc = 0;
  for (std::size_t i = 0; i < uncertainty.size(); ++i) {
    if (correct[i]) {
      sum_acc += uncertainty[i];
      ++n_acc;
    } else {
      sum_inacc += uncertainty[i];
      ++n_inacc;
    }
  }
  if (n_acc == 0 || n_inacc == 0) {
    std::vector<double> sorted = uncertainty;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    const double median = n % 2 ? sorted[n / 2]
                                : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    return {median, true};
  }
  return {0.5 * (sum_acc / n_acc + sum_inacc / n_inacc), false};
}

}  // namespace avuc

#endif  // AVUC_UNCERTAINTY_HPP_
