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

#ifndef AVUC_METRICS_HPP_
#define AVUC_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "avuc/avu_loss.hpp"
#include "avuc/tensor.hpp"

namespace avuc {

inline constexpr std::size_t kDefaultBins = 15;
inline constexpr double kNllEps = 1e-12;

// Per-bin summary over an equal-width partition of (0, 1]. Confidence bins
// fill acc/conf (err = 1 - acc); uncertainty bins fill err/uncert
// (acc = 1 - err). The unused pair stays 0.
struct BinStat {
  std::size_t index = 0;  // 1-based bin number
  std::size_t count = 0;
  double acc = 0.0;
  double conf = 0.0;
  double err = 0.0;
  double uncert = 0.0;
};

namespace detail {

// Bin l (1-based) covers ((l-1)/bins, l/bins]; values at or below 0 land
// in bin 1.
inline std::size_t unit_bin_index(double value, std::size_t bins) {
  auto idx =
      static_cast<long long>(std::ceil(value * static_cast<double>(bins))) - 1;
  if (idx < 0) idx = 0;
  if (idx >= static_cast<long long>(bins)) idx = static_cast<long long>(bins) - 1;
  return static_cast<std::size_t>(idx);
}

inline void check_unit_values(const std::vector<double>& values,
                              const std::vector<int>& outcomes,
                              const char* op) {
  if (values.empty()) {
    throw std::invalid_argument(std::string(op) + ": empty input");
  }
  if (values.size() != outcomes.size()) {
    throw std::invalid_argument(std::string(op) + ": size mismatch");
  }
  for (double v : values) {
    if (!std::isfinite(v) || v < -1e-9 || v > 1.0 + 1e-9) {
      throw std::invalid_argument(std::string(op) + ": value outside [0, 1]");
    }
  }
  for (int o : outcomes) {
    if (o != 0 && o != 1) {
      throw std::invalid_argument(std::string(op) + ": outcomes must be 0/1");
    }
  }
}

inline void check_scores(const std::vector<double>& scores, const char* op) {
  if (scores.empty()) {
    throw std::invalid_argument(std::string(op) + ": empty input");
  }
  for (double s : scores) {
    if (!std::isfinite(s)) {
      throw std::invalid_argument(std::string(op) + ": non-finite score");
    }
  }
}

}  // namespace detail

inline std::vector<BinStat> confidence_bins(
    const std::vector<double>& confidences, const std::vector<int>& correct,
    std::size_t bins = kDefaultBins) {
  if (bins < 1) throw std::invalid_argument("confidence_bins: bins < 1");
  detail::check_unit_values(confidences, correct, "confidence_bins");
  std::vector<BinStat> stats(bins);
  for (std::size_t l = 0; l < bins; ++l) stats[l].index = l + 1;
  for (std::size_t i = 0; i < confidences.size(); ++i) {
    BinStat& b = stats[detail::unit_bin_index(confidences[i], bins)];
    b.count += 1;
    b.conf += confidences[i];
    b.acc += static_cast<double>(correct[i]);
  }
  for (BinStat& b : stats) {
    if (b.count == 0) continue;
    b.conf /= static_cast<double>(b.count);
    b.acc /= static_cast<double>(b.count);
    b.err = 1.0 - b.acc;
  }
  return stats;
}

inline std::vector<BinStat> uncertainty_bins(
    const std::vector<double>& normalized_uncertainties,
    const std::vector<int>& errors, std::size_t bins = kDefaultBins) {
  if (bins < 1) throw std::invalid_argument("uncertainty_bins: bins < 1");
  detail::check_unit_values(normalized_uncertainties, errors,
                            "uncertainty_bins");
  std::vector<BinStat> stats(bins);
  for (std::size_t l = 0; l < bins; ++l) stats[l].index = l + 1;
  for (std::size_t i = 0; i < normalized_uncertainties.size(); ++i) {
    BinStat& b =
        stats[detail::unit_bin_index(normalized_uncertainties[i], bins)];
    b.count += 1;
    b.uncert += normalized_uncertainties[i];
    b.err += static_cast<double>(errors[i]);
  }
  for (BinStat& b : stats) {
    if (b.count == 0) continue;
    b.uncert /= static_cast<double>(b.count);
    b.err /= static_cast<double>(b.count);
    b.acc = 1.0 - b.err;
  }
  return stats;
}

// Expected calibration error: bin-weighted |accuracy - confidence|.
inline double ece(const std::vector<double>& confidences,
                  const std::vector<int>& correct,
                  std::size_t bins = kDefaultBins) {
  const std::vector<BinStat> stats = confidence_bins(confidences, correct, bins);
  const double n = static_cast<double>(confidences.size());
  double out = 0.0;
  for (const BinStat& b : stats) {
    if (b.count == 0) continue;
    out += (static_cast<double>(b.count) / n) * std::abs(b.acc - b.conf);
  }
  return out;
}

// Expected uncertainty calibration error: bin-weighted |error - uncertainty|
// over normalized uncertainties u / ln K.
inline double uce(const std::vector<double>& normalized_uncertainties,
                  const std::vector<int>& errors,
                  std::size_t bins = kDefaultBins) {
  const std::vector<BinStat> stats =
      uncertainty_bins(normalized_uncertainties, errors, bins);
  const double n = static_cast<double>(normalized_uncertainties.size());
  double out = 0.0;
  for (const BinStat& b : stats) {
    if (b.count == 0) continue;
    out += (static_cast<double>(b.count) / n) * std::abs(b.err - b.uncert);
  }
  return out;
}

inline double nll(const Tensor& probs, const std::vector<int>& labels) {
  validate_prob_rows(probs, "nll");
  if (labels.size() != probs.rows()) {
    throw std::invalid_argument("nll: label count mismatch");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= probs.cols()) {
      throw std::invalid_argument("nll: label out of range");
    }
    total -= std::log(std::max(probs.at(i, labels[i]), kNllEps));
  }
  return total / static_cast<double>(probs.rows());
}

inline double brier(const Tensor& probs, const std::vector<int>& labels) {
  validate_prob_rows(probs, "brier");
  if (labels.size() != probs.rows()) {
    throw std::invalid_argument("brier: label count mismatch");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= probs.cols()) {
      throw std::invalid_argument("brier: label out of range");
    }
    for (std::size_t k = 0; k < probs.cols(); ++k) {
      const double target = static_cast<std::size_t>(labels[i]) == k ? 1.0 : 0.0;
      const double d = probs.at(i, k) - target;
      total += d * d;
    }
  }
  return total / static_cast<double>(probs.rows());
}

inline double accuracy(const PredictiveBatch& batch) {
  if (batch.size() == 0) throw std::invalid_argument("accuracy: empty batch");
  double correct = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch.pred_label[i] == batch.true_label[i]) correct += 1.0;
  }
  return correct / static_cast<double>(batch.size());
}

// P(accurate | certain) and P(uncertain | inaccurate) from hard counts.
// Either is absent when its conditioning set is empty.
struct ConditionalProbs {
  std::optional<double> p_accurate_given_certain;
  std::optional<double> p_uncertain_given_inaccurate;
};

inline ConditionalProbs conditional_probs(const PredictiveBatch& batch,
                                          double u_th) {
  const AvuCounts c = hard_counts(batch, u_th);
  ConditionalProbs out;
  if (c.n_ac + c.n_ic > 0.0) {
    out.p_accurate_given_certain = c.n_ac / (c.n_ac + c.n_ic);
  }
  if (c.n_ic + c.n_iu > 0.0) {
    out.p_uncertain_given_inaccurate = c.n_iu / (c.n_ic + c.n_iu);
  }
  return out;
}

// Trapezoidal area under hard AvU across normalized thresholds
// u_th(t) = u_min + t (u_max - u_min).
inline double avu_auc(const PredictiveBatch& batch,
                      const std::vector<double>& t_grid = default_t_grid()) {
  if (batch.size() == 0) throw std::invalid_argument("avu_auc: empty batch");
  if (t_grid.size() < 2) {
    throw std::invalid_argument("avu_auc: t_grid needs >= 2 points");
  }
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (i > 0 && t_grid[i] <= t_grid[i - 1]) {
      throw std::invalid_argument("avu_auc: t_grid must be increasing");
    }
    if (t_grid[i] < 0.0 || t_grid[i] > 1.0) {
      throw std::invalid_argument("avu_auc: t_grid must lie in [0, 1]");
    }
  }
  const auto [lo, hi] =
      std::minmax_element(batch.uncertainty.begin(), batch.uncertainty.end());
  const double u_min = *lo;
  const double span = *hi - u_min;
  std::vector<double> values(t_grid.size());
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    values[i] = avu(hard_counts(batch, u_min + t_grid[i] * span));
  }
  double auc = 0.0;
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    auc += 0.5 * (t_grid[i] - t_grid[i - 1]) * (values[i] + values[i - 1]);
  }
  return auc;
}

// 1-based ranks; tied values share the mean of their rank range.
inline std::vector<double> average_ranks(const std::vector<double>& values) {
  detail::check_scores(values, "average_ranks");
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double mean_rank = 0.5 * static_cast<double>(i + j + 2);
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mean_rank;
    i = j + 1;
  }
  return ranks;
}

// Mann-Whitney AUROC with average ranks on ties; higher scores rank the
// positive class first.
inline double auroc(const std::vector<double>& scores_pos,
                    const std::vector<double>& scores_neg) {
  detail::check_scores(scores_pos, "auroc");
  detail::check_scores(scores_neg, "auroc");
  std::vector<double> combined = scores_pos;
  combined.insert(combined.end(), scores_neg.begin(), scores_neg.end());
  const std::vector<double> ranks = average_ranks(combined);
  const double n_pos = static_cast<double>(scores_pos.size());
  const double n_neg = static_cast<double>(scores_neg.size());
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < scores_pos.size(); ++i) rank_sum += ranks[i];
  const double u_stat = rank_sum - n_pos * (n_pos + 1.0) / 2.0;
  return u_stat / (n_pos * n_neg);
}

// Average precision; tied scores are processed as one group and share the
// precision at the group boundary.
inline double average_precision(const std::vector<double>& scores_pos,
                                const std::vector<double>& scores_neg) {
  detail::check_scores(scores_pos, "average_precision");
  detail::check_scores(scores_neg, "average_precision");
  struct Entry {
    double score;
    bool positive;
  };
  std::vector<Entry> entries;
  entries.reserve(scores_pos.size() + scores_neg.size());
  for (double s : scores_pos) entries.push_back({s, true});
  for (double s : scores_neg) entries.push_back({s, false});
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.score > b.score; });
  double tp = 0.0;
  double fp = 0.0;
  double ap = 0.0;
  std::size_t i = 0;
  while (i < entries.size()) {
    std::size_t j = i;
    double group_pos = 0.0;
    double group_neg = 0.0;
    while (j < entries.size() && entries[j].score == entries[i].score) {
      if (entries[j].positive) {
        group_pos += 1.0;
      } else {
        group_neg += 1.0;
      }
      ++j;
    }
    tp += group_pos;
    fp += group_neg;
    if (group_pos > 0.0) ap += (tp / (tp + fp)) * group_pos;
    i = j;
  }
  return ap / static_cast<double>(scores_pos.size());
}

// In-distribution is the positive class; low uncertainty votes for it.
inline double aupr_in(const std::vector<double>& uncertainty_in,
                      const std::vector<double>& uncertainty_shift) {
  std::vector<double> pos(uncertainty_in.size());
  std::vector<double> neg(uncertainty_shift.size());
  for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = -uncertainty_in[i];
  for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = -uncertainty_shift[i];
  return average_precision(pos, neg);
}

// Shifted data is the positive class; high uncertainty votes for it.
inline double aupr_out(const std::vector<double>& uncertainty_in,
                       const std::vector<double>& uncertainty_shift) {
  return average_precision(uncertainty_shift, uncertainty_in);
}

// Best balanced accuracy over score thresholds; predicts positive when
// score > threshold.
inline double detection_accuracy(const std::vector<double>& scores_pos,
                                 const std::vector<double>& scores_neg) {
  detail::check_scores(scores_pos, "detection_accuracy");
  detail::check_scores(scores_neg, "detection_accuracy");
  std::vector<double> pos = scores_pos;
  std::vector<double> neg = scores_neg;
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end());
  std::vector<double> cuts;
  cuts.reserve(pos.size() + neg.size() + 1);
  cuts.push_back(-std::numeric_limits<double>::infinity());
  cuts.insert(cuts.end(), pos.begin(), pos.end());
  cuts.insert(cuts.end(), neg.begin(), neg.end());
  const double n_pos = static_cast<double>(pos.size());
  const double n_neg = static_cast<double>(neg.size());
  double best = 0.0;
  for (double cut : cuts) {
    const double tp = static_cast<double>(
        pos.end() - std::upper_bound(pos.begin(), pos.end(), cut));
    const double tn = static_cast<double>(
        std::upper_bound(neg.begin(), neg.end(), cut) - neg.begin());
    best = std::max(best, 0.5 * (tp / n_pos + tn / n_neg));
  }
  return best;
}

// 1-D Wasserstein-1: sorted pairing for equal sizes, otherwise the integral
// of |F_a - F_b| over the merged support.
inline double wasserstein1(std::vector<double> a, std::vector<double> b) {
  detail::check_scores(a, "wasserstein1");
  detail::check_scores(b, "wasserstein1");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  if (a.size() == b.size()) {
    double total = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) total += std::abs(a[i] - b[i]);
    return total / static_cast<double>(a.size());
  }
  std::vector<double> grid = a;
  grid.insert(grid.end(), b.begin(), b.end());
  std::sort(grid.begin(), grid.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const double width = grid[i + 1] - grid[i];
    if (width == 0.0) continue;
    const double fa = static_cast<double>(std::upper_bound(a.begin(), a.end(),
                                                           grid[i]) -
                                          a.begin()) /
                      na;
    const double fb = static_cast<double>(std::upper_bound(b.begin(), b.end(),
                                                           grid[i]) -
                                          b.begin()) /
                      nb;
    total += std::abs(fa - fb) * width;
  }
  return total;
}

// Pearson correlation of average-ranked data; identical or exactly reversed
// rank vectors short-circuit to +/-1.
inline double spearman_rho(const std::vector<double>& x,
                           const std::vector<double>& y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("spearman_rho: size mismatch");
  }
  if (x.size() < 2) {
    throw std::invalid_argument("spearman_rho: needs >= 2 points");
  }
  const std::vector<double> rx = average_ranks(x);
  const std::vector<double> ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  bool same = true;
  bool reversed = true;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    same = same && rx[i] == ry[i];
    reversed = reversed && rx[i] + ry[i] == n + 1.0;
  }
  if (same) return 1.0;
  if (reversed) return -1.0;
  const double mean = (n + 1.0) / 2.0;
  double cov = 0.0;
  double vx = 0.0;
  double vy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mean;
    const double dy = ry[i] - mean;
    cov += dx * dy;
    vx += dx * dx;
    vy += dy * dy;
  }
  if (vx == 0.0 || vy == 0.0) {
    throw std::invalid_argument("spearman_rho: constant input");
  }
  return std::clamp(cov / std::sqrt(vx * vy), -1.0, 1.0);
}

}  // namespace avuc

#endif  // AVUC_METRICS_HPP_
