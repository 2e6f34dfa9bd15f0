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

#ifndef AVUC_REPORT_HPP_
#define AVUC_REPORT_HPP_

#include <cmath>
#include <fstream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "avuc/checkpoint.hpp"
#include "avuc/config.hpp"
#include "avuc/datasets.hpp"
#include "avuc/metrics.hpp"
#include "avuc/trainer.hpp"

namespace avuc {

// Scalar metrics of one model on one evaluation set.
struct EvalReport {
  std::string method;
  std::string shift = "none";
  int intensity = 0;
  std::size_t n = 0;
  int mc_samples = 1;
  double temperature = 1.0;
  double u_th = 0.0;
  double acc = 0.0;
  double ece = 0.0;
  double uce = 0.0;
  double nll = 0.0;
  double brier = 0.0;
  double avu = 0.0;
  double avu_auc = 0.0;
};

inline EvalReport make_report(const std::string& method,
                              const std::string& shift, int intensity,
                              const PredictiveBatch& batch, int mc_samples,
                              double temperature, double u_th) {
  EvalReport report;
  report.method = method;
  report.shift = shift;
  report.intensity = intensity;
  report.n = batch.size();
  report.mc_samples = mc_samples;
  report.temperature = temperature;
  report.u_th = u_th;
  std::vector<int> correct(batch.size());
  std::vector<int> errors(batch.size());
  std::vector<double> norm_u(batch.size());
  const double max_entropy = std::log(static_cast<double>(batch.probs.cols()));
  for (std::size_t i = 0; i < batch.size(); ++i) {
    correct[i] = batch.pred_label[i] == batch.true_label[i] ? 1 : 0;
    errors[i] = 1 - correct[i];
    norm_u[i] = batch.uncertainty[i] / max_entropy;
  }
  report.acc = accuracy(batch);
  report.ece = ece(batch.confidence, correct);
  report.uce = uce(norm_u, errors);
  report.nll = nll(batch.probs, batch.true_label);
  report.brier = brier(batch.probs, batch.true_label);
  report.avu = avu(hard_counts(batch, u_th));
  report.avu_auc = avu_auc(batch);
  return report;
}

inline nlohmann::json report_to_json(const EvalReport& report) {
  return {{"method", report.method},
          {"shift", report.shift},
          {"intensity", report.intensity},
          {"n", report.n},
          {"mc_samples", report.mc_samples},
          {"temperature", report.temperature},
          {"u_th", report.u_th},
          {"acc", report.acc},
          {"ece", report.ece},
          {"uce", report.uce},
          {"nll", report.nll},
          {"brier", report.brier},
          {"avu", report.avu},
          {"avu_auc", report.avu_auc}};
}

inline void save_report(const EvalReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open report file for write: " + path);
  out << report_to_json(report).dump(2) << "\n";
}

inline void write_aggregate_csv(const std::vector<EvalReport>& reports,
                                const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open aggregate file for write: " + path);
  out << "method,shift,intensity,acc,ece,uce,nll,brier,avu_auc\n";
  out.precision(17);
  for (const EvalReport& r : reports) {
    out << r.method << "," << r.shift << "," << r.intensity << "," << r.acc
        << "," << r.ece << "," << r.uce << "," << r.nll << "," << r.brier
        << "," << r.avu_auc << "\n";
  }
  if (!out) throw ConfigError("failed writing aggregate: " + path);
}

// Rank correlation of a calibration error against shift intensity,
// one row per shift kind. NaN when the metric is constant across
// intensities (correlation undefined).
struct SpearmanRow {
  std::string method;
  std::string shift;
  double rho_ece = 0.0;
  double rho_uce = 0.0;
};

inline double guarded_spearman(const std::vector<double>& x,
                               const std::vector<double>& y) {
  try {
    return spearman_rho(x, y);
  } catch (const std::invalid_argument&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

inline void write_spearman_csv(const std::vector<SpearmanRow>& rows,
                               const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open spearman file for write: " + path);
  out << "method,shift,rho_ece,rho_uce\n";
  out.precision(17);
  for (const SpearmanRow& r : rows) {
    out << r.method << "," << r.shift << "," << r.rho_ece << "," << r.rho_uce
        << "\n";
  }
  if (!out) throw ConfigError("failed writing spearman: " + path);
}

inline void write_threshold_curve(const std::string& path,
                                  const std::vector<double>& thresholds,
                                  const std::vector<double>& values) {
  if (thresholds.size() != values.size()) {
    throw std::invalid_argument("threshold curve: length mismatch");
  }
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open curve file for write: " + path);
  out << "threshold,value\n";
  out.precision(17);
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (std::isnan(values[i])) continue;
    out << thresholds[i] << "," << values[i] << "\n";
  }
  if (!out) throw ConfigError("failed writing curve: " + path);
}

// Thresholds swept across the batch's uncertainty range, plus the AvU and
// conditional-probability values at each stop.
struct ThresholdCurves {
  std::vector<double> thresholds;
  std::vector<double> avu;  // AvU at each threshold
  std::vector<double> pac;  // p(accurate | certain), NaN when undefined
  std::vector<double> pui;  // p(uncertain | inaccurate), NaN when undefined
};

inline ThresholdCurves threshold_curves(const PredictiveBatch& batch,
                                        int points = 21) {
  if (points < 2) {
    throw std::invalid_argument("threshold_curves: points must be >= 2");
  }
  double u_min = batch.uncertainty.front();
  double u_max = u_min;
  for (double u : batch.uncertainty) {
    u_min = std::min(u_min, u);
    u_max = std::max(u_max, u);
  }
  ThresholdCurves curves;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (int i = 0; i < points; ++i) {
    const double t =
        static_cast<double>(i) / static_cast<double>(points - 1);
    const double u_th = u_min + t * (u_max - u_min);
    curves.thresholds.push_back(u_th);
    curves.avu.push_back(avu(hard_counts(batch, u_th)));
    const ConditionalProbs cond = conditional_probs(batch, u_th);
    curves.pac.push_back(cond.p_accurate_given_certain.value_or(nan));
    curves.pui.push_back(cond.p_uncertain_given_inaccurate.value_or(nan));
  }
  return curves;
}

// Shift/OOD detection scores from predictive entropies: the shifted set is
// the detection-positive class and higher entropy means more shifted.
struct DetectReport {
  double auroc = 0.0;
  double aupr_in = 0.0;
  double aupr_out = 0.0;
  double detection_accuracy = 0.0;
  double wasserstein = 0.0;
  std::size_t n_in = 0;
  std::size_t n_shift = 0;
};

inline DetectReport detect_from_entropies(
    const std::vector<double>& entropies_in,
    const std::vector<double>& entropies_shift) {
  DetectReport report;
  report.auroc = auroc(entropies_shift, entropies_in);
  report.aupr_in = aupr_in(entropies_in, entropies_shift);
  report.aupr_out = aupr_out(entropies_in, entropies_shift);
  report.detection_accuracy =
      detection_accuracy(entropies_shift, entropies_in);
  report.wasserstein = wasserstein1(entropies_in, entropies_shift);
  report.n_in = entropies_in.size();
  report.n_shift = entropies_shift.size();
  return report;
}

inline nlohmann::json detect_report_to_json(const DetectReport& report) {
  return {{"auroc", report.auroc},
          {"aupr_in", report.aupr_in},
          {"aupr_out", report.aupr_out},
          {"detection_accuracy", report.detection_accuracy},
          {"wasserstein", report.wasserstein},
          {"n_in", report.n_in},
          {"n_shift", report.n_shift}};
}

inline void save_detect_report(const DetectReport& report,
                               const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open detect file for write: " + path);
  out << detect_report_to_json(report).dump(2) << "\n";
}

// Density histograms of two entropy samples over [0, max_entropy] with
// shared bins; each density integrates to one over the covered range.
inline void write_entropy_histogram(const std::string& path,
                                    const std::vector<double>& entropies_in,
                                    const std::vector<double>& entropies_shift,
                                    double max_entropy,
                                    std::size_t bins = kDefaultBins) {
  if (entropies_in.empty() || entropies_shift.empty()) {
    throw std::invalid_argument("entropy histogram: empty input");
  }
  if (max_entropy <= 0.0 || bins == 0) {
    throw std::invalid_argument("entropy histogram: bad bins or range");
  }
  const double width = max_entropy / static_cast<double>(bins);
  auto densities = [&](const std::vector<double>& values) {
    std::vector<double> out(bins, 0.0);
    for (double v : values) {
      auto idx = static_cast<long long>(std::floor(v / width));
      idx = std::max<long long>(0, std::min<long long>(idx, bins - 1));
      out[static_cast<std::size_t>(idx)] += 1.0;
    }
    for (double& d : out) {
      d /= static_cast<double>(values.size()) * width;
    }
    return out;
  };
  const std::vector<double> in_density = densities(entropies_in);
  const std::vector<double> shift_density = densities(entropies_shift);
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open histogram file for write: " + path);
  out << "bin_left,bin_right,density_in,density_shift\n";
  out.precision(17);
  for (std::size_t b = 0; b < bins; ++b) {
    out << b * width << "," << (b + 1) * width << "," << in_density[b] << ","
        << shift_density[b] << "\n";
  }
  if (!out) throw ConfigError("failed writing histogram: " + path);
}

// Full evaluation sweep: the clean test split plus every configured
// (shift kind, intensity) pair, all predicted with the checkpoint's
// temperature and scored at its stored uncertainty threshold.
struct EvaluationOutput {
  std::vector<EvalReport> reports;
  std::vector<SpearmanRow> spearman;
  ThresholdCurves in_dist_curves;
};

inline PredictiveBatch evaluate_batch(const Checkpoint& ckpt, Method method,
                                      const Dataset& data, int mc,
                                      std::uint64_t seed) {
  const auto [x, y] = subset(data, Split::test);
  if (y.empty()) throw std::invalid_argument("evaluate: empty test split");
  const McPrediction pred =
      predict(ckpt.model, method, x, mc, seed, ckpt.temperature);
  return PredictiveBatch::from_prediction(pred, y);
}

inline EvaluationOutput run_evaluation(const Checkpoint& ckpt, Method method,
                                       const Dataset& data,
                                       const EvaluateConfig& config,
                                       std::uint64_t master_seed) {
  if (!ckpt.u_th.has_value()) {
    throw ConfigError("evaluate: checkpoint has no uncertainty threshold");
  }
  const double u_th = *ckpt.u_th;
  const std::string method_name = to_string(method);
  EvaluationOutput output;

  const PredictiveBatch in_dist =
      evaluate_batch(ckpt, method, data, config.mc,
                     derive_seed(master_seed, "eval-none", 0));
  output.reports.push_back(make_report(method_name, "none", 0, in_dist,
                                       config.mc, ckpt.temperature, u_th));
  output.in_dist_curves = threshold_curves(in_dist);

  for (ShiftKind kind : config.shifts) {
    const std::string kind_name = to_string(kind);
    std::vector<double> intensities, eces, uces;
    for (int intensity : config.intensities) {
      ShiftSpec spec;
      spec.kind = kind;
      spec.intensity = intensity;
      spec.seed = derive_seed(master_seed, "shift-" + kind_name, intensity);
      const Dataset shifted = apply_shift(data, spec);
      const PredictiveBatch batch = evaluate_batch(
          ckpt, method, shifted, config.mc,
          derive_seed(master_seed, "eval-" + kind_name, intensity));
      const EvalReport report =
          make_report(method_name, kind_name, intensity, batch, config.mc,
                      ckpt.temperature, u_th);
      output.reports.push_back(report);
      intensities.push_back(static_cast<double>(intensity));
      eces.push_back(report.ece);
      uces.push_back(report.uce);
    }
    if (intensities.size() >= 2) {
      SpearmanRow row;
      row.method = method_name;
      row.shift = kind_name;
      row.rho_ece = guarded_spearman(intensities, eces);
      row.rho_uce = guarded_spearman(intensities, uces);
      output.spearman.push_back(row);
    }
  }
  return output;
}

inline void write_evaluation(const EvaluationOutput& output,
                             const std::string& dir) {
  for (const EvalReport& report : output.reports) {
    const std::string name =
        report.shift == "none"
            ? "report_in_dist.json"
            : "report_" + report.shift + "_" +
                  std::to_string(report.intensity) + ".json";
    save_report(report, dir + "/" + name);
  }
  write_aggregate_csv(output.reports, dir + "/aggregate.csv");
  write_spearman_csv(output.spearman, dir + "/spearman.csv");
  write_threshold_curve(dir + "/curve_avu.csv", output.in_dist_curves.thresholds,
                        output.in_dist_curves.avu);
  write_threshold_curve(dir + "/curve_pac.csv", output.in_dist_curves.thresholds,
                        output.in_dist_curves.pac);
  write_threshold_curve(dir + "/curve_pui.csv", output.in_dist_curves.thresholds,
                        output.in_dist_curves.pui);
}

}  // namespace avuc

#endif  // AVUC_REPORT_HPP_
