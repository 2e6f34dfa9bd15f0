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

#ifndef AVUC_TEMPERATURE_HPP_
#define AVUC_TEMPERATURE_HPP_

#include <cmath>
#include <cstddef>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "avuc/avu_loss.hpp"
#include "avuc/graph.hpp"
#include "avuc/tensor.hpp"
#include "avuc/uncertainty.hpp"

namespace avuc {

inline constexpr double kTemperatureLr = 0.005;
inline constexpr std::size_t kTemperatureMaxIters = 500;
inline constexpr double kTemperatureTol = 1e-7;

enum class CalibObjective { nll, avuc, au_avuc };

inline std::string to_string(CalibObjective objective) {
  switch (objective) {
    case CalibObjective::nll:
      return "nll";
    case CalibObjective::avuc:
      return "avuc";
    case CalibObjective::au_avuc:
      return "au-avuc";
  }
  throw std::invalid_argument("unknown calibration objective");
}

inline CalibObjective parse_objective(const std::string& name) {
  if (name == "nll") return CalibObjective::nll;
  if (name == "avuc") return CalibObjective::avuc;
  if (name == "au-avuc") return CalibObjective::au_avuc;
  throw ConfigError("unknown calibration objective: " + name);
}

// Frozen per-example logits, one tensor per Monte Carlo sample. Vanilla
// models dump a single sample.
struct CalibrationData {
  std::vector<Tensor> logit_samples;  // each (B, K)
  std::vector<int> labels;            // B
};

namespace detail {

inline void check_calibration_data(const CalibrationData& data,
                                   const char* op) {
  if (data.logit_samples.empty()) {
    throw std::invalid_argument(std::string(op) + ": no logit samples");
  }
  const Shape& shape = data.logit_samples.front().shape();
  if (shape.size() != 2 || shape[0] == 0 || shape[1] < 2) {
    throw std::invalid_argument(std::string(op) + ": logits must be (B, K)");
  }
  for (const Tensor& t : data.logit_samples) {
    if (t.shape() != shape) {
      throw std::invalid_argument(std::string(op) +
                                  ": inconsistent logit shapes");
    }
  }
  if (data.labels.size() != shape[0]) {
    throw std::invalid_argument(std::string(op) + ": label count mismatch");
  }
  for (int label : data.labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= shape[1]) {
      throw std::invalid_argument(std::string(op) + ": label out of range");
    }
  }
}

}  // namespace detail

// softmax(logits / t), row-wise; argmax is preserved for every t > 0.
inline Tensor apply_temperature(const Tensor& logits, double t) {
  if (!(t > 0.0)) {
    throw std::invalid_argument("apply_temperature: temperature must be > 0");
  }
  if (logits.shape().size() != 2) {
    throw std::invalid_argument("apply_temperature: logits must be (B, K)");
  }
  Tensor scaled = logits;
  for (double& v : scaled.data()) v /= t;
  return softmax_values(scaled);
}

// Monte Carlo predictive distribution from a frozen dump: temperature
// divides the logits of every sample before averaging.
inline Tensor mc_mean_probs(const CalibrationData& data, double t) {
  detail::check_calibration_data(data, "mc_mean_probs");
  Tensor mean = Tensor::zeros(data.logit_samples.front().shape());
  for (const Tensor& logits : data.logit_samples) {
    const Tensor probs = apply_temperature(logits, t);
    for (std::size_t i = 0; i < mean.numel(); ++i) {
      mean.data()[i] += probs.data()[i];
    }
  }
  const double scale = 1.0 / static_cast<double>(data.logit_samples.size());
  for (double& v : mean.data()) v *= scale;
  return mean;
}

struct TemperatureFit {
  double temperature = 1.0;
  CalibObjective objective = CalibObjective::nll;
  std::optional<double> u_th;
  double final_objective = 0.0;
  std::size_t iterations = 0;
};

namespace detail {

inline Value temperature_objective(const CalibrationData& data,
                                   CalibObjective objective,
                                   const std::optional<double>& u_th,
                                   const Value& log_t) {
  const Value t = exp(log_t);
  std::vector<Value> scaled;
  scaled.reserve(data.logit_samples.size());
  for (const Tensor& logits : data.logit_samples) {
    scaled.push_back(divide(constant(logits), t));
  }
  const SoftBatch batch = soft_batch_from_logits(scaled, data.labels);
  switch (objective) {
    case CalibObjective::nll:
      return negate(
          mean(log_eps(gather_cols(batch.probs, data.labels), kEntropyEps)));
    case CalibObjective::avuc:
      return avuc_loss(soft_counts(batch, *u_th));
    case CalibObjective::au_avuc:
      return au_avuc_loss(batch, default_t_grid());
  }
  throw std::invalid_argument("unknown calibration objective");
}

}  // namespace detail

// Gradient descent on log T; deterministic given the frozen dump. Falls
// back to T = 1 when the fitted temperature would end up with a worse
// objective than the uncalibrated one.
inline TemperatureFit fit_temperature(
    const CalibrationData& data, CalibObjective objective,
    std::optional<double> u_th = std::nullopt) {
  detail::check_calibration_data(data, "fit_temperature");
  if (objective == CalibObjective::avuc && !u_th.has_value()) {
    const Tensor probs = mc_mean_probs(data, 1.0);
    const PredictiveBatch batch = PredictiveBatch::from_probs(probs, data.labels);
    std::vector<bool> correct(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      correct[i] = batch.pred_label[i] == batch.true_label[i];
    }
    u_th = learn_threshold(batch.uncertainty, correct).u_th;
  }

  const auto eval = [&](double lt) {
    Value log_t = parameter(Tensor::scalar(lt));
    Value obj = detail::temperature_objective(data, objective, u_th, log_t);
    obj.backward();
    return std::pair<double, double>(obj.value().item(), log_t.grad().item());
  };

  double log_t = 0.0;
  auto [prev, grad] = eval(log_t);
  const double objective_at_unit = prev;
  std::size_t iterations = 0;
  for (std::size_t it = 1; it <= kTemperatureMaxIters; ++it) {
    log_t -= kTemperatureLr * grad;
    const auto [value, g] = eval(log_t);
    iterations = it;
    grad = g;
    const double delta = std::abs(value - prev);
    prev = value;
    if (delta < kTemperatureTol) break;
  }

  TemperatureFit fit;
  fit.objective = objective;
  fit.u_th = u_th;
  fit.iterations = iterations;
  if (prev > objective_at_unit) {
    fit.temperature = 1.0;
    fit.final_objective = objective_at_unit;
  } else {
    fit.temperature = std::exp(log_t);
    fit.final_objective = prev;
  }
  return fit;
}

inline nlohmann::json fit_to_json(const TemperatureFit& fit) {
  nlohmann::json j;
  j["temperature"] = fit.temperature;
  j["objective"] = to_string(fit.objective);
  j["u_th"] = fit.u_th.has_value() ? nlohmann::json(*fit.u_th)
                                   : nlohmann::json(nullptr);
  j["final_objective"] = fit.final_objective;
  j["iterations"] = fit.iterations;
  return j;
}

inline TemperatureFit fit_from_json(const nlohmann::json& j) {
  for (const char* key :
       {"temperature", "objective", "u_th", "final_objective", "iterations"}) {
    if (!j.contains(key)) {
      throw ConfigError(std::string("temperature fit: missing key ") + key);
    }
  }
  TemperatureFit fit;
  fit.temperature = j.at("temperature").get<double>();
  if (!(fit.temperature > 0.0)) {
    throw ConfigError("temperature fit: temperature must be positive");
  }
  fit.objective = parse_objective(j.at("objective").get<std::string>());
  if (!j.at("u_th").is_null()) fit.u_th = j.at("u_th").get<double>();
  fit.final_objective = j.at("final_objective").get<double>();
  fit.iterations = j.at("iterations").get<std::size_t>();
  return fit;
}

inline void save_fit(const TemperatureFit& fit, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open fit file for write: " + path);
  out << fit_to_json(fit).dump(2) << "\n";
}

inline TemperatureFit load_fit(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open fit file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("fit parse error: ") + e.what());
  }
  return fit_from_json(j);
}

// Dump format: header then one row per (sample, mc) pair,
// sample_index,mc_index,label,logit_0..logit_{K-1}.
inline void write_logit_dump(const CalibrationData& data,
                             const std::string& path) {
  detail::check_calibration_data(data, "write_logit_dump");
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open logit dump for write: " + path);
  const std::size_t rows = data.logit_samples.front().rows();
  const std::size_t cols = data.logit_samples.front().cols();
  out << "sample_index,mc_index,label";
  for (std::size_t k = 0; k < cols; ++k) out << ",logit_" << k;
  out << "\n";
  out.precision(17);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t s = 0; s < data.logit_samples.size(); ++s) {
      out << i << "," << s << "," << data.labels[i];
      for (std::size_t k = 0; k < cols; ++k) {
        out << "," << data.logit_samples[s].at(i, k);
      }
      out << "\n";
    }
  }
  if (!out) throw ConfigError("failed writing logit dump: " + path);
}

inline CalibrationData read_logit_dump(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open logit dump: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("logit dump is empty: " + path);
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) header.push_back(field);
  }
  if (header.size() < 4 || header[0] != "sample_index" ||
      header[1] != "mc_index" || header[2] != "label" ||
      header[3] != "logit_0") {
    throw ConfigError("logit dump has unexpected header: " + path);
  }
  const std::size_t cols = header.size() - 3;
  for (std::size_t k = 0; k < cols; ++k) {
    if (header[3 + k] != "logit_" + std::to_string(k)) {
      throw ConfigError("logit dump has unexpected header: " + path);
    }
  }

  struct Row {
    std::size_t sample;
    std::size_t mc;
    int label;
    std::vector<double> logits;
  };
  std::vector<Row> parsed;
  std::size_t max_sample = 0;
  std::size_t max_mc = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != header.size()) {
      throw ConfigError("logit dump row " + std::to_string(line_no) +
                        " has wrong field count");
    }
    Row row;
    try {
      row.sample = std::stoul(fields[0]);
      row.mc = std::stoul(fields[1]);
      row.label = std::stoi(fields[2]);
      for (std::size_t k = 0; k < cols; ++k) {
        row.logits.push_back(std::stod(fields[3 + k]));
      }
    } catch (const std::exception&) {
      throw ConfigError("logit dump row " + std::to_string(line_no) +
                        " is not numeric");
    }
    max_sample = std::max(max_sample, row.sample);
    max_mc = std::max(max_mc, row.mc);
    parsed.push_back(std::move(row));
  }
  if (parsed.empty()) throw ConfigError("logit dump has no rows: " + path);

  const std::size_t n_samples = max_sample + 1;
  const std::size_t n_mc = max_mc + 1;
  if (parsed.size() != n_samples * n_mc) {
    throw ConfigError("logit dump has missing or duplicate rows: " + path);
  }
  CalibrationData data;
  data.labels.assign(n_samples, -1);
  data.logit_samples.assign(n_mc, Tensor::zeros({n_samples, cols}));
  std::vector<char> seen(n_samples * n_mc, 0);
  for (const Row& row : parsed) {
    char& flag = seen[row.sample * n_mc + row.mc];
    if (flag) throw ConfigError("logit dump has duplicate rows: " + path);
    flag = 1;
    if (data.labels[row.sample] == -1) {
      data.labels[row.sample] = row.label;
    } else if (data.labels[row.sample] != row.label) {
      throw ConfigError("logit dump labels disagree for sample " +
                        std::to_string(row.sample));
    }
    for (std::size_t k = 0; k < cols; ++k) {
      data.logit_samples[row.mc].at(row.sample, k) = row.logits[k];
    }
  }
  detail::check_calibration_data(data, "read_logit_dump");
  return data;
}

}  // namespace avuc

#endif  // AVUC_TEMPERATURE_HPP_
