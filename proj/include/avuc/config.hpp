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

#ifndef AVUC_CONFIG_HPP_
#define AVUC_CONFIG_HPP_

#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include <json.hpp>

#include "avuc/datasets.hpp"
#include "avuc/temperature.hpp"
#include "avuc/trainer.hpp"

namespace avuc {

struct DataConfig {
  std::string generator = "two_moons";
  std::size_t n = 1200;
  double noise = 0.2;      // two_moons
  std::size_t classes = 3;  // blobs
  std::size_t dim = 2;      // blobs
  double spread = 0.8;      // blobs
};

struct CalibrateConfig {
  CalibObjective objective = CalibObjective::nll;
};

struct EvaluateConfig {
  int mc = 32;
  std::vector<ShiftKind> shifts = all_shift_kinds();
  std::vector<int> intensities = {1, 2, 3, 4, 5};
};

// One experiment file with sections data/train/calibrate/evaluate. All
// randomness funnels through the single top-level seed; section seeds are
// derived from it with fixed tags.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  DataConfig data;
  TrainConfig train;
  CalibrateConfig calibrate;
  EvaluateConfig evaluate;
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& obj,
                                const std::string& section,
                                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) {
    throw ConfigError("config section '" + section + "' must be an object");
  }
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const char* name : allowed) {
      if (key == name) known = true;
    }
    if (!known) {
      throw ConfigError("config: unknown key '" + key + "' in section '" +
                        section + "'");
    }
  }
}

template <typename T>
T get_field(const nlohmann::json& obj, const std::string& section,
            const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config: bad value for '" + section + "." + key + "'");
  }
}

inline DataConfig parse_data_config(const nlohmann::json& obj) {
  DataConfig data;
  data.generator = get_field<std::string>(obj, "data", "generator",
                                          data.generator);
  if (data.generator == "two_moons") {
    reject_unknown_keys(obj, "data", {"generator", "n", "noise"});
    data.n = get_field<std::size_t>(obj, "data", "n", data.n);
    data.noise = get_field<double>(obj, "data", "noise", data.noise);
  } else if (data.generator == "blobs") {
    reject_unknown_keys(obj, "data",
                        {"generator", "n", "classes", "dim", "spread"});
    data.n = get_field<std::size_t>(obj, "data", "n", data.n);
    data.classes = get_field<std::size_t>(obj, "data", "classes",
                                          data.classes);
    data.dim = get_field<std::size_t>(obj, "data", "dim", data.dim);
    data.spread = get_field<double>(obj, "data", "spread", data.spread);
  } else {
    throw ConfigError("config: unknown data.generator '" + data.generator +
                      "'");
  }
  return data;
}

inline TrainConfig parse_train_config(const nlohmann::json& obj) {
  reject_unknown_keys(obj, "train",
                      {"method", "epochs", "batch_size", "lr", "schedule",
                       "optimizer", "momentum", "beta", "mc_train", "mc_eval",
                       "warmup_epochs", "hidden", "kl_scale"});
  TrainConfig train;
  train.method =
      parse_method(get_field<std::string>(obj, "train", "method", "svi"));
  train.epochs = get_field<int>(obj, "train", "epochs", train.epochs);
  train.batch_size =
      get_field<std::size_t>(obj, "train", "batch_size", train.batch_size);
  train.lr = get_field<double>(obj, "train", "lr", train.lr);
  train.optimizer = parse_optimizer(
      get_field<std::string>(obj, "train", "optimizer", "adam"));
  train.momentum = get_field<double>(obj, "train", "momentum", train.momentum);
  train.beta = get_field<double>(obj, "train", "beta", train.beta);
  train.mc_train = get_field<int>(obj, "train", "mc_train", train.mc_train);
  train.mc_eval = get_field<int>(obj, "train", "mc_eval", train.mc_eval);
  train.warmup_epochs =
      get_field<int>(obj, "train", "warmup_epochs", train.warmup_epochs);
  train.hidden =
      get_field<std::vector<int>>(obj, "train", "hidden", train.hidden);
  if (obj.contains("schedule")) {
    try {
      for (const auto& entry : obj.at("schedule")) {
        if (!entry.is_array() || entry.size() != 2) {
          throw ConfigError(
              "config: train.schedule entries must be [epoch, multiplier]");
        }
        train.schedule.emplace_back(entry[0].get<int>(),
                                    entry[1].get<double>());
      }
    } catch (const nlohmann::json::exception&) {
      throw ConfigError("config: bad value for 'train.schedule'");
    }
  }
  if (obj.contains("kl_scale") && !obj.at("kl_scale").is_null()) {
    train.kl_scale = get_field<double>(obj, "train", "kl_scale", 0.0);
  }
  return train;
}

inline CalibrateConfig parse_calibrate_config(const nlohmann::json& obj) {
  reject_unknown_keys(obj, "calibrate", {"objective"});
  CalibrateConfig calibrate;
  calibrate.objective = parse_objective(
      get_field<std::string>(obj, "calibrate", "objective", "nll"));
  return calibrate;
}

inline EvaluateConfig parse_evaluate_config(const nlohmann::json& obj) {
  reject_unknown_keys(obj, "evaluate", {"mc", "shifts", "intensities"});
  EvaluateConfig evaluate;
  evaluate.mc = get_field<int>(obj, "evaluate", "mc", evaluate.mc);
  if (evaluate.mc < 1) throw ConfigError("config: evaluate.mc must be >= 1");
  if (obj.contains("shifts")) {
    const nlohmann::json& shifts = obj.at("shifts");
    if (shifts.is_string() && shifts.get<std::string>() == "all") {
      evaluate.shifts = all_shift_kinds();
    } else if (shifts.is_array()) {
      evaluate.shifts.clear();
      for (const auto& entry : shifts) {
        if (!entry.is_string()) {
          throw ConfigError("config: evaluate.shifts entries must be strings");
        }
        evaluate.shifts.push_back(parse_shift_kind(entry.get<std::string>()));
      }
      if (evaluate.shifts.empty()) {
        throw ConfigError("config: evaluate.shifts is empty");
      }
    } else {
      throw ConfigError("config: evaluate.shifts must be 'all' or a list");
    }
  }
  if (obj.contains("intensities")) {
    evaluate.intensities =
        get_field<std::vector<int>>(obj, "evaluate", "intensities", {});
    if (evaluate.intensities.empty()) {
      throw ConfigError("config: evaluate.intensities is empty");
    }
    for (int i : evaluate.intensities) {
      if (i < 1 || i > 5) {
        throw ConfigError("config: evaluate.intensities must be in 1..5");
      }
    }
  }
  return evaluate;
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  detail::reject_unknown_keys(
      j, "<root>", {"seed", "data", "train", "calibrate", "evaluate"});
  if (!j.contains("seed")) throw ConfigError("config: missing seed");
  ExperimentConfig config;
  try {
    config.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config: seed must be a non-negative integer");
  }
  if (j.contains("data")) {
    config.data = detail::parse_data_config(j.at("data"));
  }
  if (j.contains("train")) {
    config.train = detail::parse_train_config(j.at("train"));
  }
  if (j.contains("calibrate")) {
    config.calibrate = detail::parse_calibrate_config(j.at("calibrate"));
  }
  if (j.contains("evaluate")) {
    config.evaluate = detail::parse_evaluate_config(j.at("evaluate"));
  }
  config.train.seed = derive_seed(config.seed, "train");
  try {
    validate_config(config.train);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return config;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return parse_config(j);
}

inline Dataset make_dataset(const DataConfig& data, std::uint64_t master_seed) {
  const std::uint64_t seed = derive_seed(master_seed, "data");
  try {
    if (data.generator == "two_moons") {
      return make_two_moons(data.n, data.noise, seed);
    }
    return make_blobs(data.n, data.classes, data.dim, data.spread, seed);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: data: ") + e.what());
  }
}

}  // namespace avuc

#endif  // AVUC_CONFIG_HPP_
