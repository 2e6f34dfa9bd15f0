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

#ifndef AVUC_CHECKPOINT_HPP_
#define AVUC_CHECKPOINT_HPP_

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "avuc/variational.hpp"

namespace avuc {

struct Checkpoint {
  BnnModel model;
  std::optional<double> u_th;
  double temperature = 1.0;
};

namespace detail {

// Layer arrays are stored flat: weight matrix row-major (out x in),
// then the bias vector (out).
inline std::vector<double> flatten_params(const Tensor& w, const Tensor& b) {
  std::vector<double> flat = w.data();
  flat.insert(flat.end(), b.data().begin(), b.data().end());
  return flat;
}

inline void split_params(const std::vector<double>& flat, std::size_t out,
                         std::size_t in, Tensor& w, Tensor& b) {
  if (flat.size() != out * in + out) {
    throw ConfigError("checkpoint layer array has wrong length");
  }
  w = Tensor({out, in},
             std::vector<double>(flat.begin(), flat.begin() + out * in));
  b = Tensor({out}, std::vector<double>(flat.begin() + out * in, flat.end()));
}

}  // namespace detail

inline nlohmann::json checkpoint_to_json(const Checkpoint& ckpt) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["class_count"] = ckpt.model.class_count;
  j["temperature"] = ckpt.temperature;
  if (ckpt.u_th.has_value()) {
    j["u_th"] = *ckpt.u_th;
  } else {
    j["u_th"] = nullptr;
  }
  j["layers"] = nlohmann::json::array();
  for (const auto& layer : ckpt.model.layers) {
    nlohmann::json lj;
    lj["in"] = layer.in;
    lj["out"] = layer.out;
    lj["mu"] = detail::flatten_params(layer.w_mu.value(), layer.b_mu.value());
    lj["rho"] = detail::flatten_params(layer.w_rho.value(), layer.b_rho.value());
    lj["prior_mean"] =
        detail::flatten_params(layer.w_prior_mean, layer.b_prior_mean);
    lj["prior_std"] = layer.prior_std;
    j["layers"].push_back(lj);
  }
  return j;
}

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("format_version") ||
      j["format_version"] != 1) {
    throw ConfigError("checkpoint: missing or unsupported format_version");
  }
  for (const char* key : {"layers", "class_count", "u_th", "temperature"}) {
    if (!j.contains(key)) {
      throw ConfigError(std::string("checkpoint: missing key ") + key);
    }
  }
  Checkpoint ckpt;
  ckpt.model.class_count = j["class_count"].get<int>();
  ckpt.temperature = j["temperature"].get<double>();
  if (!j["u_th"].is_null()) ckpt.u_th = j["u_th"].get<double>();
  if (ckpt.temperature <= 0.0) {
    throw ConfigError("checkpoint: temperature must be positive");
  }
  for (const auto& lj : j["layers"]) {
    VariationalLinear layer;
    layer.in = lj["in"].get<std::size_t>();
    layer.out = lj["out"].get<std::size_t>();
    layer.prior_std = lj["prior_std"].get<double>();
    if (layer.prior_std <= 0.0) {
      throw ConfigError("checkpoint: prior_std must be positive");
    }
    Tensor w, b;
    detail::split_params(lj["mu"].get<std::vector<double>>(), layer.out,
                         layer.in, w, b);
    layer.w_mu = parameter(w);
    layer.b_mu = parameter(b);
    detail::split_params(lj["rho"].get<std::vector<double>>(), layer.out,
                         layer.in, w, b);
    layer.w_rho = parameter(w);
    layer.b_rho = parameter(b);
    detail::split_params(lj["prior_mean"].get<std::vector<double>>(), layer.out,
                         layer.in, layer.w_prior_mean, layer.b_prior_mean);
    ckpt.model.layers.push_back(std::move(layer));
  }
  if (ckpt.model.layers.empty()) throw ConfigError("checkpoint: no layers");
  if (ckpt.model.layers.back().out !=
      static_cast<std::size_t>(ckpt.model.class_count)) {
    throw ConfigError("checkpoint: last layer width != class_count");
  }
  return ckpt;
}

inline void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open checkpoint file for write: " + path);
  out << checkpoint_to_json(ckpt).dump(2) << "\n";
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open checkpoint file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("checkpoint parse error: ") + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace avuc

#endif  // AVUC_CHECKPOINT_HPP_
