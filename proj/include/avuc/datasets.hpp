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

#ifndef AVUC_DATASETS_HPP_
#define AVUC_DATASETS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "avuc/random.hpp"
#include "avuc/tensor.hpp"

namespace avuc {

inline constexpr double kTrainFraction = 0.6;
inline constexpr double kValFraction = 0.2;

enum class Split { train, val, test };

inline std::string to_string(Split split) {
  switch (split) {
    case Split::train:
      return "train";
    case Split::val:
      return "val";
    case Split::test:
      return "test";
  }
  throw std::invalid_argument("unknown split");
}

inline Split parse_split(const std::string& name) {
  if (name == "train") return Split::train;
  if (name == "val") return Split::val;
  if (name == "test") return Split::test;
  throw ConfigError("unknown split: " + name);
}

// Feature matrix plus labels, split tags, and a descriptor that fully
// determines regeneration. OOD sets use the sentinel label -1.
struct Dataset {
  Tensor features;  // (N, d)
  std::vector<int> labels;
  std::vector<Split> split;
  nlohmann::json descriptor;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return features.cols(); }
};

inline std::size_t num_classes(const Dataset& data) {
  int max_label = -1;
  for (int l : data.labels) max_label = std::max(max_label, l);
  if (max_label < 0) {
    throw std::invalid_argument("num_classes: dataset has no labeled rows");
  }
  return static_cast<std::size_t>(max_label) + 1;
}

// Features and labels restricted to one split tag.
inline std::pair<Tensor, std::vector<int>> subset(const Dataset& data,
                                                  Split split) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.split[i] == split) rows.push_back(i);
  }
  Tensor features = Tensor::zeros({rows.size(), data.dim()});
  std::vector<int> labels(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < data.dim(); ++c) {
      features.at(r, c) = data.features.at(rows[r], c);
    }
    labels[r] = data.labels[rows[r]];
  }
  return {std::move(features), std::move(labels)};
}

namespace detail {

// Stratified 60/20/20 assignment: every class puts at least one example
// into the train split; order within a class is shuffled deterministically.
inline std::vector<Split> assign_splits(const std::vector<int>& labels,
                                        std::uint64_t seed) {
  std::vector<Split> out(labels.size(), Split::train);
  int max_label = 0;
  for (int l : labels) max_label = std::max(max_label, l);
  Rng rng(derive_seed(seed, "splits"));
  for (int k = 0; k <= max_label; ++k) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == k) rows.push_back(i);
    }
    std::shuffle(rows.begin(), rows.end(), rng);
    const std::size_t n = rows.size();
    std::size_t n_train = static_cast<std::size_t>(
        std::ceil(kTrainFraction * static_cast<double>(n)));
    n_train = std::max<std::size_t>(n_train, 1);
    const std::size_t n_val = static_cast<std::size_t>(
        std::floor(kValFraction * static_cast<double>(n)));
    for (std::size_t r = 0; r < n; ++r) {
      if (r < n_train) {
        out[rows[r]] = Split::train;
      } else if (r < n_train + n_val) {
        out[rows[r]] = Split::val;
      } else {
        out[rows[r]] = Split::test;
      }
    }
  }
  return out;
}

}  // namespace detail

// Two interleaved half-circles: class 0 on the unit circle at the origin
// (upper half), class 1 on a unit circle centered at (1, 0.5) (lower half).
// Gaussian coordinate noise on top.
inline Dataset make_two_moons(std::size_t n, double noise,
                              std::uint64_t seed) {
  if (n < 4) throw std::invalid_argument("make_two_moons: n must be >= 4");
  if (noise < 0.0) {
    throw std::invalid_argument("make_two_moons: noise must be >= 0");
  }
  const std::size_t n0 = n / 2;
  const std::size_t n1 = n - n0;
  Rng rng(derive_seed(seed, "two_moons"));
  std::vector<double> flat;
  flat.reserve(2 * n);
  std::vector<int> labels;
  labels.reserve(n);
  const double pi = std::acos(-1.0);
  for (std::size_t i = 0; i < n0; ++i) {
    const double t = pi * static_cast<double>(i) / static_cast<double>(n0 - 1);
    flat.push_back(std::cos(t) + noise * standard_normal(rng));
    flat.push_back(std::sin(t) + noise * standard_normal(rng));
    labels.push_back(0);
  }
  for (std::size_t i = 0; i < n1; ++i) {
    const double t = pi * static_cast<double>(i) / static_cast<double>(n1 - 1);
    flat.push_back(1.0 - std::cos(t) + noise * standard_normal(rng));
    flat.push_back(0.5 - std::sin(t) + noise * standard_normal(rng));
    labels.push_back(1);
  }
  Dataset data;
  data.features = Tensor::matrix(n, 2, std::move(flat));
  data.split = detail::assign_splits(labels, seed);
  data.labels = std::move(labels);
  data.descriptor = {{"generator", "two_moons"},
                     {"n", n},
                     {"noise", noise},
                     {"seed", seed}};
  return data;
}

// Gaussian blobs around centroids placed on a radius-3 circle in the first
// two feature dimensions; remaining dimensions center at zero.
inline Dataset make_blobs(std::size_t n, std::size_t classes, std::size_t dim,
                          double spread, std::uint64_t seed) {
  if (n < classes || classes < 2) {
    throw std::invalid_argument("make_blobs: need n >= classes >= 2");
  }
  if (dim < 2) throw std::invalid_argument("make_blobs: dim must be >= 2");
  if (spread < 0.0) {
    throw std::invalid_argument("make_blobs: spread must be >= 0");
  }
  Rng rng(derive_seed(seed, "blobs"));
  const double pi = std::acos(-1.0);
  std::vector<double> flat;
  flat.reserve(n * dim);
  std::vector<int> labels;
  labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = i % classes;
    const double angle =
        2.0 * pi * static_cast<double>(k) / static_cast<double>(classes);
    for (std::size_t c = 0; c < dim; ++c) {
      double center = 0.0;
      if (c == 0) center = 3.0 * std::cos(angle);
      if (c == 1) center = 3.0 * std::sin(angle);
      flat.push_back(center + spread * standard_normal(rng));
    }
    labels.push_back(static_cast<int>(k));
  }
  Dataset data;
  data.features = Tensor::matrix(n, dim, std::move(flat));
  data.split = detail::assign_splits(labels, seed);
  data.labels = std::move(labels);
  data.descriptor = {{"generator", "blobs"}, {"n", n},
                     {"classes", classes},   {"dim", dim},
                     {"spread", spread},     {"seed", seed}};
  return data;
}

enum class ShiftKind { gauss_noise, feature_blur, rotation, scale, mean_shift };

inline std::string to_string(ShiftKind kind) {
  switch (kind) {
    case ShiftKind::gauss_noise:
      return "gauss_noise";
    case ShiftKind::feature_blur:
      return "feature_blur";
    case ShiftKind::rotation:
      return "rotation";
    case ShiftKind::scale:
      return "scale";
    case ShiftKind::mean_shift:
      return "mean_shift";
  }
  throw std::invalid_argument("unknown shift kind");
}

inline ShiftKind parse_shift_kind(const std::string& name) {
  if (name == "gauss_noise") return ShiftKind::gauss_noise;
  if (name == "feature_blur") return ShiftKind::feature_blur;
  if (name == "rotation") return ShiftKind::rotation;
  if (name == "scale") return ShiftKind::scale;
  if (name == "mean_shift") return ShiftKind::mean_shift;
  throw ConfigError("unknown shift kind: " + name);
}

inline const std::vector<ShiftKind>& all_shift_kinds() {
  static const std::vector<ShiftKind> kinds = {
      ShiftKind::gauss_noise, ShiftKind::feature_blur, ShiftKind::rotation,
      ShiftKind::scale, ShiftKind::mean_shift};
  return kinds;
}

struct ShiftSpec {
  ShiftKind kind = ShiftKind::gauss_noise;
  int intensity = 1;  // 1..5
  std::uint64_t seed = 0;
};

// Label- and size-preserving feature corruption; severity grows linearly
// with intensity. Per kind:
//   gauss_noise   adds sigma N(0, I), sigma = 0.1 i
//   feature_blur  x <- (1 - a) x + a rowmean(x), a = 0.15 i
//   rotation      rotates the first two dims by 0.15 i radians
//   scale         multiplies x by (1 + 0.2 i)
//   mean_shift    adds 0.2 i times the normalized all-ones vector
inline Dataset apply_shift(const Dataset& data, const ShiftSpec& spec) {
  if (spec.intensity < 1 || spec.intensity > 5) {
    throw std::invalid_argument("apply_shift: intensity must be in 1..5");
  }
  if (data.size() == 0) throw std::invalid_argument("apply_shift: empty data");
  const double i = static_cast<double>(spec.intensity);
  const std::size_t dim = data.dim();
  Dataset out = data;
  switch (spec.kind) {
    case ShiftKind::gauss_noise: {
      Rng rng(derive_seed(spec.seed, "gauss_noise", spec.intensity));
      const double sigma = 0.1 * i;
      for (double& v : out.features.data()) {
        v += sigma * standard_normal(rng);
      }
      break;
    }
    case ShiftKind::feature_blur: {
      const double alpha = 0.15 * i;
      for (std::size_t r = 0; r < out.size(); ++r) {
        double mean = 0.0;
        for (std::size_t c = 0; c < dim; ++c) mean += out.features.at(r, c);
        mean /= static_cast<double>(dim);
        for (std::size_t c = 0; c < dim; ++c) {
          out.features.at(r, c) =
              (1.0 - alpha) * out.features.at(r, c) + alpha * mean;
        }
      }
      break;
    }
    case ShiftKind::rotation: {
      if (dim < 2) {
        throw std::invalid_argument("apply_shift: rotation needs dim >= 2");
      }
      const double theta = 0.15 * i;
      const double c = std::cos(theta);
      const double s = std::sin(theta);
      for (std::size_t r = 0; r < out.size(); ++r) {
        const double x = out.features.at(r, 0);
        const double y = out.features.at(r, 1);
        out.features.at(r, 0) = c * x - s * y;
        out.features.at(r, 1) = s * x + c * y;
      }
      break;
    }
    case ShiftKind::scale: {
      const double factor = 1.0 + 0.2 * i;
      for (double& v : out.features.data()) v *= factor;
      break;
    }
    case ShiftKind::mean_shift: {
      const double step = 0.2 * i / std::sqrt(static_cast<double>(dim));
      for (double& v : out.features.data()) v += step;
      break;
    }
  }
  out.descriptor = {{"generator", "shift"},
                    {"base", data.descriptor},
                    {"kind", to_string(spec.kind)},
                    {"intensity", spec.intensity},
                    {"seed", spec.seed}};
  return out;
}

// Samples on a sphere of radius 5x the largest training-row norm, so every
// OOD point sits further than twice the training radius from any training
// point. Labels use the sentinel -1; all rows tagged test.
inline Dataset make_ood(const Dataset& data, std::uint64_t seed) {
  if (data.size() == 0) throw std::invalid_argument("make_ood: empty data");
  double max_norm = 0.0;
  for (std::size_t r = 0; r < data.size(); ++r) {
    if (data.split[r] != Split::train) continue;
    double sq = 0.0;
    for (std::size_t c = 0; c < data.dim(); ++c) {
      sq += data.features.at(r, c) * data.features.at(r, c);
    }
    max_norm = std::max(max_norm, std::sqrt(sq));
  }
  if (max_norm == 0.0) {
    throw std::invalid_argument("make_ood: training split has zero radius");
  }
  const double radius = 5.0 * max_norm;
  Rng rng(derive_seed(seed, "ood_ring"));
  Dataset out;
  out.features = Tensor::zeros({data.size(), data.dim()});
  out.labels.assign(data.size(), -1);
  out.split.assign(data.size(), Split::test);
  for (std::size_t r = 0; r < data.size(); ++r) {
    double sq = 0.0;
    std::vector<double> dir(data.dim());
    do {
      sq = 0.0;
      for (std::size_t c = 0; c < data.dim(); ++c) {
        dir[c] = standard_normal(rng);
        sq += dir[c] * dir[c];
      }
    } while (sq == 0.0);
    const double scale = radius / std::sqrt(sq);
    for (std::size_t c = 0; c < data.dim(); ++c) {
      out.features.at(r, c) = dir[c] * scale;
    }
  }
  out.descriptor = {{"generator", "ood_ring"},
                    {"base", data.descriptor},
                    {"seed", seed}};
  return out;
}

// Rebuilds a dataset from its descriptor.
inline Dataset dataset_from_descriptor(const nlohmann::json& descriptor) {
  if (!descriptor.contains("generator")) {
    throw ConfigError("descriptor: missing generator");
  }
  const std::string generator = descriptor.at("generator").get<std::string>();
  try {
    if (generator == "two_moons") {
      return make_two_moons(descriptor.at("n").get<std::size_t>(),
                            descriptor.at("noise").get<double>(),
                            descriptor.at("seed").get<std::uint64_t>());
    }
    if (generator == "blobs") {
      return make_blobs(descriptor.at("n").get<std::size_t>(),
                        descriptor.at("classes").get<std::size_t>(),
                        descriptor.at("dim").get<std::size_t>(),
                        descriptor.at("spread").get<double>(),
                        descriptor.at("seed").get<std::uint64_t>());
    }
    if (generator == "shift") {
      ShiftSpec spec;
      spec.kind = parse_shift_kind(descriptor.at("kind").get<std::string>());
      spec.intensity = descriptor.at("intensity").get<int>();
      spec.seed = descriptor.at("seed").get<std::uint64_t>();
      return apply_shift(dataset_from_descriptor(descriptor.at("base")), spec);
    }
    if (generator == "ood_ring") {
      return make_ood(dataset_from_descriptor(descriptor.at("base")),
                      descriptor.at("seed").get<std::uint64_t>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("descriptor: ") + e.what());
  }
  throw ConfigError("descriptor: unknown generator " + generator);
}

inline void save_dataset(const Dataset& data, const std::string& path) {
  if (data.size() == 0) throw std::invalid_argument("save_dataset: empty data");
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open dataset file for write: " + path);
  for (std::size_t c = 0; c < data.dim(); ++c) out << "f" << c << ",";
  out << "label,split\n";
  out.precision(17);
  for (std::size_t r = 0; r < data.size(); ++r) {
    for (std::size_t c = 0; c < data.dim(); ++c) {
      out << data.features.at(r, c) << ",";
    }
    out << data.labels[r] << "," << to_string(data.split[r]) << "\n";
  }
  if (!out) throw ConfigError("failed writing dataset: " + path);
}

inline Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("dataset is empty: " + path);
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) header.push_back(field);
  }
  if (header.size() < 3 || header[header.size() - 2] != "label" ||
      header.back() != "split") {
    throw ConfigError("dataset has unexpected header: " + path);
  }
  const std::size_t dim = header.size() - 2;
  for (std::size_t c = 0; c < dim; ++c) {
    if (header[c] != "f" + std::to_string(c)) {
      throw ConfigError("dataset has unexpected header: " + path);
    }
  }
  std::vector<double> flat;
  std::vector<int> labels;
  std::vector<Split> split;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != header.size()) {
      throw ConfigError("dataset row " + std::to_string(line_no) +
                        " has wrong field count");
    }
    try {
      for (std::size_t c = 0; c < dim; ++c) {
        flat.push_back(std::stod(fields[c]));
      }
      labels.push_back(std::stoi(fields[dim]));
    } catch (const std::exception&) {
      throw ConfigError("dataset row " + std::to_string(line_no) +
                        " is not numeric");
    }
    split.push_back(parse_split(fields[dim + 1]));
    if (labels.back() < -1) {
      throw ConfigError("dataset row " + std::to_string(line_no) +
                        " has invalid label");
    }
  }
  if (labels.empty()) throw ConfigError("dataset has no rows: " + path);
  Dataset data;
  data.features = Tensor::matrix(labels.size(), dim, std::move(flat));
  check_finite(data.features, "load_dataset");
  data.labels = std::move(labels);
  data.split = std::move(split);
  data.descriptor = {{"generator", "file"}, {"path", path}};
  return data;
}

}  // namespace avuc

#endif  // AVUC_DATASETS_HPP_
