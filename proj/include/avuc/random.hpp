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

#ifndef AVUC_RANDOM_HPP_
#define AVUC_RANDOM_HPP_

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

#include "avuc/tensor.hpp"

namespace avuc {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent stream seed from the master seed and a tag.
// Every consumer of randomness gets its sub-seed through here so one
// config seed pins the whole pipeline.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return splitmix64(master ^ h);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                                 std::uint64_t index) {
  return splitmix64(derive_seed(master, tag) ^ splitmix64(index));
}

// Box-Muller on open-interval uniforms; one value per call, no cached spare,
// so the draw sequence depends only on how many calls were made.
inline double standard_normal(Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double u1 = 0.0;
  do {
    u1 = unit(rng);
  } while (u1 <= 0.0);
  double u2 = unit(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
}

inline Tensor normal_tensor(Shape shape, Rng& rng, double mean = 0.0,
                            double stddev = 1.0) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& v : t.data()) v = mean + stddev * standard_normal(rng);
  return t;
}

inline double uniform_real(Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  return d(rng);
}

}  // namespace avuc

#endif  // AVUC_RANDOM_HPP_
