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

#ifndef AVUC_TESTS_SUPPORT_HPP_
#define AVUC_TESTS_SUPPORT_HPP_

#include <cmath>
#include <functional>
#include <vector>

#include "avuc/graph.hpp"
#include "avuc/random.hpp"
#include "avuc/tensor.hpp"

namespace avuc::testing {

// Central finite differences of a scalar-valued rebuild against one
// parameter tensor. The builder must be deterministic (freeze any noise).
inline Tensor fd_gradient(const std::function<double()>& eval, Value param,
                          double h = 1e-5) {
  Tensor& x = param.mutable_value();
  Tensor g = Tensor::zeros_like(x);
  for (std::size_t i = 0; i < x.numel(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double plus = eval();
    x[i] = saved - h;
    const double minus = eval();
    x[i] = saved;
    g[i] = (plus - minus) / (2.0 * h);
  }
  return g;
}

// |a - f| / max(floor, |a|, |f|); the floor keeps finite-difference noise
// on near-zero gradients from reading as relative error.
inline double max_rel_err(const Tensor& analytic, const Tensor& fd,
                          double floor = 1e-2) {
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.numel(); ++i) {
    const double denom =
        std::max({floor, std::abs(analytic[i]), std::abs(fd[i])});
    worst = std::max(worst, std::abs(analytic[i] - fd[i]) / denom);
  }
  return worst;
}

// Full check of one scalar loss against every parameter: analytic gradients
// from one backward pass vs central differences from rebuilds.
inline double gradcheck(const std::function<Value()>& build,
                        std::vector<Value> params, double h = 1e-5,
                        double floor = 1e-2) {
  for (Value& p : params) p.zero_grad();
  build().backward();
  double worst = 0.0;
  auto eval = [&]() { return build().value().item(); };
  for (Value& p : params) {
    Tensor fd = fd_gradient(eval, p, h);
    Tensor analytic =
        p.grad().empty() ? Tensor::zeros_like(p.value()) : p.grad();
    worst = std::max(worst, max_rel_err(analytic, fd));
  }
  return worst;
}

// Composite Simpson quadrature, used as the independent oracle for
// closed-form integrals.
inline double simpson(const std::function<double(double)>& f, double a,
                      double b, int intervals) {
  if (intervals % 2) ++intervals;
  const double h = (b - a) / intervals;
  double s = f(a) + f(b);
  for (int i = 1; i < intervals; ++i) {
    s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  }
  return s * h / 3.0;
}

}  // namespace avuc::testing

#endif  // AVUC_TESTS_SUPPORT_HPP_
