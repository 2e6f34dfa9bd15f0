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

#ifndef AVUC_VARIATIONAL_HPP_
#define AVUC_VARIATIONAL_HPP_

#include <cmath>
#include <cstdint>
#include <vector>

#include "avuc/graph.hpp"
#include "avuc/random.hpp"
#include "avuc/tensor.hpp"

namespace avuc {

// Fully factorized Gaussian layer: every weight and bias has a posterior
// N(mu, softplus(rho)^2) and a fixed Gaussian prior.
struct VariationalLinear {
  std::size_t in = 0;
  std::size_t out = 0;
  Value w_mu, w_rho;  // (out, in)
  Value b_mu, b_rho;  // (out)
  Tensor w_prior_mean, b_prior_mean;
  double prior_std = 1.0;

  VariationalLinear() = default;

  VariationalLinear(std::size_t in_dim, std::size_t out_dim, Rng& rng,
                    double rho_init = -5.0)
      : in(in_dim), out(out_dim) {
    const double mu_std = std::sqrt(1.0 / static_cast<double>(in_dim));
    w_mu = parameter(normal_tensor({out, in}, rng, 0.0, mu_std));
    w_rho = parameter(Tensor::full({out, in}, rho_init));
    b_mu = parameter(Tensor::zeros({out}));
    b_rho = parameter(Tensor::full({out}, rho_init));
    w_prior_mean = Tensor::zeros({out, in});
    b_prior_mean = Tensor::zeros({out});
  }
};

struct LayerNoise {
  Tensor w_eps;  // (out, in)
  Tensor b_eps;  // (out)
};

inline LayerNoise draw_layer_noise(const VariationalLinear& layer, Rng& rng) {
  return {normal_tensor({layer.out, layer.in}, rng),
          normal_tensor({layer.out}, rng)};
}

// y = x W^T + b with W = mu + softplus(rho) * eps. A null noise pointer
// gives the posterior-mean forward (the deterministic net).
inline Value layer_forward(const VariationalLinear& layer, const Value& x,
                           const LayerNoise* noise) {
  Value w = layer.w_mu;
  Value b = layer.b_mu;
  if (noise != nullptr) {
    w = add(layer.w_mu, mul(softplus(layer.w_rho), constant(noise->w_eps)));
    b = add(layer.b_mu, mul(softplus(layer.b_rho), constant(noise->b_eps)));
  }
  return add(matmul(x, transpose(w)), b);
}

// KL(N(mu, sigma^2) || N(m, s^2)) summed over every weight and bias,
// closed form, differentiable in mu and rho.
inline Value layer_kl(const VariationalLinear& layer) {
  auto gauss_kl = [&](const Value& mu, const Value& rho,
                      const Tensor& prior_mean) {
    Value sigma = softplus(rho);
    Value diff = sub(mu, constant(prior_mean));
    const double s2 = layer.prior_std * layer.prior_std;
    Value quad = mul_scalar(add(mul(sigma, sigma), mul(diff, diff)),
                            1.0 / (2.0 * s2));
    Value elems = add_scalar(add(sub(constant(Tensor::full(mu.value().shape(),
                                                           std::log(layer.prior_std))),
                                     log(sigma)),
                                 quad),
                             -0.5);
    return sum(elems);
  };
  return add(gauss_kl(layer.w_mu, layer.w_rho, layer.w_prior_mean),
             gauss_kl(layer.b_mu, layer.b_rho, layer.b_prior_mean));
}

// MLP over variational layers with ReLU between them; the last layer
// emits logits for class_count classes.
struct BnnModel {
  std::vector<VariationalLinear> layers;
  int class_count = 0;

  Value forward_with_noise(const Value& x,
                           const std::vector<LayerNoise>& noise) const {
    if (noise.size() != layers.size()) {
      throw std::invalid_argument("forward_with_noise: noise count mismatch");
    }
    Value h = x;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      h = layer_forward(layers[i], h, &noise[i]);
      if (i + 1 < layers.size()) h = relu(h);
    }
    return h;
  }

  std::vector<LayerNoise> draw_noise(Rng& rng) const {
    std::vector<LayerNoise> noise;
    noise.reserve(layers.size());
    for (const auto& layer : layers) noise.push_back(draw_layer_noise(layer, rng));
    return noise;
  }

  Value sample_forward(const Value& x, Rng& rng) const {
    return forward_with_noise(x, draw_noise(rng));
  }

  Value mean_forward(const Value& x) const {
    Value h = x;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      h = layer_forward(layers[i], h, nullptr);
      if (i + 1 < layers.size()) h = relu(h);
    }
    return h;
  }

  Value kl_to_prior() const {
    Value total = constant(0.0);
    for (const auto& layer : layers) total = add(total, layer_kl(layer));
    return total;
  }

  std::vector<Value> parameters() const {
    std::vector<Value> params;
    for (const auto& layer : layers) {
      params.push_back(layer.w_mu);
      params.push_back(layer.w_rho);
      params.push_back(layer.b_mu);
      params.push_back(layer.b_rho);
    }
    return params;
  }

  // The point-estimate subset, the only parameters deterministic training
  // updates.
  std::vector<Value> mean_parameters() const {
    std::vector<Value> params;
    for (const auto& layer : layers) {
      params.push_back(layer.w_mu);
      params.push_back(layer.b_mu);
    }
    return params;
  }
};

inline BnnModel make_mlp(std::size_t in_dim, const std::vector<int>& hidden,
                         int class_count, Rng& rng, double rho_init = -5.0) {
  if (class_count < 2) throw std::invalid_argument("class_count must be >= 2");
  BnnModel model;
  model.class_count = class_count;
  std::size_t prev = in_dim;
  for (int h : hidden) {
    if (h <= 0) throw std::invalid_argument("hidden width must be positive");
    model.layers.emplace_back(prev, static_cast<std::size_t>(h), rng, rho_init);
    prev = static_cast<std::size_t>(h);
  }
  model.layers.emplace_back(prev, static_cast<std::size_t>(class_count), rng,
                            rho_init);
  return model;
}

inline double softplus_inverse(double y) {
  if (y <= 0.0) throw std::invalid_argument("softplus_inverse needs y > 0");
  // log(e^y - 1), stable for small y via expm1.
  return y > 30.0 ? y : std::log(std::expm1(y));
}

// Moment-matched init from point-estimate weights: posterior mean at the
// trained weights, sigma = delta * |w| (|w| floored at 1e-6), prior
// recentered on the same weights with unit variance.
inline void empirical_bayes_init(BnnModel& model,
                                 const std::vector<Tensor>& mle_weights,
                                 double delta = 0.5) {
  if (mle_weights.size() != model.layers.size() * 2) {
    throw std::invalid_argument("empirical_bayes_init: expected W,b per layer");
  }
  for (std::size_t li = 0; li < model.layers.size(); ++li) {
    VariationalLinear& layer = model.layers[li];
    const Tensor& w = mle_weights[2 * li];
    const Tensor& b = mle_weights[2 * li + 1];
    if (!w.same_shape(layer.w_mu.value()) ||
        !b.same_shape(layer.b_mu.value())) {
      throw std::invalid_argument("empirical_bayes_init: shape mismatch");
    }
    auto set = [delta](Value& mu, Value& rho, const Tensor& src) {
      mu.mutable_value() = src;
      Tensor r = Tensor::zeros_like(src);
      for (std::size_t i = 0; i < src.numel(); ++i) {
        const double mag = std::max(std::abs(src[i]), 1e-6);
        r[i] = softplus_inverse(delta * mag);
      }
      rho.mutable_value() = r;
    };
    set(layer.w_mu, layer.w_rho, w);
    set(layer.b_mu, layer.b_rho, b);
    layer.w_prior_mean = w;
    layer.b_prior_mean = b;
    layer.prior_std = 1.0;
  }
}

}  // namespace avuc

#endif  // AVUC_VARIATIONAL_HPP_
