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

#include "avuc/variational.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "avuc/checkpoint.hpp"
#include "support.hpp"

namespace avuc {
namespace {

using testing::gradcheck;
using testing::simpson;

double gaussian_pdf(double x, double mu, double sigma) {
  const double z = (x - mu) / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * M_PI));
}

// Independent oracle: KL between scalar Gaussians by numeric integration
// of q(w) log(q(w)/p(w)).
double kl_quadrature(double mu, double sigma, double m, double s) {
  const double lo = std::min(mu - 12 * sigma, m - 12 * s);
  const double hi = std::max(mu + 12 * sigma, m + 12 * s);
  return simpson(
      [&](double w) {
        const double q = gaussian_pdf(w, mu, sigma);
        if (q < 1e-300) return 0.0;
        return q * std::log(q / gaussian_pdf(w, m, s));
      },
      lo, hi, 20000);
}

VariationalLinear scalar_layer(double mu, double rho, double prior_mean,
                               double prior_std) {
  VariationalLinear layer;
  layer.in = 1;
  layer.out = 1;
  layer.w_mu = parameter(Tensor::matrix(1, 1, {mu}));
  layer.w_rho = parameter(Tensor::matrix(1, 1, {rho}));
  layer.b_mu = parameter(Tensor::vector({0.0}));
  layer.b_rho = parameter(Tensor::vector({softplus_inverse(1.0)}));
  layer.w_prior_mean = Tensor::matrix(1, 1, {prior_mean});
  layer.b_prior_mean = Tensor::vector({0.0});
  layer.prior_std = prior_std;
  return layer;
}

TEST(VariationalKl, MatchedPosteriorAndPriorGiveZero) {
  // Posterior N(0, 1) against prior N(0, 1); the bias term is set the same
  // way, so the whole layer KL must vanish.
  VariationalLinear layer = scalar_layer(0.0, softplus_inverse(1.0), 0.0, 1.0);
  EXPECT_NEAR(layer_kl(layer).value().item(), 0.0, 1e-12);
}

TEST(VariationalKl, ClosedFormMatchesFrozenHandCase) {
  // KL(N(0.5, 0.3^2) || N(0, 1)) = ln(1/0.3) + (0.09 + 0.25)/2 - 0.5,
  // frozen from the quadrature oracle.
  const double expected = 0.873972804325936;
  EXPECT_NEAR(kl_quadrature(0.5, 0.3, 0.0, 1.0), expected, 1e-9);
  VariationalLinear layer =
      scalar_layer(0.5, softplus_inverse(0.3), 0.0, 1.0);
  EXPECT_NEAR(layer_kl(layer).value().item(), expected, 1e-12);
}

TEST(VariationalKl, ClosedFormMatchesQuadratureOnRandomLayers) {
  Rng rng(31);
  for (int trial = 0; trial < 25; ++trial) {
    const double mu = 2.0 * standard_normal(rng);
    const double sigma = 0.2 + std::abs(standard_normal(rng));
    const double m = standard_normal(rng);
    const double s = 0.5 + std::abs(standard_normal(rng));
    VariationalLinear layer = scalar_layer(mu, softplus_inverse(sigma), m, s);
    // Bias contributes KL(N(0,1)||N(0,s^2)).
    const double expected =
        kl_quadrature(mu, sigma, m, s) + kl_quadrature(0.0, 1.0, 0.0, s);
    EXPECT_NEAR(layer_kl(layer).value().item(), expected, 1e-6);
  }
}

TEST(VariationalKl, NonNegativeOver1000RandomDraws) {
  Rng rng(97);
  for (int trial = 0; trial < 1000; ++trial) {
    const double mu = 3.0 * standard_normal(rng);
    const double rho = -6.0 + 8.0 * std::abs(standard_normal(rng));
    const double m = 2.0 * standard_normal(rng);
    const double s = 0.1 + 2.0 * std::abs(standard_normal(rng));
    VariationalLinear layer = scalar_layer(mu, rho, m, s);
    EXPECT_GE(layer_kl(layer).value().item(), -1e-12);
  }
}

TEST(VariationalKl, GradientCheckAgainstFiniteDifferences) {
  Rng rng(13);
  BnnModel model = make_mlp(3, {4}, 2, rng);
  auto build = [&]() { return model.kl_to_prior(); };
  EXPECT_LT(gradcheck(build, model.parameters()), 1e-6);
}

TEST(VariationalSampling, ReparameterizedMomentsMatch) {
  // w = mu + softplus(rho) * eps must have mean mu and std softplus(rho).
  const double mu = 0.7;
  const double rho = 0.4;
  const double sigma = softplus_scalar(rho);
  VariationalLinear layer = scalar_layer(mu, rho, 0.0, 1.0);
  // Freeze the bias at zero variance so the logit is the weight alone.
  layer.b_rho = parameter(Tensor::vector({-40.0}));
  Value x = constant(Tensor::matrix(1, 1, {1.0}));
  Rng rng(12345);
  const int n = 10000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double w = layer_forward(layer, x,
                                   std::array{draw_layer_noise(layer, rng)}.data())
                         .value()
                         .item();
    sum += w;
    sq += w * w;
  }
  const double mean = sum / n;
  const double stddev = std::sqrt(sq / n - mean * mean);
  EXPECT_NEAR(mean, mu, 0.03 * sigma + 0.02);
  EXPECT_NEAR(stddev, sigma, 0.03 * sigma);
}

TEST(VariationalSampling, ZeroVarianceLimitEqualsMeanForward) {
  Rng rng(3);
  BnnModel model = make_mlp(2, {8}, 3, rng, /*rho_init=*/-40.0);
  Tensor x = normal_tensor({5, 2}, rng);
  Rng noise_rng(17);
  Tensor sampled = model.sample_forward(constant(x), noise_rng).value();
  Tensor mean = model.mean_forward(constant(x)).value();
  for (std::size_t i = 0; i < sampled.numel(); ++i) {
    EXPECT_NEAR(sampled[i], mean[i], 1e-12);
  }
}

TEST(VariationalSampling, SameSeedSameLogits) {
  Rng rng(8);
  BnnModel model = make_mlp(3, {6}, 2, rng);
  Tensor x = normal_tensor({4, 3}, rng);
  Rng a(99), b(99);
  Tensor la = model.sample_forward(constant(x), a).value();
  Tensor lb = model.sample_forward(constant(x), b).value();
  for (std::size_t i = 0; i < la.numel(); ++i) {
    EXPECT_DOUBLE_EQ(la[i], lb[i]);
  }
}

TEST(VariationalInit, DefaultInitShapesAndScales) {
  Rng rng(21);
  BnnModel model = make_mlp(10, {32, 16}, 4, rng);
  ASSERT_EQ(model.layers.size(), 3u);
  EXPECT_EQ(model.layers[0].w_mu.value().rows(), 32u);
  EXPECT_EQ(model.layers[0].w_mu.value().cols(), 10u);
  EXPECT_EQ(model.layers[2].out, 4u);
  for (const auto& layer : model.layers) {
    for (double r : layer.w_rho.value().data()) EXPECT_DOUBLE_EQ(r, -5.0);
    for (double b : layer.b_mu.value().data()) EXPECT_DOUBLE_EQ(b, 0.0);
  }
  // Weight means drawn with variance 1/fan_in.
  double sq = 0.0;
  const Tensor& w = model.layers[0].w_mu.value();
  for (double v : w.data()) sq += v * v;
  EXPECT_NEAR(sq / w.numel(), 1.0 / 10.0, 0.03);
}

TEST(VariationalInit, EmpiricalBayesMapsWeights) {
  Rng rng(4);
  BnnModel model = make_mlp(2, {}, 2, rng);
  const Tensor w = Tensor::matrix(2, 2, {2.0, -1.5, 0.0, 0.25});
  const Tensor b = Tensor::vector({0.5, 0.0});
  empirical_bayes_init(model, {w, b}, 0.5);
  const auto& layer = model.layers[0];
  // sigma = delta * |w|; zeros are floored at |w| = 1e-6.
  EXPECT_NEAR(softplus_scalar(layer.w_rho.value()[0]), 1.0, 1e-12);
  EXPECT_NEAR(softplus_scalar(layer.w_rho.value()[1]), 0.75, 1e-12);
  EXPECT_NEAR(softplus_scalar(layer.w_rho.value()[2]), 5e-7, 1e-15);
  EXPECT_NEAR(softplus_scalar(layer.w_rho.value()[3]), 0.125, 1e-12);
  EXPECT_DOUBLE_EQ(layer.w_mu.value()[0], 2.0);
  EXPECT_DOUBLE_EQ(layer.w_prior_mean[1], -1.5);
  EXPECT_DOUBLE_EQ(layer.b_prior_mean[0], 0.5);
  EXPECT_DOUBLE_EQ(layer.prior_std, 1.0);
}

TEST(Checkpoint, RoundTripIsValueExactAndByteStable) {
  Rng rng(55);
  BnnModel model = make_mlp(3, {5}, 2, rng);
  Checkpoint ckpt{std::move(model), 0.5108256237659907, 1.5};
  const auto dir = std::filesystem::temp_directory_path();
  const std::string p1 = (dir / "avuc_ckpt_a.json").string();
  const std::string p2 = (dir / "avuc_ckpt_b.json").string();
  save_checkpoint(ckpt, p1);
  Checkpoint loaded = load_checkpoint(p1);
  save_checkpoint(loaded, p2);
  std::ifstream f1(p1), f2(p2);
  std::string s1((std::istreambuf_iterator<char>(f1)), {});
  std::string s2((std::istreambuf_iterator<char>(f2)), {});
  EXPECT_EQ(s1, s2);
  ASSERT_EQ(loaded.model.layers.size(), ckpt.model.layers.size());
  for (std::size_t li = 0; li < ckpt.model.layers.size(); ++li) {
    const auto& a = ckpt.model.layers[li];
    const auto& b = loaded.model.layers[li];
    for (std::size_t i = 0; i < a.w_mu.value().numel(); ++i) {
      EXPECT_EQ(a.w_mu.value()[i], b.w_mu.value()[i]);
      EXPECT_EQ(a.w_rho.value()[i], b.w_rho.value()[i]);
    }
  }
  EXPECT_EQ(loaded.temperature, 1.5);
  ASSERT_TRUE(loaded.u_th.has_value());
  EXPECT_EQ(*loaded.u_th, 0.5108256237659907);
  std::remove(p1.c_str());
  std::remove(p2.c_str());
}

TEST(Checkpoint, NullThresholdSurvives) {
  Rng rng(56);
  Checkpoint ckpt{make_mlp(2, {}, 2, rng), std::nullopt, 1.0};
  const auto path =
      (std::filesystem::temp_directory_path() / "avuc_ckpt_null.json").string();
  save_checkpoint(ckpt, path);
  Checkpoint loaded = load_checkpoint(path);
  EXPECT_FALSE(loaded.u_th.has_value());
  std::remove(path.c_str());
}

TEST(Checkpoint, RejectsMalformedFiles) {
  const auto dir = std::filesystem::temp_directory_path();
  const std::string path = (dir / "avuc_ckpt_bad.json").string();
  {
    std::ofstream out(path);
    out << "{\"format_version\": 2}";
  }
  EXPECT_THROW(load_checkpoint(path), ConfigError);
  {
    std::ofstream out(path);
    out << "not json";
  }
  EXPECT_THROW(load_checkpoint(path), ConfigError);
  EXPECT_THROW(load_checkpoint("/nonexistent/file.json"), ConfigError);
  std::remove(path.c_str());
}

TEST(Checkpoint, RejectsInconsistentHead) {
  Rng rng(57);
  Checkpoint ckpt{make_mlp(2, {}, 2, rng), std::nullopt, 1.0};
  nlohmann::json j = checkpoint_to_json(ckpt);
  j["class_count"] = 5;
  EXPECT_THROW(checkpoint_from_json(j), ConfigError);
}

}  // namespace
}  // namespace avuc
