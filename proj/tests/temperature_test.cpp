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

#include "avuc/temperature.hpp"

#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "avuc/metrics.hpp"
#include "avuc/random.hpp"
#include "avuc/tensor.hpp"
#include "avuc/uncertainty.hpp"

namespace avuc {
namespace {

// 1-D golden-section minimizer, the oracle for the fitted temperature.
double golden_min(const std::function<double(double)>& f, double lo,
                  double hi) {
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo;
  double b = hi;
  double c = b - phi * (b - a);
  double d = a + phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > 1e-10) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

double dump_nll(const CalibrationData& data, double t) {
  return nll(mc_mean_probs(data, t), data.labels);
}

// Rows whose softmax equals the empirical label frequencies exactly, so
// the NLL over temperature has its minimum at T = 1 by construction.
CalibrationData calibrated_fixture(double logit_scale) {
  struct Group {
    std::array<double, 3> p;
    std::array<int, 3> counts;
  };
  const std::vector<Group> groups = {
      {{0.8, 0.15, 0.05}, {320, 60, 20}},
      {{0.05, 0.9, 0.05}, {10, 180, 10}},
      {{0.2, 0.3, 0.5}, {40, 60, 100}},
  };
  std::vector<double> flat;
  std::vector<int> labels;
  for (const Group& g : groups) {
    for (int k = 0; k < 3; ++k) {
      for (int c = 0; c < g.counts[k]; ++c) {
        for (int j = 0; j < 3; ++j) {
          flat.push_back(logit_scale * std::log(g.p[j]));
        }
        labels.push_back(k);
      }
    }
  }
  CalibrationData data;
  data.logit_samples = {Tensor::matrix(labels.size(), 3, std::move(flat))};
  data.labels = std::move(labels);
  return data;
}

// Calibrated like above but with a wide logit spread (80% head class,
// 29 even tail classes), so the NLL surface over log T is steep enough
// for gradient descent to cross to the optimum within its budget.
CalibrationData sharp_calibrated_fixture(double logit_scale) {
  const std::size_t classes = 30;
  const double p_head = 0.8;
  const double p_tail = (1.0 - p_head) / static_cast<double>(classes - 1);
  std::vector<double> flat;
  std::vector<int> labels;
  for (int copy = 0; copy < 2; ++copy) {
    for (int i = 0; i < 145; ++i) {
      flat.push_back(logit_scale * std::log(p_head));
      for (std::size_t k = 1; k < classes; ++k) {
        flat.push_back(logit_scale * std::log(p_tail));
      }
      labels.push_back(i < 116 ? 0 : i - 115);
    }
  }
  CalibrationData data;
  data.logit_samples = {
      Tensor::matrix(labels.size(), classes, std::move(flat))};
  data.labels = std::move(labels);
  return data;
}

CalibrationData random_mc_fixture(std::uint64_t seed, std::size_t rows,
                                  std::size_t classes, std::size_t samples,
                                  double scale) {
  Rng rng(seed);
  CalibrationData data;
  data.labels.resize(rows);
  for (auto& l : data.labels) {
    l = static_cast<int>(uniform_real(rng, 0.0, static_cast<double>(classes) - 1e-9));
  }
  for (std::size_t s = 0; s < samples; ++s) {
    Tensor logits = normal_tensor({rows, classes}, rng, 0.0, scale);
    for (std::size_t i = 0; i < rows; ++i) {
      logits.at(i, data.labels[i]) += scale;
    }
    data.logit_samples.push_back(std::move(logits));
  }
  return data;
}

TEST(ApplyTemperature, UnitTemperatureIsIdentity) {
  Rng rng(derive_seed(90, "apply"));
  Tensor logits = normal_tensor({6, 4}, rng, 0.0, 2.0);
  const Tensor probs = apply_temperature(logits, 1.0);
  const Tensor direct = softmax_values(logits);
  for (std::size_t i = 0; i < probs.numel(); ++i) {
    EXPECT_DOUBLE_EQ(probs.data()[i], direct.data()[i]);
  }
}

TEST(ApplyTemperature, LargeTemperatureApproachesUniform) {
  Rng rng(derive_seed(91, "uniform"));
  Tensor logits = normal_tensor({4, 5}, rng, 0.0, 3.0);
  const Tensor probs = apply_temperature(logits, 1e6);
  for (std::size_t i = 0; i < probs.numel(); ++i) {
    EXPECT_NEAR(probs.data()[i], 0.2, 1e-5);
  }
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    EXPECT_NEAR(entropy_of_row(probs, i), std::log(5.0), 1e-9);
  }
}

TEST(ApplyTemperature, PreservesArgmaxForAnyPositiveTemperature) {
  Rng rng(derive_seed(92, "argmax"));
  for (int trial = 0; trial < 100; ++trial) {
    Tensor logits = normal_tensor({5, 6}, rng, 0.0, 2.5);
    const std::vector<int> base = argmax_rows(softmax_values(logits));
    for (double t : {0.1, 0.5, 2.0, 10.0, 100.0}) {
      EXPECT_EQ(argmax_rows(apply_temperature(logits, t)), base);
    }
  }
}

TEST(ApplyTemperature, RejectsNonPositiveTemperature) {
  Tensor logits = Tensor::matrix(1, 2, {0.0, 1.0});
  EXPECT_THROW(apply_temperature(logits, 0.0), std::invalid_argument);
  EXPECT_THROW(apply_temperature(logits, -2.0), std::invalid_argument);
}

TEST(McMeanProbs, AveragesPerSampleSoftmax) {
  const CalibrationData data = random_mc_fixture(derive_seed(93, "mc"), 5, 3, 4, 1.5);
  const Tensor mean = mc_mean_probs(data, 2.0);
  for (std::size_t i = 0; i < mean.rows(); ++i) {
    for (std::size_t k = 0; k < mean.cols(); ++k) {
      double expected = 0.0;
      for (const Tensor& logits : data.logit_samples) {
        expected += apply_temperature(logits, 2.0).at(i, k);
      }
      expected /= static_cast<double>(data.logit_samples.size());
      EXPECT_NEAR(mean.at(i, k), expected, 1e-15);
    }
  }
  validate_prob_rows(mean, "test");
}

TEST(FitTemperature, CalibratedLogitsStayNearUnit) {
  const CalibrationData data = calibrated_fixture(1.0);
  const TemperatureFit fit = fit_temperature(data, CalibObjective::nll);
  EXPECT_NEAR(fit.temperature, 1.0, 0.05);
  EXPECT_LE(fit.iterations, kTemperatureMaxIters);
}

TEST(FitTemperature, RecoversDoubledScale) {
  const CalibrationData data = sharp_calibrated_fixture(2.0);
  const TemperatureFit fit = fit_temperature(data, CalibObjective::nll);
  EXPECT_NEAR(fit.temperature, 2.0, 0.1);
}

TEST(FitTemperature, MatchesGoldenSectionOracleOnCalibratedSet) {
  const CalibrationData data = calibrated_fixture(1.0);
  const TemperatureFit fit = fit_temperature(data, CalibObjective::nll);
  const double oracle =
      golden_min([&](double t) { return dump_nll(data, t); }, 0.05, 20.0);
  EXPECT_LE(std::abs(fit.temperature - oracle), 1e-3);
}

TEST(FitTemperature, TracksGoldenSectionOnMiscalibratedSets) {
  for (double scale : {1.5, 3.0}) {
    const CalibrationData data = sharp_calibrated_fixture(scale);
    const TemperatureFit fit = fit_temperature(data, CalibObjective::nll);
    const double oracle =
        golden_min([&](double t) { return dump_nll(data, t); }, 0.05, 20.0);
    EXPECT_LE(std::abs(fit.temperature - oracle), 0.02)
        << "scale " << scale << " fit " << fit.temperature << " oracle "
        << oracle;
  }
}

TEST(FitTemperature, NeverWorseThanUnitTemperature) {
  const CalibrationData data =
      random_mc_fixture(derive_seed(94, "worse"), 120, 4, 3, 2.5);
  for (CalibObjective objective :
       {CalibObjective::nll, CalibObjective::avuc, CalibObjective::au_avuc}) {
    const TemperatureFit fit = fit_temperature(data, objective);
    Value log_t = parameter(Tensor::scalar(0.0));
    std::optional<double> u_th = fit.u_th;
    const Value at_unit =
        detail::temperature_objective(data, objective, u_th, log_t);
    EXPECT_LE(fit.final_objective, at_unit.value().item() + 1e-12)
        << to_string(objective);
    EXPECT_GT(fit.temperature, 0.0);
  }
}

TEST(FitTemperature, AvucObjectiveLearnsThresholdWhenAbsent) {
  const CalibrationData data =
      random_mc_fixture(derive_seed(95, "uth"), 80, 4, 3, 2.0);
  const TemperatureFit fit = fit_temperature(data, CalibObjective::avuc);
  ASSERT_TRUE(fit.u_th.has_value());
  EXPECT_GE(*fit.u_th, 0.0);
  EXPECT_LE(*fit.u_th, std::log(4.0) + 1e-9);
  const TemperatureFit pinned =
      fit_temperature(data, CalibObjective::avuc, *fit.u_th);
  EXPECT_DOUBLE_EQ(pinned.temperature, fit.temperature);
}

TEST(FitTemperature, AccuracyUnchangedByFittedTemperature) {
  for (double scale : {1.0, 2.0, 3.0}) {
    const CalibrationData data = calibrated_fixture(scale);
    const TemperatureFit fit = fit_temperature(data, CalibObjective::nll);
    const PredictiveBatch before =
        PredictiveBatch::from_probs(mc_mean_probs(data, 1.0), data.labels);
    const PredictiveBatch after = PredictiveBatch::from_probs(
        mc_mean_probs(data, fit.temperature), data.labels);
    EXPECT_DOUBLE_EQ(accuracy(before), accuracy(after));
  }
}

TEST(FitTemperature, DeterministicGivenFrozenDump) {
  const CalibrationData data =
      random_mc_fixture(derive_seed(96, "det"), 60, 3, 5, 2.0);
  const TemperatureFit a = fit_temperature(data, CalibObjective::au_avuc);
  const TemperatureFit b = fit_temperature(data, CalibObjective::au_avuc);
  EXPECT_DOUBLE_EQ(a.temperature, b.temperature);
  EXPECT_EQ(a.iterations, b.iterations);
  EXPECT_DOUBLE_EQ(a.final_objective, b.final_objective);
}

TEST(FitTemperature, RejectsBadData) {
  CalibrationData data;
  EXPECT_THROW(fit_temperature(data, CalibObjective::nll),
               std::invalid_argument);
  data.logit_samples = {Tensor::matrix(2, 3, {0, 1, 2, 3, 4, 5})};
  data.labels = {0};
  EXPECT_THROW(fit_temperature(data, CalibObjective::nll),
               std::invalid_argument);
  data.labels = {0, 3};
  EXPECT_THROW(fit_temperature(data, CalibObjective::nll),
               std::invalid_argument);
}

TEST(ObjectiveNames, RoundTripAndReject) {
  for (CalibObjective objective :
       {CalibObjective::nll, CalibObjective::avuc, CalibObjective::au_avuc}) {
    EXPECT_EQ(parse_objective(to_string(objective)), objective);
  }
  EXPECT_THROW(parse_objective("brier"), ConfigError);
}

TEST(LogitDump, RoundTripsExactly) {
  const CalibrationData data =
      random_mc_fixture(derive_seed(97, "dump"), 7, 4, 3, 2.0);
  const std::string path = testing::TempDir() + "dump_roundtrip.csv";
  write_logit_dump(data, path);
  const CalibrationData loaded = read_logit_dump(path);
  ASSERT_EQ(loaded.logit_samples.size(), data.logit_samples.size());
  EXPECT_EQ(loaded.labels, data.labels);
  for (std::size_t s = 0; s < data.logit_samples.size(); ++s) {
    ASSERT_TRUE(loaded.logit_samples[s].same_shape(data.logit_samples[s]));
    for (std::size_t i = 0; i < data.logit_samples[s].numel(); ++i) {
      EXPECT_DOUBLE_EQ(loaded.logit_samples[s].data()[i],
                       data.logit_samples[s].data()[i]);
    }
  }
  std::remove(path.c_str());
}

TEST(LogitDump, RejectsMalformedFiles) {
  const std::string dir = testing::TempDir();
  {
    const std::string path = dir + "dump_bad_header.csv";
    std::ofstream out(path);
    out << "sample,mc,label,logit_0\n0,0,0,1.0\n";
    out.close();
    EXPECT_THROW(read_logit_dump(path), ConfigError);
    std::remove(path.c_str());
  }
  {
    const std::string path = dir + "dump_missing_row.csv";
    std::ofstream out(path);
    out << "sample_index,mc_index,label,logit_0,logit_1\n";
    out << "0,0,1,0.5,1.5\n";
    out << "1,0,0,0.25,0.75\n";
    out << "0,1,1,0.5,1.5\n";
    out.close();
    EXPECT_THROW(read_logit_dump(path), ConfigError);
    std::remove(path.c_str());
  }
  {
    const std::string path = dir + "dump_label_conflict.csv";
    std::ofstream out(path);
    out << "sample_index,mc_index,label,logit_0,logit_1\n";
    out << "0,0,1,0.5,1.5\n";
    out << "0,1,0,0.5,1.5\n";
    out.close();
    EXPECT_THROW(read_logit_dump(path), ConfigError);
    std::remove(path.c_str());
  }
  {
    const std::string path = dir + "dump_not_numeric.csv";
    std::ofstream out(path);
    out << "sample_index,mc_index,label,logit_0\n";
    out << "0,0,zero,1.0\n";
    out.close();
    EXPECT_THROW(read_logit_dump(path), ConfigError);
    std::remove(path.c_str());
  }
  EXPECT_THROW(read_logit_dump(dir + "does_not_exist.csv"), ConfigError);
}

TEST(FitJson, RoundTripsAndValidates) {
  TemperatureFit fit;
  fit.temperature = 1.75;
  fit.objective = CalibObjective::avuc;
  fit.u_th = 0.42;
  fit.final_objective = 0.3125;
  fit.iterations = 212;
  const std::string path = testing::TempDir() + "fit_roundtrip.json";
  save_fit(fit, path);
  const TemperatureFit loaded = load_fit(path);
  EXPECT_DOUBLE_EQ(loaded.temperature, fit.temperature);
  EXPECT_EQ(loaded.objective, fit.objective);
  ASSERT_TRUE(loaded.u_th.has_value());
  EXPECT_DOUBLE_EQ(*loaded.u_th, *fit.u_th);
  EXPECT_DOUBLE_EQ(loaded.final_objective, fit.final_objective);
  EXPECT_EQ(loaded.iterations, fit.iterations);
  std::remove(path.c_str());

  nlohmann::json j = fit_to_json(fit);
  j.erase("u_th");
  EXPECT_THROW(fit_from_json(j), ConfigError);
  nlohmann::json bad = fit_to_json(fit);
  bad["temperature"] = -1.0;
  EXPECT_THROW(fit_from_json(bad), ConfigError);
}

}  // namespace
}  // namespace avuc
