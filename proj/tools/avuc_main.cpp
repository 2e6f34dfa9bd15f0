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

#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "avuc/checkpoint.hpp"
#include "avuc/config.hpp"
#include "avuc/datasets.hpp"
#include "avuc/report.hpp"
#include "avuc/temperature.hpp"
#include "avuc/trainer.hpp"

namespace {

// Rows of one split re-tagged as a standalone dataset file.
avuc::Dataset split_view(const avuc::Dataset& data, avuc::Split split) {
  auto [features, labels] = avuc::subset(data, split);
  avuc::Dataset view;
  view.split.assign(labels.size(), split);
  view.features = std::move(features);
  view.labels = std::move(labels);
  view.descriptor = {{"generator", "split_view"},
                     {"base", data.descriptor},
                     {"split", avuc::to_string(split)}};
  return view;
}

void run_gen_data(const std::string& config_path, const std::string& out_dir) {
  const avuc::ExperimentConfig config = avuc::load_config(config_path);
  const avuc::Dataset data = avuc::make_dataset(config.data, config.seed);
  std::filesystem::create_directories(out_dir);
  avuc::save_dataset(data, out_dir + "/base.csv");
  for (avuc::Split split :
       {avuc::Split::train, avuc::Split::val, avuc::Split::test}) {
    avuc::save_dataset(split_view(data, split),
                       out_dir + "/" + avuc::to_string(split) + ".csv");
  }
  {
    std::ofstream out(out_dir + "/descriptor.json");
    if (!out) throw avuc::ConfigError("cannot write descriptor.json");
    out << data.descriptor.dump(2) << "\n";
  }
  avuc::save_dataset(avuc::make_ood(data, avuc::derive_seed(config.seed, "ood")),
                     out_dir + "/ood.csv");
  for (avuc::ShiftKind kind : config.evaluate.shifts) {
    const std::string kind_name = avuc::to_string(kind);
    for (int intensity : config.evaluate.intensities) {
      avuc::ShiftSpec spec;
      spec.kind = kind;
      spec.intensity = intensity;
      spec.seed =
          avuc::derive_seed(config.seed, "shift-" + kind_name, intensity);
      avuc::save_dataset(avuc::apply_shift(data, spec),
                         out_dir + "/shifted_" + kind_name + "_" +
                             std::to_string(intensity) + ".csv");
    }
  }
}

void run_train(const std::string& config_path, const std::string& data_dir,
               const std::string& out_path) {
  const avuc::ExperimentConfig config = avuc::load_config(config_path);
  const avuc::Dataset data = avuc::load_dataset(data_dir + "/base.csv");
  const avuc::TrainResult result = avuc::train(data, config.train);
  avuc::save_checkpoint(result.checkpoint, out_path);
  avuc::write_history(result.history, out_path + ".history.csv");
}

avuc::CalibrationData collect_logits(const avuc::Checkpoint& ckpt,
                                     avuc::Method method,
                                     const avuc::Dataset& data, int samples,
                                     std::uint64_t seed) {
  const auto [x, y] = avuc::subset(data, avuc::Split::val);
  if (y.empty()) throw avuc::ConfigError("calibrate: empty validation split");
  avuc::CalibrationData calib;
  calib.labels = y;
  const avuc::Value input = avuc::constant(x);
  if (avuc::method_is_vanilla(method)) {
    calib.logit_samples.push_back(ckpt.model.mean_forward(input).value());
    return calib;
  }
  avuc::Rng rng(seed);
  for (int t = 0; t < samples; ++t) {
    calib.logit_samples.push_back(ckpt.model.sample_forward(input, rng).value());
  }
  return calib;
}

void run_calibrate(const std::string& config_path, const std::string& ckpt_path,
                   const std::string& data_dir, const std::string& objective,
                   const std::string& out_path, bool apply) {
  const avuc::ExperimentConfig config = avuc::load_config(config_path);
  avuc::Checkpoint ckpt = avuc::load_checkpoint(ckpt_path);
  const avuc::Dataset data = avuc::load_dataset(data_dir + "/base.csv");
  const avuc::CalibObjective obj = objective.empty()
                                       ? config.calibrate.objective
                                       : avuc::parse_objective(objective);
  const avuc::CalibrationData calib =
      collect_logits(ckpt, config.train.method, data, config.evaluate.mc,
                     avuc::derive_seed(config.seed, "calibrate"));
  const avuc::TemperatureFit fit = avuc::fit_temperature(calib, obj);
  avuc::save_fit(fit, out_path);
  if (apply) {
    ckpt.temperature = fit.temperature;
    avuc::save_checkpoint(ckpt, ckpt_path);
  }
}

void run_evaluate(const std::string& config_path, const std::string& ckpt_path,
                  const std::string& data_dir, const std::string& shifts,
                  int mc_override, const std::string& out_dir) {
  const avuc::ExperimentConfig config = avuc::load_config(config_path);
  const avuc::Checkpoint ckpt = avuc::load_checkpoint(ckpt_path);
  const avuc::Dataset data = avuc::load_dataset(data_dir + "/base.csv");
  avuc::EvaluateConfig eval_config = config.evaluate;
  if (!shifts.empty() && shifts != "all") {
    eval_config.shifts.clear();
    std::stringstream ss(shifts);
    std::string kind;
    while (std::getline(ss, kind, ',')) {
      eval_config.shifts.push_back(avuc::parse_shift_kind(kind));
    }
    if (eval_config.shifts.empty()) {
      throw avuc::ConfigError("evaluate: empty --shifts list");
    }
  }
  if (mc_override > 0) eval_config.mc = mc_override;
  const avuc::EvaluationOutput output = avuc::run_evaluation(
      ckpt, config.train.method, data, eval_config, config.seed);
  std::filesystem::create_directories(out_dir);
  avuc::write_evaluation(output, out_dir);
}

std::vector<double> test_split_entropies(const avuc::Checkpoint& ckpt,
                                         avuc::Method method,
                                         const std::string& csv_path, int mc,
                                         std::uint64_t seed) {
  const avuc::Dataset data = avuc::load_dataset(csv_path);
  const auto [x, y] = avuc::subset(data, avuc::Split::test);
  if (y.empty()) {
    throw avuc::ConfigError("detect: no test rows in " + csv_path);
  }
  return avuc::predict(ckpt.model, method, x, mc, seed, ckpt.temperature)
      .entropy;
}

void run_detect(const std::string& config_path, const std::string& ckpt_path,
                const std::string& in_path, const std::string& shift_path,
                const std::string& ood_path, const std::string& out_path) {
  if (shift_path.empty() == ood_path.empty()) {
    throw avuc::ConfigError(
        "detect: exactly one of --shift-data or --ood-data is required");
  }
  const avuc::ExperimentConfig config = avuc::load_config(config_path);
  const avuc::Checkpoint ckpt = avuc::load_checkpoint(ckpt_path);
  const avuc::Method method = config.train.method;
  const int mc = config.evaluate.mc;
  const std::vector<double> in_entropies = test_split_entropies(
      ckpt, method, in_path, mc, avuc::derive_seed(config.seed, "detect-in"));
  const std::vector<double> shift_entropies = test_split_entropies(
      ckpt, method, shift_path.empty() ? ood_path : shift_path, mc,
      avuc::derive_seed(config.seed, "detect-shift"));
  const avuc::DetectReport report =
      avuc::detect_from_entropies(in_entropies, shift_entropies);
  avuc::save_detect_report(report, out_path);
  avuc::write_entropy_histogram(
      out_path + ".hist.csv", in_entropies, shift_entropies,
      std::log(static_cast<double>(ckpt.model.class_count)));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"accuracy-vs-uncertainty calibration experiment harness"};
  app.require_subcommand(1);

  std::string config_path, data_dir, ckpt_path, out_path;
  std::string objective, shifts, in_path, shift_path, ood_path;
  int mc_override = 0;
  bool apply = false;

  CLI::App* gen = app.add_subcommand("gen-data", "generate dataset files");
  gen->add_option("--config", config_path, "experiment config JSON")
      ->required();
  gen->add_option("--out", out_path, "output directory")->required();

  CLI::App* tr = app.add_subcommand("train", "train a model");
  tr->add_option("--config", config_path, "experiment config JSON")
      ->required();
  tr->add_option("--data", data_dir, "dataset directory")->required();
  tr->add_option("--out", out_path, "checkpoint output path")->required();

  CLI::App* cal = app.add_subcommand("calibrate", "fit a softmax temperature");
  cal->add_option("--config", config_path, "experiment config JSON")
      ->required();
  cal->add_option("--ckpt", ckpt_path, "checkpoint path")->required();
  cal->add_option("--data", data_dir, "dataset directory")->required();
  cal->add_option("--objective", objective, "nll, avuc, or au-avuc");
  cal->add_option("--out", out_path, "temperature fit output path")
      ->required();
  cal->add_flag("--apply", apply, "write the temperature into the checkpoint");

  CLI::App* ev = app.add_subcommand("evaluate", "score across shifts");
  ev->add_option("--config", config_path, "experiment config JSON")
      ->required();
  ev->add_option("--ckpt", ckpt_path, "checkpoint path")->required();
  ev->add_option("--data", data_dir, "dataset directory")->required();
  ev->add_option("--shifts", shifts, "'all' or comma-separated kinds");
  ev->add_option("--mc", mc_override, "override forward-pass sample count");
  ev->add_option("--out", out_path, "report output directory")->required();

  CLI::App* det = app.add_subcommand("detect", "score shift detection");
  det->add_option("--config", config_path, "experiment config JSON")
      ->required();
  det->add_option("--ckpt", ckpt_path, "checkpoint path")->required();
  det->add_option("--in-data", in_path, "in-distribution dataset CSV")
      ->required();
  det->add_option("--shift-data", shift_path, "shifted dataset CSV");
  det->add_option("--ood-data", ood_path, "out-of-distribution dataset CSV");
  det->add_option("--out", out_path, "detection report output path")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) {
      run_gen_data(config_path, out_path);
    } else if (tr->parsed()) {
      run_train(config_path, data_dir, out_path);
    } else if (cal->parsed()) {
      run_calibrate(config_path, ckpt_path, data_dir, objective, out_path,
                    apply);
    } else if (ev->parsed()) {
      run_evaluate(config_path, ckpt_path, data_dir, shifts, mc_override,
                   out_path);
    } else if (det->parsed()) {
      run_detect(config_path, ckpt_path, in_path, shift_path, ood_path,
                 out_path);
    }
    return 0;
  } catch (const avuc::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const avuc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
