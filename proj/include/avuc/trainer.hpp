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

#ifndef AVUC_TRAINER_HPP_
#define AVUC_TRAINER_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "avuc/avu_loss.hpp"
#include "avuc/checkpoint.hpp"
#include "avuc/datasets.hpp"
#include "avuc/metrics.hpp"
#include "avuc/uncertainty.hpp"
#include "avuc/variational.hpp"

namespace avuc {

inline constexpr double kVanillaRhoInit = -40.0;
inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

enum class Method { svi, svi_avuc, svi_au_avuc, vanilla, vanilla_avuc };

inline std::string to_string(Method method) {
  switch (method) {
    case Method::svi:
      return "svi";
    case Method::svi_avuc:
      return "svi-avuc";
    case Method::svi_au_avuc:
      return "svi-au-avuc";
    case Method::vanilla:
      return "vanilla";
    case Method::vanilla_avuc:
      return "vanilla-avuc";
  }
  throw std::invalid_argument("unknown method");
}

inline Method parse_method(const std::string& name) {
  if (name == "svi") return Method::svi;
  if (name == "svi-avuc") return Method::svi_avuc;
  if (name == "svi-au-avuc") return Method::svi_au_avuc;
  if (name == "vanilla") return Method::vanilla;
  if (name == "vanilla-avuc") return Method::vanilla_avuc;
  throw ConfigError("unknown method: " + name);
}

inline bool method_uses_avuc(Method method) {
  return method == Method::svi_avuc || method == Method::svi_au_avuc ||
         method == Method::vanilla_avuc;
}

inline bool method_is_vanilla(Method method) {
  return method == Method::vanilla || method == Method::vanilla_avuc;
}

enum class OptimizerKind { sgd, adam };

inline std::string to_string(OptimizerKind kind) {
  return kind == OptimizerKind::sgd ? "sgd" : "adam";
}

inline OptimizerKind parse_optimizer(const std::string& name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "adam") return OptimizerKind::adam;
  throw ConfigError("unknown optimizer: " + name);
}

struct TrainConfig {
  Method method = Method::svi;
  int epochs = 10;
  std::size_t batch_size = 64;
  double lr = 0.01;
  // Step schedule: at each listed epoch the learning rate is multiplied by
  // the listed factor; factors compound.
  std::vector<std::pair<int, double>> schedule;
  OptimizerKind optimizer = OptimizerKind::adam;
  double momentum = 0.9;  // sgd only
  double beta = 3.0;
  int mc_train = 1;
  int mc_eval = 32;
  int warmup_epochs = 3;
  std::uint64_t seed = 0;
  std::vector<int> hidden = {16, 16};
  // Scale on the KL term per mini-batch; defaults to 1/M for M batches.
  std::optional<double> kl_scale;
};

inline void validate_config(const TrainConfig& config) {
  if (config.epochs < 1) throw std::invalid_argument("config: epochs < 1");
  if (config.batch_size < 1) {
    throw std::invalid_argument("config: batch_size < 1");
  }
  if (config.lr <= 0.0) throw std::invalid_argument("config: lr <= 0");
  if (config.beta < 0.0) throw std::invalid_argument("config: beta < 0");
  if (config.mc_train < 1 || config.mc_train > 8) {
    throw std::invalid_argument("config: mc_train must be in 1..8");
  }
  if (config.mc_eval < 1) throw std::invalid_argument("config: mc_eval < 1");
  if (config.warmup_epochs < 0) {
    throw std::invalid_argument("config: warmup_epochs < 0");
  }
  if (method_uses_avuc(config.method) && config.epochs < config.warmup_epochs) {
    throw std::invalid_argument(
        "config: epochs must be >= warmup_epochs for avuc methods");
  }
  if (config.momentum < 0.0 || config.momentum >= 1.0) {
    throw std::invalid_argument("config: momentum must be in [0, 1)");
  }
  if (config.kl_scale.has_value() && *config.kl_scale < 0.0) {
    throw std::invalid_argument("config: kl_scale < 0");
  }
  for (const auto& [epoch, mult] : config.schedule) {
    if (epoch < 0 || mult <= 0.0) {
      throw std::invalid_argument("config: bad schedule entry");
    }
  }
  for (int h : config.hidden) {
    if (h < 1) throw std::invalid_argument("config: hidden width < 1");
  }
}

inline double scheduled_lr(const TrainConfig& config, int epoch) {
  double lr = config.lr;
  for (const auto& [at, mult] : config.schedule) {
    if (at <= epoch) lr *= mult;
  }
  return lr;
}

// Per-parameter optimizer slots. Adam reuses the two tensor banks as the
// first and second moment; sgd uses only the first as the momentum buffer.
struct OptimizerState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  long long step = 0;
};

inline OptimizerState make_optimizer_state(const std::vector<Value>& params) {
  OptimizerState state;
  for (const Value& p : params) {
    state.m.push_back(Tensor::zeros_like(p.value()));
    state.v.push_back(Tensor::zeros_like(p.value()));
  }
  return state;
}

inline void sgd_step(std::vector<Value>& params, OptimizerState& state,
                     double lr, double momentum) {
  if (lr <= 0.0) throw std::invalid_argument("sgd_step: lr <= 0");
  if (params.size() != state.m.size()) {
    throw std::invalid_argument("sgd_step: state size mismatch");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor& grad = params[i].grad();
    if (grad.numel() == 0) continue;
    Tensor& buf = state.m[i];
    Tensor& value = params[i].mutable_value();
    for (std::size_t j = 0; j < value.numel(); ++j) {
      buf[j] = momentum * buf[j] + grad[j];
      value[j] -= lr * buf[j];
    }
  }
  ++state.step;
}

inline void adam_step(std::vector<Value>& params, OptimizerState& state,
                      double lr) {
  if (lr <= 0.0) throw std::invalid_argument("adam_step: lr <= 0");
  if (params.size() != state.m.size()) {
    throw std::invalid_argument("adam_step: state size mismatch");
  }
  ++state.step;
  const double bc1 =
      1.0 - std::pow(kAdamBeta1, static_cast<double>(state.step));
  const double bc2 =
      1.0 - std::pow(kAdamBeta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor& grad = params[i].grad();
    if (grad.numel() == 0) continue;
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    Tensor& value = params[i].mutable_value();
    for (std::size_t j = 0; j < value.numel(); ++j) {
      m[j] = kAdamBeta1 * m[j] + (1.0 - kAdamBeta1) * grad[j];
      v[j] = kAdamBeta2 * v[j] + (1.0 - kAdamBeta2) * grad[j] * grad[j];
      const double m_hat = m[j] / bc1;
      const double v_hat = v[j] / bc2;
      value[j] -= lr * m_hat / (std::sqrt(v_hat) + kAdamEps);
    }
  }
}

struct EpochStats {
  int epoch = 0;
  double elbo = 0.0;
  double avuc = 0.0;
  double total = 0.0;
  double acc = 0.0;
  double avu = 0.0;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochStats> history;
};

inline void write_history(const std::vector<EpochStats>& history,
                          const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open history file for write: " + path);
  out << "epoch,elbo,avuc,total,acc,avu\n";
  out.precision(17);
  for (const EpochStats& row : history) {
    out << row.epoch << "," << row.elbo << "," << row.avuc << "," << row.total
        << "," << row.acc << "," << row.avu << "\n";
  }
  if (!out) throw ConfigError("failed writing history: " + path);
}

inline BnnModel make_model(const Dataset& data, const TrainConfig& config,
                           Rng& rng) {
  const double rho_init =
      method_is_vanilla(config.method) ? kVanillaRhoInit : -5.0;
  return make_mlp(data.dim(), config.hidden,
                  static_cast<int>(num_classes(data)), rng, rho_init);
}

namespace detail {

inline Tensor gather_rows(const Tensor& features,
                          const std::vector<std::size_t>& rows,
                          std::size_t begin, std::size_t end) {
  Tensor out = Tensor::zeros({end - begin, features.cols()});
  for (std::size_t r = begin; r < end; ++r) {
    for (std::size_t c = 0; c < features.cols(); ++c) {
      out.at(r - begin, c) = features.at(rows[r], c);
    }
  }
  return out;
}

// Deterministic forward through the mean weights; mutual information is
// zero because there is only one sample.
inline McPrediction mean_prediction(const BnnModel& model, const Tensor& x,
                                    double temperature = 1.0) {
  if (temperature <= 0.0) {
    throw std::invalid_argument("mean_prediction: temperature must be positive");
  }
  McPrediction out;
  Tensor logits = model.mean_forward(constant(x)).value();
  if (temperature != 1.0) {
    for (double& v : logits.data()) v /= temperature;
  }
  Tensor probs = softmax_values(logits);
  out.per_sample_probs = {probs};
  out.pred_label = argmax_rows(probs);
  out.confidence.resize(probs.rows());
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    out.confidence[i] = probs.at(i, out.pred_label[i]);
  }
  out.entropy = predictive_entropy(probs);
  out.mutual_info = mutual_information(out.per_sample_probs);
  out.mean_probs = std::move(probs);
  return out;
}

}  // namespace detail

// Prediction used for epoch monitoring and downstream evaluation: MC over
// weight samples for variational methods, the deterministic mean forward
// pass for vanilla ones.
inline McPrediction predict(const BnnModel& model, Method method,
                            const Tensor& x, int mc_eval, std::uint64_t seed,
                            double temperature = 1.0) {
  if (method_is_vanilla(method)) {
    return detail::mean_prediction(model, x, temperature);
  }
  return mc_predict(model, x, mc_eval, seed, temperature);
}

// Mini-batch training loop with ELBO warm-up. The accuracy-vs-uncertainty
// term joins the objective only after warmup_epochs, using the uncertainty
// threshold learned at the warm-up boundary and frozen from then on.
// Epoch stats come from a fresh pass over the train split.
inline TrainResult train(BnnModel& model, const Dataset& data,
                         const TrainConfig& config) {
  validate_config(config);
  const auto [train_x, train_y] = subset(data, Split::train);
  if (train_y.empty()) throw std::invalid_argument("train: empty train split");
  const std::size_t n = train_y.size();
  const std::size_t batches =
      (n + config.batch_size - 1) / config.batch_size;
  const double kl_scale =
      config.kl_scale.value_or(1.0 / static_cast<double>(batches));
  const bool vanilla = method_is_vanilla(config.method);

  std::vector<Value> params =
      vanilla ? model.mean_parameters() : model.parameters();
  OptimizerState opt_state = make_optimizer_state(params);
  Rng noise_rng(derive_seed(config.seed, "noise"));

  std::optional<double> u_th;
  auto eval_on_train = [&](int epoch) {
    return predict(model, config.method, train_x, config.mc_eval,
                   derive_seed(config.seed, "eval", epoch));
  };
  auto learn_u_th = [&](const McPrediction& pred) {
    std::vector<bool> correct(n);
    for (std::size_t i = 0; i < n; ++i) {
      correct[i] = pred.pred_label[i] == train_y[i];
    }
    return learn_threshold(pred.entropy, correct).u_th;
  };

  TrainResult result;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (epoch == config.warmup_epochs && !u_th.has_value()) {
      u_th = learn_u_th(eval_on_train(epoch));
    }
    const bool use_avuc = method_uses_avuc(config.method) &&
                          config.beta > 0.0 && epoch >= config.warmup_epochs;
    const double lr = scheduled_lr(config, epoch);

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng order_rng(derive_seed(config.seed, "order", epoch));
    std::shuffle(order.begin(), order.end(), order_rng);

    double elbo_sum = 0.0, avuc_sum = 0.0, total_sum = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t begin = b * config.batch_size;
      const std::size_t end = std::min(n, begin + config.batch_size);
      const Tensor batch_x = detail::gather_rows(train_x, order, begin, end);
      std::vector<int> batch_y;
      batch_y.reserve(end - begin);
      for (std::size_t r = begin; r < end; ++r) {
        batch_y.push_back(train_y[order[r]]);
      }

      const Value input = constant(batch_x);
      std::vector<Value> logit_samples;
      if (vanilla) {
        logit_samples.push_back(model.mean_forward(input));
      } else {
        for (int t = 0; t < config.mc_train; ++t) {
          logit_samples.push_back(model.sample_forward(input, noise_rng));
        }
      }

      Value elbo = vanilla
                       ? cross_entropy_loss(logit_samples.front(), batch_y)
                       : elbo_loss(logit_samples, batch_y, model.kl_to_prior(),
                                   kl_scale);
      Value loss = elbo;
      double avuc_value = 0.0;
      if (use_avuc) {
        const SoftBatch soft = soft_batch_from_logits(logit_samples, batch_y);
        const Value avuc_term =
            config.method == Method::svi_au_avuc
                ? au_avuc_loss(soft, default_t_grid())
                : avuc_loss(soft_counts(soft, *u_th));
        avuc_value = avuc_term.value()[0];
        loss = total_loss(elbo, avuc_term, config.beta);
      }

      const double loss_value = loss.value()[0];
      if (!std::isfinite(loss_value)) {
        throw NumericalError("training diverged at epoch " +
                             std::to_string(epoch) + " batch " +
                             std::to_string(b));
      }

      for (Value& p : params) p.zero_grad();
      loss.backward();
      if (config.optimizer == OptimizerKind::sgd) {
        sgd_step(params, opt_state, lr, config.momentum);
      } else {
        adam_step(params, opt_state, lr);
      }

      const double weight = static_cast<double>(end - begin);
      elbo_sum += weight * elbo.value()[0];
      avuc_sum += weight * avuc_value;
      total_sum += weight * loss_value;
    }

    const McPrediction pred = eval_on_train(epoch);
    const PredictiveBatch batch =
        PredictiveBatch::from_prediction(pred, train_y);
    const double monitor_u_th = u_th.has_value() ? *u_th : learn_u_th(pred);

    EpochStats stats;
    stats.epoch = epoch;
    stats.elbo = elbo_sum / static_cast<double>(n);
    stats.avuc = avuc_sum / static_cast<double>(n);
    stats.total = total_sum / static_cast<double>(n);
    stats.acc = accuracy(batch);
    stats.avu = avu(hard_counts(batch, monitor_u_th));
    result.history.push_back(stats);
  }

  if (!u_th.has_value()) {
    u_th = learn_u_th(eval_on_train(config.epochs));
  }
  result.checkpoint.model = model;
  result.checkpoint.u_th = u_th;
  result.checkpoint.temperature = 1.0;
  return result;
}

inline TrainResult train(const Dataset& data, const TrainConfig& config) {
  validate_config(config);
  Rng init_rng(derive_seed(config.seed, "init"));
  BnnModel model = make_model(data, config, init_rng);
  return train(model, data, config);
}

}  // namespace avuc

#endif  // AVUC_TRAINER_HPP_
