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

#ifndef AVUC_GRAPH_HPP_
#define AVUC_GRAPH_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <unordered_set>
#include <utility>
#include <vector>

#include "avuc/tensor.hpp"

namespace avuc {

namespace detail {

struct Node {
  Tensor val;
  Tensor grad;  // persistent, accumulated across backward passes
  Tensor tmp;   // per-pass adjoint, scratch only
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;
};

// Lazily sized accumulation so untouched gradients stay empty.
inline void accum(Tensor& dst, const Shape& shape, const Tensor& g) {
  if (dst.empty() && shape_numel(shape) > 0) dst = Tensor::zeros(shape);
  for (std::size_t i = 0; i < g.numel(); ++i) dst[i] += g[i];
}

inline void accum_into_tmp(Node& parent, const Tensor& g) {
  if (!parent.requires_grad) return;
  accum(parent.tmp, parent.val.shape(), g);
}

}  // namespace detail

// Handle to one node of a reverse-mode computation graph. Copies share the
// node, so leaf parameters keep their gradient across graph rebuilds.
class Value {
 public:
  Value() = default;
  explicit Value(Tensor t, bool requires_grad = false)
      : node_(std::make_shared<detail::Node>()) {
    node_->val = std::move(t);
    node_->requires_grad = requires_grad;
  }

  bool defined() const { return node_ != nullptr; }
  const Tensor& value() const { return node_->val; }
  Tensor& mutable_value() { return node_->val; }
  bool requires_grad() const { return node_ && node_->requires_grad; }

  // Valid only after at least one backward pass touched this node.
  const Tensor& grad() const { return node_->grad; }
  void zero_grad() { node_->grad = Tensor(); }

  void backward() const;

  std::shared_ptr<detail::Node> node() const { return node_; }
  static Value wrap(std::shared_ptr<detail::Node> n) {
    Value v;
    v.node_ = std::move(n);
    return v;
  }

 private:
  std::shared_ptr<detail::Node> node_;
};

inline Value constant(Tensor t) { return Value(std::move(t), false); }
inline Value constant(double v) { return Value(Tensor::scalar(v), false); }
inline Value parameter(Tensor t) { return Value(std::move(t), true); }

namespace detail {

inline Value make_op(Tensor out, std::vector<Value> parents, const char* op,
                     std::function<void(Node&)> backward) {
  check_finite(out, op);
  auto node = std::make_shared<Node>();
  node->val = std::move(out);
  for (const Value& p : parents) {
    node->parents.push_back(p.node());
    node->requires_grad = node->requires_grad || p.requires_grad();
  }
  if (node->requires_grad) node->backward_fn = std::move(backward);
  return Value::wrap(node);
}

inline void require_same_shape(const Tensor& a, const Tensor& b,
                               const char* op) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                shape_str(a.shape()) + " vs " +
                                shape_str(b.shape()));
  }
}

}  // namespace detail

inline void Value::backward() const {
  if (!node_) throw std::invalid_argument("backward on empty Value");
  if (node_->val.numel() != 1) {
    throw std::invalid_argument("backward requires a scalar root, got shape " +
                                shape_str(node_->val.shape()));
  }
  // Post-order DFS for a topological order over the reachable subgraph.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      detail::Node* parent = node->parents[next++].get();
      if (seen.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  for (detail::Node* n : order) n->tmp = Tensor();
  detail::accum(node_->tmp, node_->val.shape(), Tensor::full(node_->val.shape(), 1.0));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* n = *it;
    if (n->backward_fn && !n->tmp.empty()) n->backward_fn(*n);
  }
  // Each pass contributes its own adjoints, so two passes accumulate 2x.
  for (detail::Node* n : order) {
    if (n->requires_grad && !n->tmp.empty()) {
      detail::accum(n->grad, n->val.shape(), n->tmp);
    }
    n->tmp = Tensor();
  }
}

// ---- elementwise binary ops with scalar broadcast ----------------------

namespace detail {

enum class Broadcast { none, left_scalar, right_scalar, row_bias };

inline Broadcast binary_mode(const Tensor& a, const Tensor& b, const char* op,
                             bool allow_row_bias) {
  if (a.same_shape(b)) return Broadcast::none;
  if (a.is_scalar()) return Broadcast::left_scalar;
  if (b.is_scalar()) return Broadcast::right_scalar;
  if (allow_row_bias && a.rank() == 2 && b.rank() == 1 &&
      a.cols() == b.shape()[0]) {
    return Broadcast::row_bias;
  }
  throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                              shape_str(a.shape()) + " vs " +
                              shape_str(b.shape()));
}

template <typename F>
Tensor binary_eval(const Tensor& a, const Tensor& b, Broadcast mode, F f) {
  switch (mode) {
    case Broadcast::none: {
      Tensor out = Tensor::zeros_like(a);
      for (std::size_t i = 0; i < a.numel(); ++i) out[i] = f(a[i], b[i]);
      return out;
    }
    case Broadcast::left_scalar: {
      Tensor out = Tensor::zeros_like(b);
      for (std::size_t i = 0; i < b.numel(); ++i) out[i] = f(a[0], b[i]);
      return out;
    }
    case Broadcast::right_scalar: {
      Tensor out = Tensor::zeros_like(a);
      for (std::size_t i = 0; i < a.numel(); ++i) out[i] = f(a[i], b[0]);
      return out;
    }
    case Broadcast::row_bias: {
      Tensor out = Tensor::zeros_like(a);
      const std::size_t cols = a.cols();
      for (std::size_t i = 0; i < a.numel(); ++i) out[i] = f(a[i], b[i % cols]);
      return out;
    }
  }
  throw std::logic_error("unreachable");
}

// dfa/dfb give the local partials as functions of (a_elem, b_elem).
template <typename Fa, typename Fb>
void binary_backward(Node& self, Broadcast mode, Fa dfa, Fb dfb) {
  Node& a = *self.parents[0];
  Node& b = *self.parents[1];
  const Tensor& up = self.tmp;
  auto a_at = [&](std::size_t i) {
    return mode == Broadcast::left_scalar ? a.val[0] : a.val[i];
  };
  auto b_at = [&](std::size_t i) {
    if (mode == Broadcast::right_scalar) return b.val[0];
    if (mode == Broadcast::row_bias) return b.val[i % b.val.numel()];
    return b.val[i];
  };
  if (a.requires_grad) {
    Tensor ga = Tensor::zeros(a.val.shape());
    for (std::size_t i = 0; i < up.numel(); ++i) {
      double g = up[i] * dfa(a_at(i), b_at(i));
      ga[mode == Broadcast::left_scalar ? 0 : i] += g;
    }
    accum(a.tmp, a.val.shape(), ga);
  }
  if (b.requires_grad) {
    Tensor gb = Tensor::zeros(b.val.shape());
    for (std::size_t i = 0; i < up.numel(); ++i) {
      double g = up[i] * dfb(a_at(i), b_at(i));
      std::size_t j = i;
      if (mode == Broadcast::right_scalar) j = 0;
      if (mode == Broadcast::row_bias) j = i % b.val.numel();
      gb[j] += g;
    }
    accum(b.tmp, b.val.shape(), gb);
  }
}

}  // namespace detail

inline Value add(const Value& a, const Value& b) {
  auto mode = detail::binary_mode(a.value(), b.value(), "add", true);
  Tensor out = detail::binary_eval(a.value(), b.value(), mode,
                                   [](double x, double y) { return x + y; });
  return detail::make_op(std::move(out), {a, b}, "add", [mode](detail::Node& self) {
    detail::binary_backward(
        self, mode, [](double, double) { return 1.0; },
        [](double, double) { return 1.0; });
  });
}

inline Value sub(const Value& a, const Value& b) {
  auto mode = detail::binary_mode(a.value(), b.value(), "sub", true);
  Tensor out = detail::binary_eval(a.value(), b.value(), mode,
                                   [](double x, double y) { return x - y; });
  return detail::make_op(std::move(out), {a, b}, "sub", [mode](detail::Node& self) {
    detail::binary_backward(
        self, mode, [](double, double) { return 1.0; },
        [](double, double) { return -1.0; });
  });
}

inline Value mul(const Value& a, const Value& b) {
  auto mode = detail::binary_mode(a.value(), b.value(), "mul", false);
  Tensor out = detail::binary_eval(a.value(), b.value(), mode,
                                   [](double x, double y) { return x * y; });
  return detail::make_op(std::move(out), {a, b}, "mul", [mode](detail::Node& self) {
    detail::binary_backward(
        self, mode, [](double, double y) { return y; },
        [](double x, double) { return x; });
  });
}

inline Value divide(const Value& a, const Value& b) {
  auto mode = detail::binary_mode(a.value(), b.value(), "divide", false);
  Tensor out = detail::binary_eval(a.value(), b.value(), mode,
                                   [](double x, double y) { return x / y; });
  return detail::make_op(std::move(out), {a, b}, "divide",
                         [mode](detail::Node& self) {
    detail::binary_backward(
        self, mode, [](double, double y) { return 1.0 / y; },
        [](double x, double y) { return -x / (y * y); });
  });
}

// ---- elementwise unary ops ----------------------------------------------

namespace detail {

template <typename F, typename DF>
Value unary_op(const Value& a, const char* name, F f, DF df) {
  Tensor out = Tensor::zeros_like(a.value());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = f(a.value()[i]);
  return make_op(std::move(out), {a}, name, [df](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    Tensor g = Tensor::zeros(p.val.shape());
    for (std::size_t i = 0; i < g.numel(); ++i) {
      g[i] = self.tmp[i] * df(p.val[i], self.val[i]);
    }
    accum(p.tmp, p.val.shape(), g);
  });
}

}  // namespace detail

inline Value negate(const Value& a) {
  return detail::unary_op(
      a, "negate", [](double x) { return -x; },
      [](double, double) { return -1.0; });
}

inline Value relu(const Value& a) {
  return detail::unary_op(
      a, "relu", [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

inline Value tanh(const Value& a) {
  return detail::unary_op(
      a, "tanh", [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

inline double softplus_scalar(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double sigmoid_scalar(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                  : std::exp(x) / (1.0 + std::exp(x));
}

inline Value softplus(const Value& a) {
  return detail::unary_op(
      a, "softplus", [](double x) { return softplus_scalar(x); },
      [](double x, double) { return sigmoid_scalar(x); });
}

inline Value exp(const Value& a) {
  return detail::unary_op(
      a, "exp", [](double x) { return std::exp(x); },
      [](double, double y) { return y; });
}

// Plain log; rejects non-positive input outright.
inline Value log(const Value& a) {
  for (double v : a.value().data()) {
    if (v <= 0.0) throw NumericalError("log of non-positive value");
  }
  return detail::unary_op(
      a, "log", [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

// log(x + eps), the guarded form used for entropies and AvU losses.
inline Value log_eps(const Value& a, double eps = 1e-12) {
  for (double v : a.value().data()) {
    if (v + eps <= 0.0) throw NumericalError("log_eps of non-positive value");
  }
  return detail::unary_op(
      a, "log_eps", [eps](double x) { return std::log(x + eps); },
      [eps](double x, double) { return 1.0 / (x + eps); });
}

inline Value add_scalar(const Value& a, double c) {
  return detail::unary_op(
      a, "add_scalar", [c](double x) { return x + c; },
      [](double, double) { return 1.0; });
}

inline Value mul_scalar(const Value& a, double c) {
  return detail::unary_op(
      a, "mul_scalar", [c](double x) { return x * c; },
      [c](double, double) { return c; });
}

// ---- linear algebra ------------------------------------------------------

inline Value matmul(const Value& a, const Value& b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.rank() != 2 || B.rank() != 2 || A.cols() != B.rows()) {
    throw std::invalid_argument("matmul: incompatible shapes " +
                                shape_str(A.shape()) + " x " +
                                shape_str(B.shape()));
  }
  const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
  Tensor out = Tensor::zeros({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double av = A.at(i, p);
      for (std::size_t j = 0; j < n; ++j) out.at(i, j) += av * B.at(p, j);
    }
  }
  return detail::make_op(std::move(out), {a, b}, "matmul",
                         [m, k, n](detail::Node& self) {
    detail::Node& pa = *self.parents[0];
    detail::Node& pb = *self.parents[1];
    const Tensor& up = self.tmp;
    if (pa.requires_grad) {
      Tensor ga = Tensor::zeros({m, k});
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          const double u = up.at(i, j);
          for (std::size_t p = 0; p < k; ++p) ga.at(i, p) += u * pb.val.at(p, j);
        }
      }
      detail::accum(pa.tmp, pa.val.shape(), ga);
    }
    if (pb.requires_grad) {
      Tensor gb = Tensor::zeros({k, n});
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const double av = pa.val.at(i, p);
          for (std::size_t j = 0; j < n; ++j) gb.at(p, j) += av * up.at(i, j);
        }
      }
      detail::accum(pb.tmp, pb.val.shape(), gb);
    }
  });
}

inline Value transpose(const Value& a) {
  const Tensor& A = a.value();
  if (A.rank() != 2) {
    throw std::invalid_argument("transpose requires rank-2 tensor");
  }
  const std::size_t m = A.rows(), n = A.cols();
  Tensor out = Tensor::zeros({n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out.at(j, i) = A.at(i, j);
  return detail::make_op(std::move(out), {a}, "transpose",
                         [m, n](detail::Node& self) {
    detail::Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    Tensor g = Tensor::zeros({m, n});
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) g.at(i, j) = self.tmp.at(j, i);
    detail::accum(p.tmp, p.val.shape(), g);
  });
}

// ---- reductions and row ops ---------------------------------------------

inline Value sum(const Value& a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return detail::make_op(Tensor::scalar(s), {a}, "sum", [](detail::Node& self) {
    detail::Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    detail::accum(p.tmp, p.val.shape(),
                  Tensor::full(p.val.shape(), self.tmp[0]));
  });
}

inline Value mean(const Value& a) {
  if (a.value().numel() == 0) {
    throw std::invalid_argument("mean of empty tensor");
  }
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  const double inv = 1.0 / static_cast<double>(a.value().numel());
  return detail::make_op(Tensor::scalar(s * inv), {a}, "mean",
                         [inv](detail::Node& self) {
    detail::Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    detail::accum(p.tmp, p.val.shape(),
                  Tensor::full(p.val.shape(), self.tmp[0] * inv));
  });
}

inline Value row_sum(const Value& a) {
  const Tensor& A = a.value();
  if (A.rank() != 2) throw std::invalid_argument("row_sum requires rank 2");
  const std::size_t m = A.rows(), n = A.cols();
  Tensor out = Tensor::zeros({m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i] += A.at(i, j);
  return detail::make_op(std::move(out), {a}, "row_sum",
                         [m, n](detail::Node& self) {
    detail::Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    Tensor g = Tensor::zeros({m, n});
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) g.at(i, j) = self.tmp[i];
    detail::accum(p.tmp, p.val.shape(), g);
  });
}

// Per-row maximum; the gradient routes to the first argmax of each row.
inline Value row_max(const Value& a) {
  const Tensor& A = a.value();
  if (A.rank() != 2) throw std::invalid_argument("row_max requires rank 2");
  const std::size_t m = A.rows(), n = A.cols();
  if (n == 0) throw std::invalid_argument("row_max of zero-width matrix");
  Tensor out = Tensor::zeros({m});
  std::vector<std::size_t> argmax(m, 0);
  for (std::size_t i = 0; i < m; ++i) {
    double best = A.at(i, 0);
    for (std::size_t j = 1; j < n; ++j) {
      if (A.at(i, j) > best) {
        best = A.at(i, j);
        argmax[i] = j;
      }
    }
    out[i] = best;
  }
  return detail::make_op(std::move(out), {a}, "row_max",
                         [m, n, argmax](detail::Node& self) {
    detail::Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    Tensor g = Tensor::zeros({m, n});
    for (std::size_t i = 0; i < m; ++i) g.at(i, argmax[i]) = self.tmp[i];
    detail::accum(p.tmp, p.val.shape(), g);
  });
}

inline Value reduce_max(const Value& a) {
  const Tensor& A = a.value();
  if (A.numel() == 0) throw std::invalid_argument("reduce_max of empty tensor");
  std::size_t arg = 0;
  for (std::size_t i = 1; i < A.numel(); ++i) {
    if (A[i] > A[arg]) arg = i;
  }
  return detail::make_op(Tensor::scalar(A[arg]), {a}, "reduce_max",
                         [arg](detail::Node& self) {
    detail::Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    Tensor g = Tensor::zeros(p.val.shape());
    g[arg] = self.tmp[0];
    detail::accum(p.tmp, p.val.shape(), g);
  });
}

// out[i] = a[i, idx[i]]; used to pick the true-class or predicted-class entry.
inline Value gather_cols(const Value& a, const std::vector<int>& idx) {
  const Tensor& A = a.value();
  if (A.rank() != 2) throw std::invalid_argument("gather_cols requires rank 2");
  const std::size_t m = A.rows(), n = A.cols();
  if (idx.size() != m) {
    throw std::invalid_argument("gather_cols: index count " +
                                std::to_string(idx.size()) + " != rows " +
                                std::to_string(m));
  }
  Tensor out = Tensor::zeros({m});
  for (std::size_t i = 0; i < m; ++i) {
    if (idx[i] < 0 || static_cast<std::size_t>(idx[i]) >= n) {
      throw std::invalid_argument("gather_cols: index out of range");
    }
    out[i] = A.at(i, static_cast<std::size_t>(idx[i]));
  }
  return detail::make_op(std::move(out), {a}, "gather_cols",
                         [m, n, idx](detail::Node& self) {
    detail::Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    Tensor g = Tensor::zeros({m, n});
    for (std::size_t i = 0; i < m; ++i) {
      g.at(i, static_cast<std::size_t>(idx[i])) += self.tmp[i];
    }
    detail::accum(p.tmp, p.val.shape(), g);
  });
}

// ---- softmax family ------------------------------------------------------

inline Tensor softmax_values(const Tensor& logits) {
  if (logits.rank() != 2) {
    throw std::invalid_argument("softmax requires rank-2 logits");
  }
  const std::size_t m = logits.rows(), n = logits.cols();
  Tensor out = Tensor::zeros({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    double mx = logits.at(i, 0);
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, logits.at(i, j));
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      out.at(i, j) = std::exp(logits.at(i, j) - mx);
      z += out.at(i, j);
    }
    for (std::size_t j = 0; j < n; ++j) out.at(i, j) /= z;
  }
  return out;
}

inline Value softmax(const Value& a) {
  Tensor out = softmax_values(a.value());
  const std::size_t m = out.rows(), n = out.cols();
  return detail::make_op(std::move(out), {a}, "softmax",
                         [m, n](detail::Node& self) {
    detail::Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    Tensor g = Tensor::zeros({m, n});
    for (std::size_t i = 0; i < m; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        dot += self.tmp.at(i, j) * self.val.at(i, j);
      }
      for (std::size_t j = 0; j < n; ++j) {
        g.at(i, j) = self.val.at(i, j) * (self.tmp.at(i, j) - dot);
      }
    }
    detail::accum(p.tmp, p.val.shape(), g);
  });
}

inline Value log_softmax(const Value& a) {
  const Tensor& A = a.value();
  if (A.rank() != 2) {
    throw std::invalid_argument("log_softmax requires rank-2 logits");
  }
  const std::size_t m = A.rows(), n = A.cols();
  Tensor out = Tensor::zeros({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    double mx = A.at(i, 0);
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, A.at(i, j));
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += std::exp(A.at(i, j) - mx);
    const double lse = mx + std::log(z);
    for (std::size_t j = 0; j < n; ++j) out.at(i, j) = A.at(i, j) - lse;
  }
  return detail::make_op(std::move(out), {a}, "log_softmax",
                         [m, n](detail::Node& self) {
    detail::Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    Tensor g = Tensor::zeros({m, n});
    for (std::size_t i = 0; i < m; ++i) {
      double rowsum = 0.0;
      for (std::size_t j = 0; j < n; ++j) rowsum += self.tmp.at(i, j);
      for (std::size_t j = 0; j < n; ++j) {
        g.at(i, j) = self.tmp.at(i, j) - std::exp(self.val.at(i, j)) * rowsum;
      }
    }
    detail::accum(p.tmp, p.val.shape(), g);
  });
}

// ---- operator sugar ------------------------------------------------------

inline Value operator+(const Value& a, const Value& b) { return add(a, b); }
inline Value operator-(const Value& a, const Value& b) { return sub(a, b); }
inline Value operator*(const Value& a, const Value& b) { return mul(a, b); }
inline Value operator/(const Value& a, const Value& b) { return divide(a, b); }
inline Value operator-(const Value& a) { return negate(a); }
inline Value operator+(const Value& a, double c) { return add_scalar(a, c); }
inline Value operator+(double c, const Value& a) { return add_scalar(a, c); }
inline Value operator-(const Value& a, double c) { return add_scalar(a, -c); }
inline Value operator-(double c, const Value& a) {
  return add_scalar(negate(a), c);
}
inline Value operator*(const Value& a, double c) { return mul_scalar(a, c); }
inline Value operator*(double c, const Value& a) { return mul_scalar(a, c); }
inline Value operator/(const Value& a, double c) {
  return mul_scalar(a, 1.0 / c);
}
inline Value operator/(double c, const Value& a) {
  return divide(constant(c), a);
}

}  // namespace avuc

#endif  // AVUC_GRAPH_HPP_
