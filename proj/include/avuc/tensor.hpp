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

#ifndef AVUC_TENSOR_HPP_
#define AVUC_TENSOR_HPP_

#include <cmath>
#include <cstddef>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace avuc {

// Raised when a computation produces NaN/Inf or leaves a function's domain.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Raised for invalid configuration (bad keys, ranges, malformed files).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t extent : shape) n *= extent;
  return n;
}

inline std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << ")";
  return os.str();
}

// Dense row-major tensor of doubles. Rank 0 is a scalar, rank 2 a matrix.
class Tensor {
 public:
  Tensor() : shape_{0} {}
  Tensor(Shape shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_numel(shape_)) {
      throw std::invalid_argument("tensor data length " +
                                  std::to_string(data_.size()) +
                                  " does not match shape " + shape_str(shape_));
    }
  }

  static Tensor scalar(double v) { return Tensor(Shape{}, {v}); }
  static Tensor zeros(Shape shape) {
    std::vector<double> d(shape_numel(shape), 0.0);
    return Tensor(std::move(shape), std::move(d));
  }
  static Tensor full(Shape shape, double v) {
    std::vector<double> d(shape_numel(shape), v);
    return Tensor(std::move(shape), std::move(d));
  }
  static Tensor vector(std::vector<double> data) {
    Shape s{data.size()};
    return Tensor(std::move(s), std::move(data));
  }
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::vector<double> data) {
    return Tensor(Shape{rows, cols}, std::move(data));
  }
  static Tensor zeros_like(const Tensor& other) { return zeros(other.shape()); }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t numel() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  bool is_scalar() const { return shape_.empty(); }

  std::size_t rows() const {
    require_rank(2, "rows");
    return shape_[0];
  }
  std::size_t cols() const {
    require_rank(2, "cols");
    return shape_[1];
  }

  double item() const {
    if (numel() != 1) {
      throw std::invalid_argument("item() on tensor with " +
                                  std::to_string(numel()) + " elements");
    }
    return data_[0];
  }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) {
    require_rank(2, "at");
    return data_[r * shape_[1] + c];
  }
  double at(std::size_t r, std::size_t c) const {
    require_rank(2, "at");
    return data_[r * shape_[1] + c];
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

 private:
  void require_rank(std::size_t r, const char* op) const {
    if (shape_.size() != r) {
      throw std::invalid_argument(std::string(op) + " requires rank " +
                                  std::to_string(r) + " tensor, got shape " +
                                  shape_str(shape_));
    }
  }

  Shape shape_;
  std::vector<double> data_;
};

inline bool all_finite(const Tensor& t) {
  for (double v : t.data()) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

inline void check_finite(const Tensor& t, const char* op) {
  if (!all_finite(t)) {
    throw NumericalError(std::string("non-finite value produced by ") + op);
  }
}

}  // namespace avuc

#endif  // AVUC_TENSOR_HPP_
