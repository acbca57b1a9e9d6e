// Copyright (c) 2026 The NFVC Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef NFVC_MATRIX_H_
#define NFVC_MATRIX_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace nfvc {

// Dense row-major matrix of doubles. Plain value type with no gradient
// tracking; see Tensor for the differentiable counterpart.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  static Matrix Identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) {
    return values_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return values_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) {
    return {values_.data() + r * cols_, cols_};
  }
  std::span<const double> row(std::size_t r) const {
    return {values_.data() + r * cols_, cols_};
  }

  std::span<const double> values() const { return values_; }
  std::span<double> mutable_values() { return values_; }
  const std::vector<double>& vector() const { return values_; }

  bool AllFinite() const;
  double MaxAbsDiff(const Matrix& other) const;

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

std::string ShapeString(std::size_t rows, std::size_t cols);

// A t x d frame sequence: the data domain (mel frames) and the latent
// domain of the flow. Requires t >= 1, d >= 1 and finite values.
class MelTensor {
 public:
  MelTensor() = default;
  explicit MelTensor(Matrix values);
  MelTensor(std::size_t frames, std::size_t bins, std::vector<double> values);

  static MelTensor Zeros(std::size_t frames, std::size_t bins);

  std::size_t frames() const { return values_.rows(); }
  std::size_t bins() const { return values_.cols(); }
  const Matrix& matrix() const { return values_; }
  double operator()(std::size_t t, std::size_t c) const {
    return values_(t, c);
  }

  double MaxAbsDiff(const MelTensor& other) const {
    return values_.MaxAbsDiff(other.values_);
  }
  bool operator==(const MelTensor& other) const = default;

 private:
  Matrix values_;
};

}  // namespace nfvc

#endif  // NFVC_MATRIX_H_
