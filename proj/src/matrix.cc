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

#include "nfvc/matrix.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include "nfvc/error.h"

namespace nfvc {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols) {
    std::ostringstream os;
    os << "matrix " << ShapeString(rows, cols) << " given " << values_.size()
       << " values";
    throw ShapeError(os.str());
  }
}

Matrix Matrix::Identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

bool Matrix::AllFinite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

double Matrix::MaxAbsDiff(const Matrix& other) const {
  if (rows_ != other.rows_ || cols_ != other.cols_) {
    throw ShapeError("cannot compare " + ShapeString(rows_, cols_) + " with " +
                     ShapeString(other.rows_, other.cols_));
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    worst = std::max(worst, std::abs(values_[i] - other.values_[i]));
  }
  return worst;
}

std::string ShapeString(std::size_t rows, std::size_t cols) {
  std::ostringstream os;
  os << "[" << rows << ", " << cols << "]";
  return os.str();
}

MelTensor::MelTensor(Matrix values) : values_(std::move(values)) {
  if (values_.rows() == 0 || values_.cols() == 0) {
    throw ShapeError("mel tensor needs at least one frame and one bin, got " +
                     ShapeString(values_.rows(), values_.cols()));
  }
  if (!values_.AllFinite()) {
    throw NumericError("mel tensor contains non-finite values");
  }
}

MelTensor::MelTensor(std::size_t frames, std::size_t bins,
                     std::vector<double> values)
    : MelTensor(Matrix(frames, bins, std::move(values))) {}

MelTensor MelTensor::Zeros(std::size_t frames, std::size_t bins) {
  return MelTensor(Matrix(frames, bins));
}

}  // namespace nfvc
