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


#ifndef NFVC_TESTS_TEST_UTIL_H_
#define NFVC_TESTS_TEST_UTIL_H_

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "nfvc/matrix.h"
#include "nfvc/tensor.h"

namespace nfvc::testing {

// Central differences of `f` with respect to every element of leaf `p`.
inline std::vector<double> NumericGrad(const std::function<double()>& f,
                                       Tensor p, double h = 1e-4) {
  std::vector<double> out(p.size());
  auto v = p.mutable_values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double keep = v[i];
    v[i] = keep + h;
    const double up = f();
    v[i] = keep - h;
    const double down = f();
    v[i] = keep;
    out[i] = (up - down) / (2.0 * h);
  }
  return out;
}

// ||a - b|| / max(||b||, floor).
inline double RelError(std::span<const double> a, std::span<const double> b,
                       double floor = 1e-8) {
  double diff = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    ref += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max(std::sqrt(ref), floor);
}

inline Matrix RandomMatrix(std::size_t rows, std::size_t cols,
                           std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, scale);
  Matrix m(rows, cols);
  for (double& v : m.mutable_values()) v = normal(rng);
  return m;
}

inline std::vector<double> RandomVector(std::size_t n, std::uint64_t seed,
                                        double scale = 1.0) {
  return RandomMatrix(1, n, seed, scale).vector();
}

}  // namespace nfvc::testing

#endif  // NFVC_TESTS_TEST_UTIL_H_
