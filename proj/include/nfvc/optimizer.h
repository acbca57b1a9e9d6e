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

#ifndef NFVC_OPTIMIZER_H_
#define NFVC_OPTIMIZER_H_

#include <cstdint>
#include <span>
#include <vector>

#include "nfvc/tensor.h"

namespace nfvc {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adaptive-moment state. Moments are indexed like the parameter list the
// state was created for and keep the shapes of those parameters.
struct OptimizerState {
  AdamConfig config;
  std::int64_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;

  static OptimizerState ForParameters(std::span<const Tensor> params,
                                      AdamConfig config);
};

// Applies one Adam update from the gradients accumulated in `params`.
// Returns false (and logs a warning) when any gradient is non-finite; in
// that case nothing changes, including the step counter.
bool OptimizerStep(OptimizerState& state, std::span<Tensor> params);

void ZeroGrads(std::span<Tensor> params);

}  // namespace nfvc

#endif  // NFVC_OPTIMIZER_H_
