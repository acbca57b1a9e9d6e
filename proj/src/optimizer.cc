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

#include "nfvc/optimizer.h"

#include <cmath>

#include "glog/logging.h"
#include "nfvc/error.h"

namespace nfvc {

OptimizerState OptimizerState::ForParameters(std::span<const Tensor> params,
                                             AdamConfig config) {
  OptimizerState state;
  state.config = config;
  for (const Tensor& p : params) {
    state.first_moment.emplace_back(p.size(), 0.0);
    state.second_moment.emplace_back(p.size(), 0.0);
  }
  return state;
}

bool OptimizerStep(OptimizerState& state, std::span<Tensor> params) {
  if (params.size() != state.first_moment.size()) {
    throw ShapeError("optimizer state tracks " +
                     std::to_string(state.first_moment.size()) +
                     " parameters, given " + std::to_string(params.size()));
  }
  std::vector<std::vector<double>> grads;
  grads.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].size() != state.first_moment[i].size()) {
      throw ShapeError("optimizer moment size mismatch for parameter " +
                       std::to_string(i));
    }
    grads.push_back(params[i].grad());
    for (double g : grads.back()) {
      if (!std::isfinite(g)) {
        LOG(WARNING) << "non-finite gradient in parameter " << i
                     << "; skipping optimizer step " << state.step + 1;
        return false;
      }
    }
  }

  const AdamConfig& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto values = params[i].mutable_values();
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double g = grads[i][j];
      m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g;
      v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g * g;
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      values[j] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
  return true;
}

void ZeroGrads(std::span<Tensor> params) {
  for (Tensor& p : params) p.ZeroGrad();
}

}  // namespace nfvc
