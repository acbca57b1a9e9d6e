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

#ifndef NFVC_TRAIN_H_
#define NFVC_TRAIN_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nfvc/flow.h"
#include "nfvc/matrix.h"
#include "nfvc/optimizer.h"

namespace nfvc::flow {

struct TrainExample {
  MelTensor mel;
  Matrix cond;  // [frames, cond_width]
};

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 8;
  AdamConfig adam;
  std::uint64_t seed = 0;
  // Run data-dependent actnorm init when the model is not yet initialised.
  bool data_init = true;
  // Upper bound on utterances fed to the data-dependent init.
  std::size_t data_init_examples = 64;
};

struct TrainReport {
  // [0] is the mean per-element NLL before any update; [e] is the mean
  // over the batches of epoch e.
  std::vector<double> epoch_nll;
  std::int64_t optimizer_steps = 0;
  std::int64_t skipped_steps = 0;
  bool aborted = false;
  std::string abort_reason;
};

// Mean per-element NLL over a dataset (total nats / total elements).
double DatasetNll(const FlowModel& model, std::span<const TrainExample> data);

// Maximum-likelihood training with Adam over shuffled mini-batches.
// `state` carries optimizer moments and the step counter across calls; a
// fresh one is created when it is empty. On a non-finite loss the
// parameters are rolled back to the start of the failing epoch and the
// report is marked aborted.
TrainReport Train(FlowModel& model, std::span<const TrainExample> data,
                  const TrainConfig& config, OptimizerState& state,
                  const std::function<void(std::size_t, double)>& on_epoch =
                      nullptr);

}  // namespace nfvc::flow

#endif  // NFVC_TRAIN_H_
