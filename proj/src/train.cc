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

#include "nfvc/train.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "glog/logging.h"
#include "nfvc/error.h"
#include "nfvc/ops.h"

namespace nfvc::flow {
namespace {

Tensor CondOf(const TrainExample& ex) {
  return ex.cond.cols() == 0 ? Tensor() : Tensor::FromMatrix(ex.cond);
}

std::vector<std::vector<double>> Snapshot(const std::vector<Tensor>& params) {
  std::vector<std::vector<double>> out;
  for (const Tensor& p : params) {
    out.emplace_back(p.values().begin(), p.values().end());
  }
  return out;
}

void Restore(std::vector<Tensor>& params,
             const std::vector<std::vector<double>>& snap) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    std::copy(snap[i].begin(), snap[i].end(),
              params[i].mutable_values().begin());
  }
}

}  // namespace

double DatasetNll(const FlowModel& model, std::span<const TrainExample> data) {
  NoGradGuard guard;
  double total = 0.0;
  std::size_t elements = 0;
  for (const TrainExample& ex : data) {
    total += model.TotalNllGraph(Tensor::FromMatrix(ex.mel.matrix()), CondOf(ex))
                 .item();
    elements += ex.mel.frames() * ex.mel.bins();
  }
  return total / static_cast<double>(elements);
}

TrainReport Train(FlowModel& model, std::span<const TrainExample> data,
                  const TrainConfig& config, OptimizerState& state,
                  const std::function<void(std::size_t, double)>& on_epoch) {
  if (data.empty()) throw DataError("training set is empty");
  if (config.batch_size == 0) throw ConfigError("batch_size must be positive");
  for (const TrainExample& ex : data) {
    if (ex.mel.bins() != model.config().bins ||
        ex.cond.rows() != ex.mel.frames() ||
        ex.cond.cols() != model.config().cond_width) {
      throw ShapeError("training example " +
                       ShapeString(ex.mel.frames(), ex.mel.bins()) +
                       " with conditioning " +
                       ShapeString(ex.cond.rows(), ex.cond.cols()) +
                       " does not fit the model");
    }
  }

  if (config.data_init && !model.initialized()) {
    const std::size_t n = std::min(data.size(), config.data_init_examples);
    std::vector<MelTensor> mels;
    std::vector<Matrix> conds;
    for (std::size_t i = 0; i < n; ++i) {
      mels.push_back(data[i].mel);
      conds.push_back(data[i].cond);
    }
    model.DataInit(mels, conds);
  }

  std::vector<Tensor> params = model.Parameters();
  if (state.first_moment.empty()) {
    AdamConfig adam = config.adam;
    state = OptimizerState::ForParameters(params, adam);
  } else {
    state.config = config.adam;
  }

  TrainReport report;
  report.epoch_nll.push_back(DatasetNll(model, data));
  if (on_epoch) on_epoch(0, report.epoch_nll.back());

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto last_good = Snapshot(params);
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_total = 0.0;
    std::size_t epoch_elements = 0;
    for (std::size_t start = 0; start < order.size();
         start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::size_t batch_elements = 0;
      for (std::size_t i = start; i < end; ++i) {
        const MelTensor& m = data[order[i]].mel;
        batch_elements += m.frames() * m.bins();
      }
      ZeroGrads(params);
      double batch_total = 0.0;
      bool numeric_failure = false;
      try {
        for (std::size_t i = start; i < end; ++i) {
          const TrainExample& ex = data[order[i]];
          Tensor total = model.TotalNllGraph(
              Tensor::FromMatrix(ex.mel.matrix()), CondOf(ex));
          batch_total += total.item();
          ops::Scale(total, 1.0 / static_cast<double>(batch_elements))
              .Backward();
        }
      } catch (const NumericError& e) {
        LOG(ERROR) << e.what();
        numeric_failure = true;
      }
      if (numeric_failure || !std::isfinite(batch_total)) {
        Restore(params, last_good);
        report.aborted = true;
        report.abort_reason = "non-finite loss in epoch " +
                              std::to_string(epoch) +
                              "; parameters restored to the epoch start";
        LOG(ERROR) << report.abort_reason;
        return report;
      }
      if (OptimizerStep(state, params)) {
        ++report.optimizer_steps;
      } else {
        ++report.skipped_steps;
      }
      epoch_total += batch_total;
      epoch_elements += batch_elements;
    }
    report.epoch_nll.push_back(epoch_total /
                               static_cast<double>(epoch_elements));
    if (on_epoch) on_epoch(epoch, report.epoch_nll.back());
  }
  ZeroGrads(params);
  return report;
}

}  // namespace nfvc::flow
