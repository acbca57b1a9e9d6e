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

#ifndef NFVC_SPEAKERGEN_H_
#define NFVC_SPEAKERGEN_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nfvc/checkpoint.h"
#include "nfvc/conditioning.h"
#include "nfvc/matrix.h"
#include "nfvc/optimizer.h"
#include "nfvc/tensor.h"

namespace nfvc::speakergen {

// Independent per-dimension Gaussian mixtures; each matrix is
// [embedding_dim, components].
struct GmmSpec {
  Matrix weights;
  Matrix means;
  Matrix stddevs;

  std::size_t dim() const { return weights.rows(); }
  std::size_t components() const { return weights.cols(); }
  // Largest |sum_k w_k - 1| over dimensions.
  double SimplexError() const;
  // Throws DataError on negative weights, |sum - 1| > 1e-6, or
  // stddevs below `floor`.
  void Validate(double floor) const;
};

struct GeneratorConfig {
  std::size_t embedding_dim = 256;
  std::size_t num_locales = 2;
  std::size_t locale_dim = 8;
  std::size_t hidden = 256;
  std::size_t components = 10;
  double stddev_floor = 1e-3;
};

struct LabelledEmbedding {
  SpeakerEmbedding embedding;
  int locale = 0;
};

// Locale embedding -> two tanh layers -> per-dimension mixture parameters
// (softmax weights, means, softplus + floor stddevs).
class SpeakerGenerator {
 public:
  SpeakerGenerator(const GeneratorConfig& config, std::uint64_t seed);

  const GeneratorConfig& config() const { return config_; }

  struct GraphSpec {
    Tensor log_weights;  // [dim, components]
    Tensor means;
    Tensor stddevs;
  };
  GraphSpec ForwardGraph(int locale) const;
  // Throws DataError for unknown locales.
  GmmSpec Forward(int locale) const;

  // Mean over pool entries and dimensions of log p(x_j | locale).
  Tensor MeanLogLikelihoodGraph(std::span<const LabelledEmbedding> pool) const;
  double MeanLogLikelihood(std::span<const LabelledEmbedding> pool) const;

  // Places the output biases at the pool statistics: component means
  // spread across +-1.5 per-dimension stddevs, mixture stddevs at the
  // per-dimension pool stddev.
  void InitFromPool(std::span<const LabelledEmbedding> pool);

  std::vector<std::pair<std::string, Tensor>> NamedParameters() const;
  std::vector<Tensor> Parameters() const;

  void SaveTo(Checkpoint& ckpt, const std::string& prefix = "speakergen") const;
  static SpeakerGenerator LoadFrom(const Checkpoint& ckpt,
                                   const std::string& prefix = "speakergen");

 private:
  void CheckLocale(int locale) const;

  GeneratorConfig config_;
  Tensor locale_table_;  // [num_locales, locale_dim]
  Tensor w1_, b1_, w2_, b2_, w3_, b3_;
};

struct TrainConfig {
  std::size_t epochs = 800;
  AdamConfig adam;
  // Cosine decay from adam.learning_rate down to this fraction of it.
  double final_lr_fraction = 0.01;
  std::uint64_t seed = 0;
  bool init_from_pool = true;
};

struct TrainReport {
  // [0] before training, then one entry per full-batch step.
  std::vector<double> mean_log_likelihood;
  // Largest simplex violation seen after any step, over all locales.
  double max_simplex_error = 0.0;
  std::int64_t steps = 0;
};

// Maximum likelihood fit of the mixture parameters to the pool. Requires
// a non-empty pool with at least two speakers for every locale present.
TrainReport Train(SpeakerGenerator& gen,
                  std::span<const LabelledEmbedding> pool,
                  const TrainConfig& config);

// Per dimension: pick a component by weight, draw N(mean, stddev).
SpeakerEmbedding SampleSpeaker(const GmmSpec& spec, std::uint64_t seed);

}  // namespace nfvc::speakergen

#endif  // NFVC_SPEAKERGEN_H_
