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


#ifndef NFVC_EVAL_H_
#define NFVC_EVAL_H_

#include <optional>
#include <span>
#include <vector>

#include "nfvc/conditioning.h"
#include "nfvc/matrix.h"

namespace nfvc::eval {

// Throws DataError on zero vectors, ShapeError on mismatched dimensions.
double CosineSimilarity(std::span<const double> a, std::span<const double> b);
double CosineDistance(std::span<const double> a, std::span<const double> b);

// Mean over `generated` of cosine(e_i, target).
double Secs(std::span<const SpeakerEmbedding> generated,
            const SpeakerEmbedding& target);

// Sum over dimensions of the population variance. Needs >= 2 embeddings.
double VarianceSum(std::span<const SpeakerEmbedding> embeddings);

struct PoolEntry {
  int id = 0;
  SpeakerEmbedding embedding;
};

struct Neighbor {
  int id = 0;
  double distance = 0.0;
};

// Smallest cosine distance; equal distances resolve to the lowest id.
// Entries whose id equals `exclude` are skipped.
Neighbor NearestNeighbor(const SpeakerEmbedding& query,
                         std::span<const PoolEntry> pool,
                         std::optional<int> exclude = std::nullopt);

struct NewVoiceRow {
  std::size_t index = 0;
  int nn_id = 0;
  double distance_to_nn = 0.0;
  int nn2nn_id = 0;
  double nn_to_nn2nn = 0.0;
};

struct NewVoiceReport {
  std::vector<NewVoiceRow> rows;
  // Share of rows with distance_to_nn > nn_to_nn2nn.
  double fraction_further = 0.0;
};

// The pool needs at least two entries so every NN has a neighbour.
NewVoiceReport NewVoiceDistanceReport(
    std::span<const SpeakerEmbedding> new_voices,
    std::span<const PoolEntry> pool);

struct PcaResult {
  std::vector<double> mean;
  Matrix components;  // [rank, dim], row i is the i-th principal axis
  std::vector<double> explained_ratio;
  std::size_t k = 0;
  Matrix coords2d;  // [n, 2]

  // Coordinates of `x` on the first `count` components.
  std::vector<double> Project(std::span<const double> x,
                              std::size_t count) const;
  std::vector<double> Reconstruct(std::span<const double> coords) const;
};

// `data` is [n, dim] with one embedding per row. Throws DataError for
// fewer than 2 rows or zero total variance and ConfigError for a target
// outside (0, 1].
PcaResult PcaFit(const Matrix& data, double variance_target = 0.9);

// Minimal k with cumulative ratio >= target.
std::size_t ComponentsForTarget(std::span<const double> ratios,
                                double variance_target);

Matrix StackEmbeddings(std::span<const SpeakerEmbedding> embeddings);

}  // namespace nfvc::eval

#endif  // NFVC_EVAL_H_
