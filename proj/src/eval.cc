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

#include "nfvc/eval.h"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "nfvc/error.h"

namespace nfvc::eval {
namespace {

void CheckSameDim(std::size_t a, std::size_t b) {
  if (a != b) {
    throw ShapeError("embedding dimensions differ: " + std::to_string(a) +
                     " vs " + std::to_string(b));
  }
}

}  // namespace

double CosineSimilarity(std::span<const double> a, std::span<const double> b) {
  CheckSameDim(a.size(), b.size());
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) {
    throw DataError("cosine similarity of a zero vector");
  }
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double CosineDistance(std::span<const double> a, std::span<const double> b) {
  return 1.0 - CosineSimilarity(a, b);
}

double Secs(std::span<const SpeakerEmbedding> generated,
            const SpeakerEmbedding& target) {
  if (generated.empty()) throw DataError("secs: no embeddings");
  double total = 0.0;
  for (const SpeakerEmbedding& e : generated) {
    total += CosineSimilarity(e.values, target.values);
  }
  return total / static_cast<double>(generated.size());
}

double VarianceSum(std::span<const SpeakerEmbedding> embeddings) {
  if (embeddings.size() < 2) {
    throw DataError("variance sum needs at least 2 embeddings, got " +
                    std::to_string(embeddings.size()));
  }
  const std::size_t dim = embeddings.front().dim();
  const double n = static_cast<double>(embeddings.size());
  double total = 0.0;
  for (std::size_t j = 0; j < dim; ++j) {
    double mean = 0.0;
    for (const SpeakerEmbedding& e : embeddings) {
      CheckSameDim(e.dim(), dim);
      mean += e.values[j];
    }
    mean /= n;
    double var = 0.0;
    for (const SpeakerEmbedding& e : embeddings) {
      const double d = e.values[j] - mean;
      var += d * d;
    }
    total += var / n;
  }
  return total;
}

Neighbor NearestNeighbor(const SpeakerEmbedding& query,
                         std::span<const PoolEntry> pool,
                         std::optional<int> exclude) {
  std::optional<Neighbor> best;
  for (const PoolEntry& entry : pool) {
    if (exclude && entry.id == *exclude) continue;
    const double d = CosineDistance(query.values, entry.embedding.values);
    if (!best || d < best->distance ||
        (d == best->distance && entry.id < best->id)) {
      best = Neighbor{entry.id, d};
    }
  }
  if (!best) throw DataError("nearest neighbour: empty pool");
  return *best;
}

NewVoiceReport NewVoiceDistanceReport(
    std::span<const SpeakerEmbedding> new_voices,
    std::span<const PoolEntry> pool) {
  if (new_voices.empty()) throw DataError("distance report: no new voices");
  if (pool.size() < 2) {
    throw DataError("distance report: pool needs at least 2 speakers");
  }
  NewVoiceReport report;
  std::size_t further = 0;
  for (std::size_t i = 0; i < new_voices.size(); ++i) {
    const Neighbor nn = NearestNeighbor(new_voices[i], pool);
    const auto it = std::find_if(pool.begin(), pool.end(),
                                 [&](const PoolEntry& e) { return e.id == nn.id; });
    const Neighbor nn2 = NearestNeighbor(it->embedding, pool, nn.id);
    report.rows.push_back({i, nn.id, nn.distance, nn2.id, nn2.distance});
    if (nn.distance > nn2.distance) ++further;
  }
  report.fraction_further =
      static_cast<double>(further) / static_cast<double>(new_voices.size());
  return report;
}

std::size_t ComponentsForTarget(std::span<const double> ratios,
                                double variance_target) {
  double cumulative = 0.0;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    cumulative += ratios[i];
    if (cumulative >= variance_target - 1e-12) return i + 1;
  }
  return ratios.size();
}

PcaResult PcaFit(const Matrix& data, double variance_target) {
  if (!(variance_target > 0.0 && variance_target <= 1.0)) {
    throw ConfigError("pca: variance target must be in (0, 1]");
  }
  const std::size_t n = data.rows(), dim = data.cols();
  if (n < 2) {
    throw DataError("pca needs at least 2 embeddings, got " +
                    std::to_string(n));
  }
  Eigen::MatrixXd x(n, dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dim; ++j) x(i, j) = data(i, j);
  }
  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;
  const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n);
  const double trace = cov.trace();
  double scale = 0.0;
  for (std::size_t j = 0; j < dim; ++j) scale += mean(j) * mean(j);
  if (!(trace > 1e-24 * std::max(1.0, scale))) {
    throw DataError("pca: input has zero variance, no components (k=0)");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) {
    throw NumericError("pca: eigendecomposition failed");
  }
  const Eigen::VectorXd& values = solver.eigenvalues();
  const Eigen::MatrixXd& vectors = solver.eigenvectors();

  PcaResult result;
  result.mean.assign(mean.data(), mean.data() + dim);
  result.components = Matrix(dim, dim);
  std::vector<double> eig(dim);
  double total = 0.0;
  for (std::size_t r = 0; r < dim; ++r) {
    const Eigen::Index src = static_cast<Eigen::Index>(dim - 1 - r);
    eig[r] = std::max(values(src), 0.0);
    total += eig[r];
    Eigen::Index arg = 0;
    vectors.col(src).cwiseAbs().maxCoeff(&arg);
    const double sign = vectors(arg, src) < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < dim; ++j) {
      result.components(r, j) = sign * vectors(static_cast<Eigen::Index>(j), src);
    }
  }
  result.explained_ratio.resize(dim);
  for (std::size_t r = 0; r < dim; ++r) result.explained_ratio[r] = eig[r] / total;
  result.k = ComponentsForTarget(result.explained_ratio, variance_target);

  result.coords2d = Matrix(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<double> c =
        result.Project(data.row(i), std::min<std::size_t>(2, dim));
    for (std::size_t q = 0; q < c.size(); ++q) result.coords2d(i, q) = c[q];
  }
  return result;
}

std::vector<double> PcaResult::Project(std::span<const double> x,
                                       std::size_t count) const {
  CheckSameDim(x.size(), mean.size());
  if (count > components.rows()) {
    throw ShapeError("pca: asked for " + std::to_string(count) +
                     " components, have " + std::to_string(components.rows()));
  }
  std::vector<double> out(count, 0.0);
  for (std::size_t r = 0; r < count; ++r) {
    for (std::size_t j = 0; j < x.size(); ++j) {
      out[r] += components(r, j) * (x[j] - mean[j]);
    }
  }
  return out;
}

std::vector<double> PcaResult::Reconstruct(
    std::span<const double> coords) const {
  if (coords.size() > components.rows()) {
    throw ShapeError("pca: too many coordinates for reconstruction");
  }
  std::vector<double> out = mean;
  for (std::size_t r = 0; r < coords.size(); ++r) {
    for (std::size_t j = 0; j < out.size(); ++j) {
      out[j] += coords[r] * components(r, j);
    }
  }
  return out;
}

Matrix StackEmbeddings(std::span<const SpeakerEmbedding> embeddings) {
  if (embeddings.empty()) throw DataError("no embeddings to stack");
  const std::size_t dim = embeddings.front().dim();
  Matrix out(embeddings.size(), dim);
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    CheckSameDim(embeddings[i].dim(), dim);
    std::copy(embeddings[i].values.begin(), embeddings[i].values.end(),
              out.row(i).begin());
  }
  return out;
}

}  // namespace nfvc::eval
