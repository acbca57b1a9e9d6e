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

#include "nfvc/speakergen.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include "nfvc/error.h"
#include "nfvc/ops.h"

namespace nfvc::speakergen {
namespace {

Tensor RandomParameter(std::size_t rows, std::size_t cols, double stddev,
                       std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, stddev);
  std::vector<double> v(rows * cols);
  for (double& x : v) x = normal(rng);
  return Tensor::Parameter({rows, cols}, std::move(v));
}

Tensor ZeroParameter(std::size_t rows, std::size_t cols) {
  return Tensor::Parameter({rows, cols}, std::vector<double>(rows * cols, 0.0));
}

double InverseSoftplus(double y) { return y > 30.0 ? y : std::log(std::expm1(y)); }

}  // namespace

double GmmSpec::SimplexError() const {
  double worst = 0.0;
  for (std::size_t j = 0; j < weights.rows(); ++j) {
    double sum = 0.0;
    for (double w : weights.row(j)) sum += w;
    worst = std::max(worst, std::abs(sum - 1.0));
  }
  return worst;
}

void GmmSpec::Validate(double floor) const {
  if (means.rows() != weights.rows() || means.cols() != weights.cols() ||
      stddevs.rows() != weights.rows() || stddevs.cols() != weights.cols()) {
    throw ShapeError("gmm spec: weights, means and stddevs differ in shape");
  }
  for (double w : weights.values()) {
    if (!(w >= 0.0)) throw DataError("gmm spec: negative mixture weight");
  }
  if (SimplexError() > 1e-6) {
    throw DataError("gmm spec: mixture weights do not sum to one");
  }
  for (double s : stddevs.values()) {
    if (!(s >= floor)) throw DataError("gmm spec: stddev below floor");
  }
  if (!means.AllFinite()) throw NumericError("gmm spec: non-finite means");
}

SpeakerGenerator::SpeakerGenerator(const GeneratorConfig& config,
                                   std::uint64_t seed)
    : config_(config) {
  if (config.embedding_dim == 0 || config.num_locales == 0 ||
      config.locale_dim == 0 || config.hidden == 0 || config.components == 0) {
    throw ConfigError("speaker generator: all sizes must be positive");
  }
  if (!(config.stddev_floor > 0.0)) {
    throw ConfigError("speaker generator: stddev floor must be positive");
  }
  std::mt19937_64 rng(seed);
  const std::size_t h = config.hidden;
  const std::size_t out = config.embedding_dim * 3 * config.components;
  locale_table_ = RandomParameter(config.num_locales, config.locale_dim, 1.0,
                                  rng);
  w1_ = RandomParameter(config.locale_dim, h,
                        1.0 / std::sqrt(static_cast<double>(config.locale_dim)),
                        rng);
  b1_ = ZeroParameter(1, h);
  w2_ = RandomParameter(h, h, 1.0 / std::sqrt(static_cast<double>(h)), rng);
  b2_ = ZeroParameter(1, h);
  w3_ = RandomParameter(h, out, 0.01 / std::sqrt(static_cast<double>(h)), rng);
  b3_ = ZeroParameter(1, out);
}

void SpeakerGenerator::CheckLocale(int locale) const {
  if (locale < 0 || static_cast<std::size_t>(locale) >= config_.num_locales) {
    throw DataError("unknown locale id " + std::to_string(locale));
  }
}

SpeakerGenerator::GraphSpec SpeakerGenerator::ForwardGraph(int locale) const {
  CheckLocale(locale);
  std::vector<double> onehot(config_.num_locales, 0.0);
  onehot[static_cast<std::size_t>(locale)] = 1.0;
  Tensor x = ops::MatMul(
      Tensor::Constant({1, config_.num_locales}, std::move(onehot)),
      locale_table_);
  Tensor h1 = ops::Tanh(ops::Add(ops::MatMul(x, w1_), b1_));
  Tensor h2 = ops::Tanh(ops::Add(ops::MatMul(h1, w2_), b2_));
  Tensor out = ops::Add(ops::MatMul(h2, w3_), b3_);
  const std::size_t c = config_.components;
  Tensor params = ops::Reshape(out, {config_.embedding_dim, 3 * c});
  Tensor logits = ops::SliceCols(params, 0, c);
  Tensor log_weights =
      ops::AddCol(logits, ops::Neg(ops::LogSumExpRows(logits)));
  Tensor means = ops::SliceCols(params, c, 2 * c);
  Tensor stddevs = ops::AddScalar(
      ops::Softplus(ops::SliceCols(params, 2 * c, 3 * c)),
      config_.stddev_floor);
  return {log_weights, means, stddevs};
}

GmmSpec SpeakerGenerator::Forward(int locale) const {
  NoGradGuard guard;
  GraphSpec g = ForwardGraph(locale);
  GmmSpec spec;
  spec.weights = ops::Exp(g.log_weights).ToMatrix();
  spec.means = g.means.ToMatrix();
  spec.stddevs = g.stddevs.ToMatrix();
  return spec;
}

Tensor SpeakerGenerator::MeanLogLikelihoodGraph(
    std::span<const LabelledEmbedding> pool) const {
  if (pool.empty()) throw DataError("speaker pool is empty");
  std::map<int, std::vector<const LabelledEmbedding*>> by_locale;
  for (const LabelledEmbedding& e : pool) {
    if (e.embedding.dim() != config_.embedding_dim) {
      throw ShapeError("pool embedding has dimension " +
                       std::to_string(e.embedding.dim()) + ", generator uses " +
                       std::to_string(config_.embedding_dim));
    }
    CheckLocale(e.locale);
    by_locale[e.locale].push_back(&e);
  }
  const std::size_t dim = config_.embedding_dim;
  const std::size_t c = config_.components;
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  Tensor total;
  for (const auto& [locale, members] : by_locale) {
    GraphSpec g = ForwardGraph(locale);
    Tensor log_norm =
        ops::AddScalar(ops::Add(g.log_weights, ops::Neg(ops::Log(g.stddevs))),
                       -half_log_2pi);
    for (const LabelledEmbedding* e : members) {
      std::vector<double> tiled(dim * c);
      for (std::size_t j = 0; j < dim; ++j) {
        std::fill_n(tiled.begin() + j * c, c, e->embedding.values[j]);
      }
      Tensor x = Tensor::Constant({dim, c}, std::move(tiled));
      Tensor z = ops::Div(ops::Sub(x, g.means), g.stddevs);
      Tensor joint = ops::Add(log_norm, ops::Scale(ops::Square(z), -0.5));
      Tensor ll = ops::Sum(ops::LogSumExpRows(joint));
      total = total.defined() ? ops::Add(total, ll) : ll;
    }
  }
  return ops::Scale(total,
                    1.0 / static_cast<double>(pool.size() * dim));
}

double SpeakerGenerator::MeanLogLikelihood(
    std::span<const LabelledEmbedding> pool) const {
  NoGradGuard guard;
  return MeanLogLikelihoodGraph(pool).item();
}

void SpeakerGenerator::InitFromPool(std::span<const LabelledEmbedding> pool) {
  if (pool.empty()) throw DataError("speaker pool is empty");
  const std::size_t dim = config_.embedding_dim;
  const std::size_t c = config_.components;
  std::vector<double> mean(dim, 0.0), var(dim, 0.0);
  const double n = static_cast<double>(pool.size());
  for (const LabelledEmbedding& e : pool) {
    if (e.embedding.dim() != dim) {
      throw ShapeError("pool embedding dimension mismatch");
    }
    for (std::size_t j = 0; j < dim; ++j) mean[j] += e.embedding.values[j] / n;
  }
  for (const LabelledEmbedding& e : pool) {
    for (std::size_t j = 0; j < dim; ++j) {
      const double d = e.embedding.values[j] - mean[j];
      var[j] += d * d / n;
    }
  }
  auto b = b3_.mutable_values();
  for (std::size_t j = 0; j < dim; ++j) {
    const double sd = std::sqrt(var[j]);
    const double width = std::max(sd, 10.0 * config_.stddev_floor);
    for (std::size_t k = 0; k < c; ++k) {
      const double q =
          c > 1 ? -1.5 + 3.0 * static_cast<double>(k) / (c - 1) : 0.0;
      b[j * 3 * c + k] = 0.0;
      b[j * 3 * c + c + k] = mean[j] + sd * q;
      b[j * 3 * c + 2 * c + k] = InverseSoftplus(width);
    }
  }
}

std::vector<std::pair<std::string, Tensor>> SpeakerGenerator::NamedParameters()
    const {
  return {{"locale_table", locale_table_}, {"w1", w1_}, {"b1", b1_},
          {"w2", w2_}, {"b2", b2_}, {"w3", w3_}, {"b3", b3_}};
}

std::vector<Tensor> SpeakerGenerator::Parameters() const {
  std::vector<Tensor> out;
  for (auto& [name, t] : NamedParameters()) out.push_back(t);
  return out;
}

void SpeakerGenerator::SaveTo(Checkpoint& ckpt,
                              const std::string& prefix) const {
  ckpt.metadata()[prefix] = {{"embedding_dim", config_.embedding_dim},
                             {"num_locales", config_.num_locales},
                             {"locale_dim", config_.locale_dim},
                             {"hidden", config_.hidden},
                             {"components", config_.components},
                             {"stddev_floor", config_.stddev_floor}};
  for (const auto& [name, t] : NamedParameters()) {
    ckpt.Put(prefix + "." + name, t);
  }
}

SpeakerGenerator SpeakerGenerator::LoadFrom(const Checkpoint& ckpt,
                                            const std::string& prefix) {
  if (!ckpt.metadata().contains(prefix)) {
    throw DataError("checkpoint has no trained speaker generator");
  }
  const auto& meta = ckpt.metadata()[prefix];
  GeneratorConfig config;
  try {
    config.embedding_dim = meta.at("embedding_dim").get<std::size_t>();
    config.num_locales = meta.at("num_locales").get<std::size_t>();
    config.locale_dim = meta.at("locale_dim").get<std::size_t>();
    config.hidden = meta.at("hidden").get<std::size_t>();
    config.components = meta.at("components").get<std::size_t>();
    config.stddev_floor = meta.at("stddev_floor").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("speaker generator metadata incomplete: ") +
                    e.what());
  }
  SpeakerGenerator gen(config, 0);
  for (auto& [name, t] : gen.NamedParameters()) {
    std::vector<double> stored = ckpt.Values(prefix + "." + name);
    if (stored.size() != t.size() ||
        ckpt.ShapeOf(prefix + "." + name) != t.shape()) {
      throw DataError("speaker generator parameter " + name +
                      " has the wrong shape");
    }
    std::copy(stored.begin(), stored.end(), t.mutable_values().begin());
  }
  return gen;
}

TrainReport Train(SpeakerGenerator& gen,
                  std::span<const LabelledEmbedding> pool,
                  const TrainConfig& config) {
  if (pool.empty()) throw DataError("speaker pool is empty");
  std::map<int, int> per_locale;
  for (const LabelledEmbedding& e : pool) ++per_locale[e.locale];
  for (const auto& [locale, count] : per_locale) {
    if (count < 2) {
      throw DataError("locale " + std::to_string(locale) + " has " +
                      std::to_string(count) +
                      " speaker(s); need at least 2 per locale");
    }
  }
  if (config.init_from_pool) gen.InitFromPool(pool);

  std::vector<Tensor> params = gen.Parameters();
  OptimizerState state = OptimizerState::ForParameters(params, config.adam);
  TrainReport report;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const double progress =
        static_cast<double>(epoch) / static_cast<double>(config.epochs);
    const double f = config.final_lr_fraction;
    state.config.learning_rate =
        config.adam.learning_rate *
        (f + (1.0 - f) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress)));
    ZeroGrads(params);
    Tensor ll = gen.MeanLogLikelihoodGraph(pool);
    report.mean_log_likelihood.push_back(ll.item());
    ops::Neg(ll).Backward();
    if (OptimizerStep(state, params)) ++report.steps;
    for (std::size_t l = 0; l < gen.config().num_locales; ++l) {
      report.max_simplex_error =
          std::max(report.max_simplex_error,
                   gen.Forward(static_cast<int>(l)).SimplexError());
    }
  }
  ZeroGrads(params);
  report.mean_log_likelihood.push_back(gen.MeanLogLikelihood(pool));
  return report;
}

SpeakerEmbedding SampleSpeaker(const GmmSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  SpeakerEmbedding out;
  out.values.resize(spec.dim());
  const std::size_t c = spec.components();
  for (std::size_t j = 0; j < spec.dim(); ++j) {
    const double u = unit(rng);
    std::size_t k = 0;
    double cumulative = spec.weights(j, 0);
    while (k + 1 < c && u >= cumulative) {
      ++k;
      cumulative += spec.weights(j, k);
    }
    // Guard against trailing zero-weight components absorbing rounding.
    while (k > 0 && spec.weights(j, k) == 0.0) --k;
    out.values[j] = spec.means(j, k) + spec.stddevs(j, k) * normal(rng);
  }
  return out;
}

}  // namespace nfvc::speakergen
