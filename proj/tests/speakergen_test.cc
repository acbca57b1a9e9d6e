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

#include <cmath>
#include <random>

#include "gtest/gtest.h"
#include "nfvc/error.h"
#include "nfvc/speakergen.h"

namespace nfvc::speakergen {
namespace {

GeneratorConfig SmallConfig(std::size_t dim = 4) {
  GeneratorConfig c;
  c.embedding_dim = dim;
  c.hidden = 32;
  c.components = 10;
  return c;
}

// Two locales whose embeddings sit near -1 and +1 in every dimension.
std::vector<LabelledEmbedding> SeparatedPool(std::size_t dim,
                                             std::size_t per_locale) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> noise(0.0, 0.1);
  std::vector<LabelledEmbedding> pool;
  for (int locale = 0; locale < 2; ++locale) {
    for (std::size_t i = 0; i < per_locale; ++i) {
      SpeakerEmbedding e;
      for (std::size_t j = 0; j < dim; ++j) {
        e.values.push_back((locale == 0 ? -1.0 : 1.0) + noise(rng));
      }
      pool.push_back({e, locale});
    }
  }
  return pool;
}

GmmSpec SingleDimSpec(std::vector<double> w, std::vector<double> mu,
                      std::vector<double> sd) {
  const std::size_t c = w.size();
  return GmmSpec{Matrix(1, c, std::move(w)), Matrix(1, c, std::move(mu)),
                 Matrix(1, c, std::move(sd))};
}

TEST(SpeakerGeneratorTest, ForwardIsAValidFiniteMixture) {
  SpeakerGenerator gen(SmallConfig(), 1);
  for (int locale : {0, 1}) {
    GmmSpec spec = gen.Forward(locale);
    EXPECT_EQ(spec.dim(), 4u);
    EXPECT_EQ(spec.components(), 10u);
    EXPECT_LE(spec.SimplexError(), 1e-6);
    EXPECT_TRUE(spec.means.AllFinite());
    EXPECT_NO_THROW(spec.Validate(1e-3));
  }
  EXPECT_THROW(gen.Forward(2), DataError);
  EXPECT_THROW(gen.Forward(-1), DataError);
}

TEST(SpeakerGeneratorTest, PoolPreconditions) {
  SpeakerGenerator gen(SmallConfig(), 1);
  TrainConfig config;
  config.epochs = 1;
  EXPECT_THROW(Train(gen, {}, config), DataError);
  std::vector<LabelledEmbedding> lonely = SeparatedPool(4, 2);
  lonely.pop_back();
  EXPECT_THROW(Train(gen, lonely, config), DataError);
  std::vector<LabelledEmbedding> bad_locale = SeparatedPool(4, 2);
  bad_locale[0].locale = 5;
  bad_locale[1].locale = 5;
  EXPECT_THROW(Train(gen, bad_locale, config), DataError);
}

TEST(SpeakerGeneratorTest, TrainingRaisesLikelihoodAndKeepsSimplex) {
  SpeakerGenerator gen(SmallConfig(), 2);
  TrainConfig config;
  config.epochs = 200;
  config.adam.learning_rate = 1e-2;
  const auto pool = SeparatedPool(4, 6);
  TrainReport r = Train(gen, pool, config);
  ASSERT_EQ(r.mean_log_likelihood.size(), 201u);
  EXPECT_GT(r.mean_log_likelihood.back(), r.mean_log_likelihood.front());
  EXPECT_LE(r.max_simplex_error, 1e-6);
  EXPECT_EQ(r.steps, 200);
}

TEST(SpeakerGeneratorTest, ZeroLearningRateLeavesParametersUnchanged) {
  SpeakerGenerator gen(SmallConfig(), 3);
  TrainConfig config;
  config.epochs = 3;
  config.adam.learning_rate = 0.0;
  config.init_from_pool = false;
  std::vector<Matrix> before;
  for (const Tensor& p : gen.Parameters()) before.push_back(p.ToMatrix());
  Train(gen, SeparatedPool(4, 3), config);
  std::vector<Tensor> after = gen.Parameters();
  for (std::size_t i = 0; i < after.size(); ++i) {
    EXPECT_EQ(after[i].ToMatrix(), before[i]);
  }
}

TEST(SpeakerGeneratorTest, IdenticalPoolCollapsesToTheFloor) {
  GeneratorConfig gc = SmallConfig(3);
  SpeakerGenerator gen(gc, 4);
  const SpeakerEmbedding star{{0.4, -0.3, 0.2}};
  std::vector<LabelledEmbedding> pool(4, LabelledEmbedding{star, 0});
  TrainConfig config;
  config.epochs = 1500;
  Train(gen, pool, config);
  const GmmSpec spec = gen.Forward(0);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const SpeakerEmbedding e = SampleSpeaker(spec, seed);
    for (std::size_t j = 0; j < 3; ++j) {
      EXPECT_LE(std::abs(e.values[j] - star.values[j]), 3.0 * gc.stddev_floor)
          << "seed " << seed << " dim " << j;
    }
  }
}

TEST(SpeakerGeneratorTest, LocaleSeparatedPoolsGiveLocaleMeans) {
  SpeakerGenerator gen(SmallConfig(), 6);
  TrainConfig config;
  config.epochs = 400;
  config.adam.learning_rate = 1e-2;
  Train(gen, SeparatedPool(4, 6), config);
  const GmmSpec s0 = gen.Forward(0), s1 = gen.Forward(1);
  EXPECT_GT(s0.means.MaxAbsDiff(s1.means), 0.5);
  for (int locale : {0, 1}) {
    const GmmSpec spec = gen.Forward(locale);
    const double target = locale == 0 ? -1.0 : 1.0;
    std::vector<double> mean(4, 0.0);
    const int n = 2000;
    for (int i = 0; i < n; ++i) {
      const SpeakerEmbedding e = SampleSpeaker(spec, 1000 * locale + i);
      for (std::size_t j = 0; j < 4; ++j) mean[j] += e.values[j] / n;
    }
    for (double m : mean) EXPECT_NEAR(m, target, 0.2);
  }
}

TEST(SpeakerGeneratorTest, CheckpointRoundTrip) {
  SpeakerGenerator gen(SmallConfig(), 7);
  Checkpoint ckpt;
  gen.SaveTo(ckpt);
  SpeakerGenerator back = SpeakerGenerator::LoadFrom(Checkpoint::Parse(ckpt.Serialize()));
  EXPECT_LE(back.Forward(1).means.MaxAbsDiff(gen.Forward(1).means), 1e-4);
  Checkpoint empty;
  EXPECT_THROW(SpeakerGenerator::LoadFrom(empty), DataError);
}

TEST(SampleSpeakerTest, StandardNormalMoments) {
  GmmSpec spec = SingleDimSpec({1.0}, {0.0}, {1.0});
  const int n = 10000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = SampleSpeaker(spec, i).values[0];
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  EXPECT_NEAR(mean, 0.0, 0.05);
  EXPECT_NEAR(sq / n - mean * mean, 1.0, 0.1);
}

TEST(SampleSpeakerTest, OnlyWeightedComponentIsUsed) {
  GmmSpec spec = SingleDimSpec({1, 0, 0, 0}, {0, 100, 200, 300}, {1, 1, 1, 1});
  for (int i = 0; i < 2000; ++i) {
    EXPECT_LT(std::abs(SampleSpeaker(spec, i).values[0]), 10.0);
  }
}

TEST(SampleSpeakerTest, MixtureMomentsWithinThreeStandardErrors) {
  const std::vector<double> w{0.2, 0.5, 0.3}, mu{-2.0, 0.5, 3.0}, sd{0.5, 1.0, 0.3};
  GmmSpec spec = SingleDimSpec(w, mu, sd);
  double m1 = 0.0, m2 = 0.0;
  for (std::size_t k = 0; k < 3; ++k) {
    m1 += w[k] * mu[k];
    m2 += w[k] * (sd[k] * sd[k] + mu[k] * mu[k]);
  }
  const double var = m2 - m1 * m1;
  double m4 = 0.0;  // fourth central moment
  for (std::size_t k = 0; k < 3; ++k) {
    const double d = mu[k] - m1, s2 = sd[k] * sd[k];
    m4 += w[k] * (d * d * d * d + 6.0 * d * d * s2 + 3.0 * s2 * s2);
  }
  const int n = 10000;
  std::vector<double> xs;
  for (int i = 0; i < n; ++i) xs.push_back(SampleSpeaker(spec, 77 + i).values[0]);
  double mean = 0.0;
  for (double x : xs) mean += x / n;
  double svar = 0.0;
  for (double x : xs) svar += (x - mean) * (x - mean) / n;
  EXPECT_LE(std::abs(mean - m1), 3.0 * std::sqrt(var / n));
  EXPECT_LE(std::abs(svar - var), 3.0 * std::sqrt((m4 - var * var) / n));
}

TEST(SampleSpeakerTest, DimensionsAreIndependent) {
  GmmSpec spec{Matrix(2, 2, {0.5, 0.5, 0.3, 0.7}),
               Matrix(2, 2, {-1.0, 1.0, 0.0, 2.0}),
               Matrix(2, 2, {0.5, 0.5, 1.0, 0.2})};
  const int n = 10000;
  std::vector<double> a, b;
  for (int i = 0; i < n; ++i) {
    SpeakerEmbedding e = SampleSpeaker(spec, i);
    a.push_back(e.values[0]);
    b.push_back(e.values[1]);
  }
  auto mean = [&](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x / n;
    return s;
  };
  const double ma = mean(a), mb = mean(b);
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (int i = 0; i < n; ++i) {
    cov += (a[i] - ma) * (b[i] - mb) / n;
    va += (a[i] - ma) * (a[i] - ma) / n;
    vb += (b[i] - mb) * (b[i] - mb) / n;
  }
  EXPECT_LE(std::abs(cov / std::sqrt(va * vb)), 3.0 / std::sqrt(n));
}

TEST(SampleSpeakerTest, SeededReproducibility) {
  SpeakerGenerator gen(SmallConfig(), 8);
  GmmSpec spec = gen.Forward(0);
  EXPECT_EQ(SampleSpeaker(spec, 42), SampleSpeaker(spec, 42));
  EXPECT_NE(SampleSpeaker(spec, 42), SampleSpeaker(spec, 43));
}

TEST(GmmSpecTest, ValidateRejectsBrokenSpecs) {
  EXPECT_THROW(SingleDimSpec({0.6, 0.6}, {0, 0}, {1, 1}).Validate(1e-3), DataError);
  EXPECT_THROW(SingleDimSpec({1.2, -0.2}, {0, 0}, {1, 1}).Validate(1e-3), DataError);
  EXPECT_THROW(SingleDimSpec({0.5, 0.5}, {0, 0}, {1, 1e-4}).Validate(1e-3), DataError);
}

}  // namespace
}  // namespace nfvc::speakergen
