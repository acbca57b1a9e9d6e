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
#include <numbers>

#include <Eigen/Dense>

#include "gtest/gtest.h"
#include "nfvc/error.h"
#include "nfvc/flow.h"
#include "nfvc/ops.h"
#include "nfvc/train.h"
#include "test_util.h"

namespace nfvc::flow {
namespace {

using nfvc::testing::NumericGrad;
using nfvc::testing::RandomMatrix;
using nfvc::testing::RelError;

double DenseLogAbsDet(const Matrix& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
  }
  return std::log(std::abs(e.determinant()));
}

// ln|det J| of m -> z by central differences over every input element.
double NumericJacobianLogDet(const FlowModel& model, const MelTensor& m,
                             const Matrix& cond, double h = 1e-5) {
  const std::size_t t = m.frames(), d = m.bins(), n = t * d;
  Matrix jac(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    Matrix up = m.matrix(), down = m.matrix();
    up.mutable_values()[k] += h;
    down.mutable_values()[k] -= h;
    const Matrix zu = model.Forward(MelTensor(up), cond).z.matrix();
    const Matrix zd = model.Forward(MelTensor(down), cond).z.matrix();
    for (std::size_t r = 0; r < n; ++r) {
      jac(r, k) = (zu.values()[r] - zd.values()[r]) / (2.0 * h);
    }
  }
  return DenseLogAbsDet(jac);
}

FlowModel RandomModel(std::size_t d, std::size_t cond_width, std::size_t k,
                      std::uint64_t seed) {
  FlowConfig config;
  config.bins = d;
  config.cond_width = cond_width;
  config.num_steps = k;
  config.hidden = 16;
  FlowModel model(config, seed);
  model.Randomize(seed + 1);
  return model;
}

Matrix NoCond() { return Matrix(); }

TEST(ActNormTest, UnitScaleZeroBiasIsIdentity) {
  ActNorm a(3);
  Tensor x = Tensor::FromMatrix(RandomMatrix(4, 3, 1));
  StepOutput out = a.Apply(x, Direction::kForward);
  EXPECT_EQ(out.y.ToMatrix(), x.ToMatrix());
  EXPECT_DOUBLE_EQ(out.logdet.item(), 0.0);
}

TEST(ActNormTest, HandAppliedExample) {
  ActNorm a = ActNorm::FromScaleBias({2.0}, {1.0});
  Tensor x = Tensor::Constant({2, 1}, {3.0, 5.0});
  StepOutput out = a.Apply(x, Direction::kForward);
  EXPECT_DOUBLE_EQ(out.y.at(0, 0), 7.0);
  EXPECT_DOUBLE_EQ(out.y.at(1, 0), 11.0);
  EXPECT_NEAR(out.logdet.item(), 2.0 * std::log(2.0), 1e-12);
  StepOutput back = a.Apply(out.y, Direction::kInverse);
  EXPECT_NEAR(back.y.at(1, 0), 5.0, 1e-12);
  EXPECT_NEAR(back.logdet.item(), -2.0 * std::log(2.0), 1e-12);
}

TEST(ActNormTest, ZeroScaleIsRejected) {
  EXPECT_THROW(ActNorm::FromScaleBias({1.0, 0.0}, {0.0, 0.0}), NumericError);
}

TEST(ActNormTest, DataInitStandardisesEachChannel) {
  Matrix batch = RandomMatrix(50, 4, 3, 2.5);
  for (std::size_t r = 0; r < 50; ++r) batch(r, 2) += 7.0;
  ActNorm a(4);
  a.DataInit(batch);
  Matrix y = a.Apply(Tensor::FromMatrix(batch), Direction::kForward).y.ToMatrix();
  for (std::size_t c = 0; c < 4; ++c) {
    double mean = 0.0, sq = 0.0;
    for (std::size_t r = 0; r < 50; ++r) mean += y(r, c) / 50.0;
    for (std::size_t r = 0; r < 50; ++r) sq += (y(r, c) - mean) * (y(r, c) - mean) / 50.0;
    EXPECT_NEAR(mean, 0.0, 1e-6);
    EXPECT_NEAR(std::sqrt(sq), 1.0, 1e-6);
  }
  EXPECT_TRUE(a.initialized());
}

TEST(InvertibleLinearTest, IdentityByDefault) {
  InvertibleLinear lin(4);
  Tensor x = Tensor::FromMatrix(RandomMatrix(3, 4, 2));
  StepOutput out = lin.Apply(x, Direction::kForward);
  EXPECT_EQ(out.y.ToMatrix(), x.ToMatrix());
  EXPECT_DOUBLE_EQ(out.logdet.item(), 0.0);
}

TEST(InvertibleLinearTest, SwapMatrixSwapsChannels) {
  Matrix swap(2, 2, {0.0, 1.0, 1.0, 0.0});
  InvertibleLinear lin = InvertibleLinear::FromMatrix(swap);
  Tensor x = Tensor::Constant({3, 2}, {1, 2, 3, 4, 5, 6});
  StepOutput out = lin.Apply(x, Direction::kForward);
  for (std::size_t r = 0; r < 3; ++r) {
    EXPECT_DOUBLE_EQ(out.y.at(r, 0), x.at(r, 1));
    EXPECT_DOUBLE_EQ(out.y.at(r, 1), x.at(r, 0));
  }
  EXPECT_NEAR(out.logdet.item(), 0.0, 1e-15);
}

TEST(InvertibleLinearTest, LogDetMatchesDenseDeterminant) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Matrix w = RandomMatrix(4, 4, 100 + seed);
    InvertibleLinear lin = InvertibleLinear::FromMatrix(w);
    EXPECT_LE(lin.Weight().MaxAbsDiff(w), 1e-12);
    const std::size_t t = 3;
    StepOutput out =
        lin.Apply(Tensor::FromMatrix(RandomMatrix(t, 4, seed)), Direction::kForward);
    EXPECT_NEAR(out.logdet.item(), t * DenseLogAbsDet(w), 1e-9);
  }
}

TEST(InvertibleLinearTest, InverseUndoesForward) {
  InvertibleLinear lin = InvertibleLinear::FromMatrix(RandomMatrix(5, 5, 7));
  Tensor x = Tensor::FromMatrix(RandomMatrix(6, 5, 8));
  Tensor y = lin.Apply(x, Direction::kForward).y;
  Tensor back = lin.Apply(y, Direction::kInverse).y;
  EXPECT_LE(back.ToMatrix().MaxAbsDiff(x.ToMatrix()), 1e-12);
}

TEST(InvertibleLinearTest, SingularMatrixIsRejected) {
  Matrix w(2, 2, {1.0, 2.0, 2.0, 4.0});
  EXPECT_THROW(InvertibleLinear::FromMatrix(w), NumericError);
}

TEST(AffineCouplingTest, ZeroInitialisedNetIsIdentity) {
  CouplingShape shape;
  shape.channels = 4;
  shape.cond_width = 3;
  AffineCoupling c(shape, 1);
  Tensor x = Tensor::FromMatrix(RandomMatrix(5, 4, 2));
  Tensor cond = Tensor::FromMatrix(RandomMatrix(5, 3, 3));
  StepOutput out = c.Apply(x, cond, Direction::kForward);
  EXPECT_EQ(out.y.ToMatrix(), x.ToMatrix());
  EXPECT_DOUBLE_EQ(out.logdet.item(), 0.0);
}

TEST(AffineCouplingTest, HandAppliedAffine) {
  Tensor xb = Tensor::Constant({1, 1}, {3.0});
  Tensor log_s = Tensor::Constant({1, 1}, {std::log(2.0)});
  Tensor shift = Tensor::Constant({1, 1}, {1.0});
  StepOutput out = AffineCoupling::ApplyAffine(xb, log_s, shift, Direction::kForward);
  EXPECT_NEAR(out.y.item(), 7.0, 1e-12);
  EXPECT_NEAR(out.logdet.item(), std::log(2.0), 1e-12);
}

TEST(AffineCouplingTest, RandomNetInvertsTightly) {
  for (bool tail : {false, true}) {
    CouplingShape shape;
    shape.channels = 6;
    shape.cond_width = 4;
    shape.hidden = 8;
    shape.conditioner_is_tail = tail;
    AffineCoupling c(shape, 5);
    for (auto& [name, t] : c.NamedParameters()) {
      c.Load(name, RandomMatrix(t.rows(), t.cols(), 17 + t.size(), 0.5));
    }
    Tensor x = Tensor::FromMatrix(RandomMatrix(7, 6, 9));
    Tensor cond = Tensor::FromMatrix(RandomMatrix(7, 4, 10));
    StepOutput fwd = c.Apply(x, cond, Direction::kForward);
    EXPECT_GT(fwd.y.ToMatrix().MaxAbsDiff(x.ToMatrix()), 1e-3);
    StepOutput inv = c.Apply(fwd.y, cond, Direction::kInverse);
    EXPECT_LE(inv.y.ToMatrix().MaxAbsDiff(x.ToMatrix()), 1e-10);
    EXPECT_NEAR(inv.logdet.item(), -fwd.logdet.item(), 1e-10);
  }
}

TEST(AffineCouplingTest, ConditioningLengthMismatchIsRejected) {
  CouplingShape shape;
  shape.channels = 4;
  shape.cond_width = 3;
  AffineCoupling c(shape, 1);
  Tensor x = Tensor::Zeros({5, 4});
  EXPECT_THROW(c.Apply(x, Tensor::Zeros({4, 3}), Direction::kForward), ShapeError);
  EXPECT_THROW(c.Apply(x, Tensor(), Direction::kForward), ShapeError);
}

TEST(AffineCouplingTest, SingleChannelWithoutConditioningWorks) {
  CouplingShape shape;
  shape.channels = 1;
  AffineCoupling c(shape, 1);
  c.Load("b_out", Matrix(1, 2, {0.5, -1.0}));
  Tensor x = Tensor::Constant({1, 1}, {2.0});
  StepOutput out = c.Apply(x, Tensor(), Direction::kForward);
  const double log_s = 5.0 * std::tanh(0.5 / 5.0);
  EXPECT_NEAR(out.y.item(), std::exp(log_s) * 2.0 - 1.0, 1e-12);
  EXPECT_NEAR(out.logdet.item(), log_s, 1e-12);
}

TEST(FlowModelTest, IdentityAtInitialisation) {
  FlowConfig config;
  config.bins = 4;
  config.cond_width = 2;
  config.num_steps = 3;
  FlowModel model(config, 3);
  MelTensor m(RandomMatrix(5, 4, 4));
  Matrix cond = RandomMatrix(5, 2, 5);
  FlowModel::ForwardResult r = model.Forward(m, cond);
  EXPECT_EQ(r.z.matrix(), m.matrix());
  EXPECT_DOUBLE_EQ(r.logdet, 0.0);
  MelTensor zero = MelTensor::Zeros(5, 4);
  EXPECT_EQ(model.Inverse(zero, cond).matrix(), zero.matrix());
}

TEST(FlowModelTest, RoundTripWithinTolerance) {
  FlowModel model = RandomModel(8, 5, 4, 21);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    MelTensor m(RandomMatrix(12, 8, 30 + seed));
    Matrix cond = RandomMatrix(12, 5, 40 + seed, 3.0);
    MelTensor back = model.Inverse(model.Forward(m, cond).z, cond);
    EXPECT_LE(back.MaxAbsDiff(m), 1e-8);
  }
}

TEST(FlowModelTest, InverseIsDeterministic) {
  FlowModel model = RandomModel(4, 2, 2, 5);
  MelTensor z(RandomMatrix(6, 4, 6));
  Matrix cond = RandomMatrix(6, 2, 7);
  EXPECT_EQ(model.Inverse(z, cond).matrix(), model.Inverse(z, cond).matrix());
}

TEST(FlowModelTest, LogDetMatchesNumericalJacobian) {
  for (std::size_t d : {2, 4}) {
    FlowModel model = RandomModel(d, 3, 3, 50 + d);
    MelTensor m(RandomMatrix(2, d, 60 + d));
    Matrix cond = RandomMatrix(2, 3, 70 + d);
    const double analytic = model.Forward(m, cond).logdet;
    const double numeric = NumericJacobianLogDet(model, m, cond);
    EXPECT_LE(std::abs(analytic - numeric) / std::abs(numeric), 1e-3)
        << "analytic " << analytic << " numeric " << numeric;
  }
}

TEST(FlowModelTest, NllOfIdentityAtZero) {
  FlowConfig config;
  config.bins = 2;
  config.num_steps = 2;
  FlowModel model(config, 1);
  MelTensor m = MelTensor::Zeros(1, 2);
  Tensor total = model.TotalNllGraph(Tensor::FromMatrix(m.matrix()), Tensor());
  EXPECT_NEAR(total.item(), std::log(2.0 * std::numbers::pi), 1e-12);
  EXPECT_NEAR(model.Nll(m, NoCond()), 0.5 * std::log(2.0 * std::numbers::pi),
              1e-12);
}

TEST(FlowModelTest, NllGradientsMatchFiniteDifferences) {
  FlowModel model = RandomModel(4, 3, 2, 81);
  const Tensor m = Tensor::FromMatrix(RandomMatrix(3, 4, 82));
  const Tensor cond = Tensor::FromMatrix(RandomMatrix(3, 3, 83));
  for (auto& [name, p] : model.NamedParameters()) {
    for (Tensor q : model.Parameters()) q.ZeroGrad();
    model.TotalNllGraph(m, cond).Backward();
    const std::vector<double> analytic = p.grad();
    const std::vector<double> numeric = NumericGrad(
        [&] {
          NoGradGuard guard;
          return model.TotalNllGraph(m, cond).item();
        },
        p);
    EXPECT_LE(RelError(analytic, numeric, 1e-6), 1e-3) << name;
  }
}

TEST(FlowModelTest, InvertibleForUnseenConditioning) {
  FlowModel model = RandomModel(6, 4, 3, 91);
  MelTensor m(RandomMatrix(9, 6, 92));
  Matrix wild = RandomMatrix(9, 4, 93, 25.0);
  EXPECT_LE(model.Inverse(model.Forward(m, wild).z, wild).MaxAbsDiff(m), 1e-8);
}

TEST(FlowModelTest, WrongBinsAreRejected) {
  FlowModel model = RandomModel(4, 0, 1, 1);
  EXPECT_THROW(model.Forward(MelTensor(RandomMatrix(3, 5, 1)), NoCond()),
               ShapeError);
}

TEST(FlowModelTest, CheckpointRoundTrip) {
  FlowModel model = RandomModel(4, 3, 2, 101);
  Checkpoint ckpt;
  model.SaveTo(ckpt);
  const std::string bytes = ckpt.Serialize();
  FlowModel loaded = FlowModel::LoadFrom(Checkpoint::Parse(bytes));
  MelTensor m(RandomMatrix(5, 4, 102));
  Matrix cond = RandomMatrix(5, 3, 103);
  EXPECT_LE(loaded.Forward(m, cond).z.MaxAbsDiff(model.Forward(m, cond).z), 1e-4);
  Checkpoint again;
  loaded.SaveTo(again);
  EXPECT_EQ(again.Serialize(), bytes);
}

std::vector<TrainExample> ToyExamples(std::size_t count, std::uint64_t seed) {
  std::vector<TrainExample> out;
  for (std::size_t i = 0; i < count; ++i) {
    Matrix cond = RandomMatrix(6, 2, seed + 100 + i);
    Matrix mel = RandomMatrix(6, 4, seed + i, 0.3);
    for (std::size_t r = 0; r < 6; ++r) {
      for (std::size_t c = 0; c < 4; ++c) mel(r, c) += 2.0 * cond(r, c % 2) + 1.0;
    }
    out.push_back({MelTensor(mel), cond});
  }
  return out;
}

FlowModel SmallModel() {
  FlowConfig config;
  config.bins = 4;
  config.cond_width = 2;
  config.num_steps = 2;
  config.hidden = 8;
  return FlowModel(config, 4);
}

TEST(TrainTest, ZeroLearningRateLeavesParametersUnchanged) {
  std::vector<TrainExample> data = ToyExamples(6, 1);
  FlowModel model = SmallModel();
  model.DataInit({std::vector<MelTensor>{data[0].mel}}, {std::vector<Matrix>{data[0].cond}});
  std::vector<Matrix> before;
  for (const Tensor& p : model.Parameters()) before.push_back(p.ToMatrix());
  TrainConfig config;
  config.epochs = 1;
  config.adam.learning_rate = 0.0;
  OptimizerState state;
  Train(model, data, config, state);
  std::vector<Tensor> after = model.Parameters();
  for (std::size_t i = 0; i < after.size(); ++i) {
    EXPECT_EQ(after[i].ToMatrix(), before[i]);
  }
}

TEST(TrainTest, NllDecreasesAndRunsAreReproducible) {
  std::vector<TrainExample> data = ToyExamples(12, 2);
  auto run = [&] {
    FlowModel model = SmallModel();
    TrainConfig config;
    config.epochs = 15;
    config.batch_size = 4;
    config.adam.learning_rate = 1e-2;
    OptimizerState state;
    return Train(model, data, config, state);
  };
  TrainReport a = run();
  TrainReport b = run();
  EXPECT_EQ(a.epoch_nll, b.epoch_nll);
  EXPECT_LT(a.epoch_nll.back(), a.epoch_nll[1]);
  EXPECT_EQ(a.optimizer_steps, 15 * 3);
}

TEST(TrainTest, NonFiniteLossAbortsAndRestores) {
  std::vector<TrainExample> data = ToyExamples(4, 3);
  FlowModel model = SmallModel();
  OptimizerState state;
  TrainConfig config;
  config.epochs = 1;
  Train(model, data, config, state);
  std::vector<Matrix> before;
  for (const Tensor& p : model.Parameters()) before.push_back(p.ToMatrix());

  Matrix huge = data[0].mel.matrix();
  huge(0, 0) = 1e200;
  data[3] = {MelTensor(huge), data[0].cond};
  config.batch_size = 1;
  TrainReport r = Train(model, data, config, state);
  EXPECT_TRUE(r.aborted);
  EXPECT_FALSE(r.abort_reason.empty());
  std::vector<Tensor> after = model.Parameters();
  for (std::size_t i = 0; i < after.size(); ++i) {
    EXPECT_EQ(after[i].ToMatrix(), before[i]);
  }
}

}  // namespace
}  // namespace nfvc::flow
