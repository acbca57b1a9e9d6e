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
#include <functional>
#include <map>

#include "gtest/gtest.h"
#include "nfvc/error.h"
#include "nfvc/ops.h"
#include "nfvc/optimizer.h"
#include "nfvc/tensor.h"
#include "test_util.h"

namespace nfvc {
namespace {

using testing::NumericGrad;
using testing::RandomVector;
using testing::RelError;

Tensor Param(std::size_t r, std::size_t c, std::uint64_t seed,
             double scale = 1.0) {
  return Tensor::Parameter({r, c}, RandomVector(r * c, seed, scale));
}

// Reduces a tensor to a scalar with fixed random weights so every output
// element contributes a distinct gradient.
Tensor WeightedSum(const Tensor& y, std::uint64_t seed = 99) {
  Tensor w = Tensor::Constant(y.shape(), RandomVector(y.size(), seed));
  return ops::Sum(ops::Mul(y, w));
}

void ExpectGradientsMatch(const std::function<Tensor()>& build,
                          const std::vector<Tensor>& params,
                          const std::string& label) {
  for (Tensor p : params) p.ZeroGrad();
  build().Backward();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::vector<double> analytic = params[i].grad();
    const std::vector<double> numeric =
        NumericGrad([&] { return build().item(); }, params[i]);
    EXPECT_LE(RelError(analytic, numeric), 1e-3) << label << " param " << i;
  }
}

TEST(TensorTest, RejectsZeroExtentsAndMismatchedData) {
  EXPECT_THROW(Tensor::Constant({0, 3}, {}), ShapeError);
  EXPECT_THROW(Tensor::Constant({2, 2}, {1.0, 2.0}), ShapeError);
}

TEST(OpsTest, MatMulIdentityReturnsInput) {
  Tensor x = Tensor::Constant({3, 2}, {1, 2, 3, 4, 5, 6});
  Tensor eye = Tensor::FromMatrix(Matrix::Identity(3));
  Tensor y = ops::MatMul(eye, x);
  EXPECT_EQ(y.ToMatrix(), x.ToMatrix());
}

TEST(OpsTest, SumExpLogRecoversInputs) {
  Tensor x = Tensor::Constant({1, 3}, {1, 2, 3});
  EXPECT_NEAR(ops::Sum(ops::Exp(ops::Log(x))).item(), 6.0, 1e-12);
}

TEST(OpsTest, Conv1dWithUnitKernelAndIdentityMapIsIdentity) {
  Tensor x = Tensor::Constant({4, 2}, {1, 2, 3, 4, 5, 6, 7, 8});
  Tensor w = Tensor::FromMatrix(Matrix::Identity(2));
  EXPECT_EQ(ops::Conv1d(x, w, 1).ToMatrix(), x.ToMatrix());
}

TEST(OpsTest, Conv1dPadsWithZerosAtTheEdges) {
  Tensor x = Tensor::Constant({3, 1}, {1, 2, 3});
  // Kernel 3 summing the window.
  Tensor w = Tensor::Constant({3, 1}, {1, 1, 1});
  Matrix y = ops::Conv1d(x, w, 3).ToMatrix();
  EXPECT_DOUBLE_EQ(y(0, 0), 3.0);
  EXPECT_DOUBLE_EQ(y(1, 0), 6.0);
  EXPECT_DOUBLE_EQ(y(2, 0), 5.0);
}

TEST(OpsTest, ShapeErrorsNameTheShapes) {
  Tensor a = Tensor::Zeros({2, 3});
  Tensor b = Tensor::Zeros({2, 3});
  try {
    ops::MatMul(a, b);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("[2, 3]"), std::string::npos)
        << e.what();
  }
  EXPECT_THROW(ops::Add(a, Tensor::Zeros({3, 2})), ShapeError);
  EXPECT_THROW(ops::SliceCols(a, 2, 5), ShapeError);
  EXPECT_THROW(ops::ConcatCols({a, Tensor::Zeros({3, 1})}), ShapeError);
}

TEST(OpsTest, LogOfNonPositiveIsNumericError) {
  EXPECT_THROW(ops::Log(Tensor::Constant({1, 2}, {1.0, 0.0})), NumericError);
}

TEST(OpsTest, SoftplusIsStableForLargeInputs) {
  Tensor x = Tensor::Constant({1, 3}, {-800.0, 0.0, 800.0});
  Matrix y = ops::Softplus(x).ToMatrix();
  EXPECT_NEAR(y(0, 0), 0.0, 1e-300);
  EXPECT_NEAR(y(0, 1), std::log(2.0), 1e-15);
  EXPECT_DOUBLE_EQ(y(0, 2), 800.0);
}

TEST(OpsTest, LogSumExpRowsMatchesDirectSum) {
  Tensor x = Tensor::Constant({2, 3}, {0.1, -2.0, 3.0, 1000.0, 1000.0, 999.0});
  Matrix y = ops::LogSumExpRows(x).ToMatrix();
  EXPECT_NEAR(y(0, 0),
              std::log(std::exp(0.1) + std::exp(-2.0) + std::exp(3.0)), 1e-12);
  EXPECT_NEAR(y(1, 0), 1000.0 + std::log(2.0 + std::exp(-1.0)), 1e-9);
}

TEST(BackwardTest, SquareAtThreeHasGradientSix) {
  Tensor x = Tensor::Parameter({1, 1}, {3.0});
  ops::Square(x).Backward();
  EXPECT_DOUBLE_EQ(x.grad()[0], 6.0);
}

TEST(BackwardTest, SigmoidAtZeroHasGradientQuarter) {
  Tensor x = Tensor::Parameter({1, 4}, {0, 0, 0, 0});
  ops::Sum(ops::Sigmoid(x)).Backward();
  for (double g : x.grad()) EXPECT_DOUBLE_EQ(g, 0.25);
}

TEST(BackwardTest, NonScalarOutputIsRejected) {
  Tensor x = Tensor::Parameter({1, 2}, {1, 2});
  EXPECT_THROW(ops::Exp(x).Backward(), ShapeError);
}

TEST(BackwardTest, SharedSubexpressionAccumulates) {
  Tensor x = Tensor::Parameter({1, 1}, {2.0});
  Tensor y = ops::Mul(x, x);
  ops::Sum(ops::Add(y, y)).Backward();
  EXPECT_DOUBLE_EQ(x.grad()[0], 8.0);
}

TEST(BackwardTest, NoGradGuardRecordsNothing) {
  Tensor x = Tensor::Parameter({1, 1}, {2.0});
  Tensor y;
  {
    NoGradGuard guard;
    y = ops::Square(x);
  }
  EXPECT_FALSE(y.requires_grad());
  EXPECT_TRUE(GradEnabled());
}

TEST(BackwardTest, MutatingAnOutputLeavesRecordedInputAlone) {
  Tensor x = Tensor::Parameter({1, 2}, {1.0, 2.0});
  Tensor y = ops::Scale(x, 1.0);
  y.mutable_values()[0] = 100.0;
  EXPECT_DOUBLE_EQ(x.values()[0], 1.0);
}

TEST(BackwardTest, TwoLayerNetMatchesFiniteDifferences) {
  Tensor x = Tensor::Constant({5, 3}, RandomVector(15, 1));
  Tensor w1 = Param(3, 6, 2, 0.5), b1 = Param(1, 6, 3, 0.1);
  Tensor w2 = Param(6, 2, 4, 0.5), b2 = Param(1, 2, 5, 0.1);
  auto build = [&] {
    Tensor h = ops::Tanh(ops::AddRow(ops::MatMul(x, w1), b1));
    Tensor y = ops::AddRow(ops::MatMul(h, w2), b2);
    return ops::Mean(ops::Square(y));
  };
  ExpectGradientsMatch(build, {w1, b1, w2, b2}, "two-layer net");
}

TEST(BackwardTest, EveryOpMatchesFiniteDifferences) {
  const std::map<std::string, std::function<Tensor(Tensor, Tensor)>> binary = {
      {"add", ops::Add}, {"sub", ops::Sub}, {"mul", ops::Mul},
      {"div", [](Tensor a, Tensor b) {
         return ops::Div(a, ops::AddScalar(ops::Square(b), 0.5));
       }}};
  for (const auto& [name, op] : binary) {
    Tensor a = Param(3, 4, 10), b = Param(3, 4, 11);
    ExpectGradientsMatch([&] { return WeightedSum(op(a, b)); }, {a, b}, name);
  }
  const std::map<std::string, std::function<Tensor(Tensor)>> unary = {
      {"exp", ops::Exp},
      {"log", [](Tensor a) { return ops::Log(ops::AddScalar(ops::Square(a), 0.3)); }},
      {"tanh", ops::Tanh},
      {"sigmoid", ops::Sigmoid},
      {"softplus", ops::Softplus},
      {"square", ops::Square},
      {"neg", ops::Neg},
      {"scale", [](Tensor a) { return ops::Scale(a, -1.7); }},
      {"add_scalar", [](Tensor a) { return ops::Square(ops::AddScalar(a, 0.4)); }},
      {"mean", [](Tensor a) { return ops::Square(ops::Mean(a)); }},
      {"logsumexp", ops::LogSumExpRows},
      {"transpose", ops::Transpose},
      {"reshape", [](Tensor a) { return ops::Reshape(a, {4, 3}); }},
      {"slice", [](Tensor a) { return ops::SliceCols(a, 1, 3); }},
      {"concat", [](Tensor a) { return ops::ConcatCols({a, ops::Exp(a), a}); }},
      {"unfold", [](Tensor a) { return ops::TimeUnfold(a, 3); }},
  };
  for (const auto& [name, op] : unary) {
    Tensor a = Param(3, 4, 20);
    ExpectGradientsMatch([&] { return WeightedSum(op(a)); }, {a}, name);
  }
  {
    Tensor a = Param(3, 4, 30), b = Param(4, 2, 31);
    ExpectGradientsMatch([&] { return WeightedSum(ops::MatMul(a, b)); },
                         {a, b}, "matmul");
  }
  {
    Tensor x = Param(3, 4, 40), r = Param(1, 4, 41), c = Param(3, 1, 42);
    ExpectGradientsMatch(
        [&] { return WeightedSum(ops::AddCol(ops::MulRow(ops::AddRow(x, r), r), c)); },
        {x, r, c}, "broadcast");
  }
  {
    Tensor r = Param(1, 3, 50);
    ExpectGradientsMatch([&] { return WeightedSum(ops::Diag(r)); }, {r}, "diag");
  }
  {
    Tensor x = Param(6, 3, 60), w = Param(9, 2, 61);
    ExpectGradientsMatch([&] { return WeightedSum(ops::Conv1d(x, w, 3)); },
                         {x, w}, "conv1d");
  }
}

TEST(BackwardTest, ForwardAndBackwardAreDeterministic) {
  auto run = [] {
    Tensor w = Param(4, 4, 7);
    Tensor x = Tensor::Constant({3, 4}, RandomVector(12, 8));
    Tensor loss = ops::Sum(ops::Tanh(ops::MatMul(x, w)));
    loss.Backward();
    return std::make_pair(loss.item(), w.grad());
  };
  EXPECT_EQ(run(), run());
}

TEST(OptimizerTest, ConvergesOnQuadratic) {
  Tensor x = Tensor::Parameter({1, 1}, {0.0});
  std::vector<Tensor> params{x};
  AdamConfig config;
  config.learning_rate = 0.1;
  OptimizerState state = OptimizerState::ForParameters(params, config);
  for (int i = 0; i < 500; ++i) {
    ZeroGrads(params);
    ops::Square(ops::AddScalar(x, -5.0)).Backward();
    ASSERT_TRUE(OptimizerStep(state, params));
  }
  EXPECT_LT(std::abs(x.item() - 5.0), 1e-2);
  EXPECT_EQ(state.step, 500);
}

TEST(OptimizerTest, SmallStepsDecreaseConvexLossMonotonically) {
  Tensor x = Tensor::Parameter({1, 3}, {3.0, -2.0, 1.0});
  std::vector<Tensor> params{x};
  AdamConfig config;
  config.learning_rate = 1e-3;
  OptimizerState state = OptimizerState::ForParameters(params, config);
  double previous = 1e300;
  for (int i = 0; i < 200; ++i) {
    ZeroGrads(params);
    Tensor loss = ops::Sum(ops::Square(x));
    EXPECT_LT(loss.item(), previous);
    previous = loss.item();
    loss.Backward();
    OptimizerStep(state, params);
  }
}

TEST(OptimizerTest, FirstStepMatchesHandComputedAdam) {
  Tensor x = Tensor::Parameter({1, 1}, {1.0});
  std::vector<Tensor> params{x};
  OptimizerState state = OptimizerState::ForParameters(params, AdamConfig{});
  ops::Scale(x, 3.0).Backward();  // gradient 3
  OptimizerStep(state, params);
  // m = 0.3, v = 0.009; bias corrected m_hat = 3, v_hat = 9.
  EXPECT_NEAR(x.item(), 1.0 - 1e-3 * 3.0 / (3.0 + 1e-8), 1e-15);
  EXPECT_NEAR(state.first_moment[0][0], 0.3, 1e-15);
  EXPECT_NEAR(state.second_moment[0][0], 0.009, 1e-15);
}

TEST(OptimizerTest, ZeroGradientOnlyDecaysMoments) {
  Tensor x = Tensor::Parameter({1, 1}, {1.0});
  std::vector<Tensor> params{x};
  OptimizerState state = OptimizerState::ForParameters(params, AdamConfig{});
  state.first_moment[0][0] = 0.0;
  ZeroGrads(params);
  OptimizerStep(state, params);
  EXPECT_DOUBLE_EQ(x.item(), 1.0);

  state.first_moment[0][0] = 0.5;
  state.second_moment[0][0] = 0.25;
  OptimizerStep(state, params);
  EXPECT_DOUBLE_EQ(state.first_moment[0][0], 0.45);
  EXPECT_DOUBLE_EQ(state.second_moment[0][0], 0.25 * 0.999);
}

TEST(OptimizerTest, NonFiniteGradientSkipsTheStep) {
  Tensor x = Tensor::Parameter({1, 2}, {1.0, 2.0});
  std::vector<Tensor> params{x};
  OptimizerState state = OptimizerState::ForParameters(params, AdamConfig{});
  x.node()->grad = {1.0, std::nan("")};
  EXPECT_FALSE(OptimizerStep(state, params));
  EXPECT_EQ(state.step, 0);
  EXPECT_DOUBLE_EQ(x.values()[0], 1.0);
}

TEST(OptimizerTest, RunsAreBitIdentical) {
  auto run = [] {
    Tensor x = Param(2, 3, 5);
    std::vector<Tensor> params{x};
    OptimizerState state = OptimizerState::ForParameters(params, AdamConfig{});
    for (int i = 0; i < 20; ++i) {
      ZeroGrads(params);
      ops::Sum(ops::Tanh(ops::Square(x))).Backward();
      OptimizerStep(state, params);
    }
    return x.ToMatrix();
  };
  EXPECT_EQ(run(), run());
}

}  // namespace
}  // namespace nfvc
