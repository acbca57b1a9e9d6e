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

#include "nfvc/flow.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <utility>

#include "nfvc/error.h"
#include "nfvc/ops.h"

namespace nfvc::flow {
namespace {

constexpr double kSingularTolerance = 1e-12;

std::vector<double> NormalVector(std::size_t n, double stddev,
                                 std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  std::vector<double> out(n);
  for (double& v : out) v = dist(rng);
  return out;
}

Tensor RowTensor(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor::Constant({1, n}, std::move(values));
}

void Overwrite(Tensor& dst, std::span<const double> src,
               const std::string& what) {
  if (dst.size() != src.size()) {
    throw DataError("parameter " + what + " expects " +
                    std::to_string(dst.size()) + " values, got " +
                    std::to_string(src.size()));
  }
  std::copy(src.begin(), src.end(), dst.mutable_values().begin());
}

Tensor CondTensor(const Matrix& cond) {
  if (cond.cols() == 0) return Tensor();
  return Tensor::FromMatrix(cond);
}

}  // namespace

// ---------------------------------------------------------------------------
// ActNorm

ActNorm::ActNorm(std::size_t channels)
    : scale_(Tensor::Parameter({1, channels},
                               std::vector<double>(channels, 1.0))),
      bias_(Tensor::Parameter({1, channels},
                              std::vector<double>(channels, 0.0))) {}

ActNorm ActNorm::FromScaleBias(std::vector<double> scale,
                               std::vector<double> bias) {
  if (scale.size() != bias.size() || scale.empty()) {
    throw ShapeError("actnorm: scale and bias must be equal non-empty sizes");
  }
  for (double s : scale) {
    if (s == 0.0 || !std::isfinite(s)) {
      throw NumericError("actnorm: scale must be finite and nonzero");
    }
  }
  ActNorm a(scale.size());
  Overwrite(a.scale_, scale, "actnorm.scale");
  Overwrite(a.bias_, bias, "actnorm.bias");
  a.initialized_ = true;
  return a;
}

StepOutput ActNorm::Apply(const Tensor& x, Direction dir) const {
  if (x.cols() != channels()) {
    throw ShapeError("actnorm: input " + ShapeString(x.shape()) +
                     " does not have " + std::to_string(channels()) +
                     " channels");
  }
  const double frames = static_cast<double>(x.rows());
  // log|s| = 0.5 log(s^2)
  Tensor logdet = ops::Scale(
      ops::Sum(ops::Scale(ops::Log(ops::Square(scale_)), 0.5)), frames);
  if (dir == Direction::kForward) {
    return {ops::AddRow(ops::MulRow(x, scale_), bias_), logdet};
  }
  Tensor inv_scale = ops::Div(Tensor::Constant(scale_.shape(),
                                               std::vector<double>(
                                                   scale_.size(), 1.0)),
                              scale_);
  return {ops::MulRow(ops::AddRow(x, ops::Neg(bias_)), inv_scale),
          ops::Neg(logdet)};
}

void ActNorm::DataInit(const Matrix& batch) {
  const std::size_t d = channels();
  if (batch.cols() != d || batch.rows() == 0) {
    throw ShapeError("actnorm init: batch " +
                     ShapeString(batch.rows(), batch.cols()) +
                     " does not match " + std::to_string(d) + " channels");
  }
  const double n = static_cast<double>(batch.rows());
  std::vector<double> mean(d, 0.0), var(d, 0.0);
  for (std::size_t r = 0; r < batch.rows(); ++r) {
    for (std::size_t c = 0; c < d; ++c) mean[c] += batch(r, c) / n;
  }
  for (std::size_t r = 0; r < batch.rows(); ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      const double dv = batch(r, c) - mean[c];
      var[c] += dv * dv / n;
    }
  }
  auto s = scale_.mutable_values();
  auto b = bias_.mutable_values();
  for (std::size_t c = 0; c < d; ++c) {
    const double sd = std::sqrt(var[c]);
    s[c] = sd > 1e-12 ? 1.0 / sd : 1.0;
    b[c] = -mean[c] * s[c];
  }
  initialized_ = true;
}

// ---------------------------------------------------------------------------
// InvertibleLinear

InvertibleLinear::InvertibleLinear(std::size_t channels) {
  perm_.resize(channels);
  for (std::size_t i = 0; i < channels; ++i) perm_[i] = i;
  sign_.assign(channels, 1.0);
  lower_ = Tensor::Parameter({channels, channels},
                             std::vector<double>(channels * channels, 0.0));
  upper_ = Tensor::Parameter({channels, channels},
                             std::vector<double>(channels * channels, 0.0));
  log_abs_diag_ = Tensor::Parameter({1, channels},
                                    std::vector<double>(channels, 0.0));
  BuildConstants();
}

InvertibleLinear InvertibleLinear::FromFactors(std::vector<std::size_t> perm,
                                               std::vector<double> sign,
                                               const Matrix& lower,
                                               const Matrix& upper,
                                               std::vector<double> log_abs) {
  const std::size_t d = perm.size();
  if (sign.size() != d || log_abs.size() != d || lower.rows() != d ||
      lower.cols() != d || upper.rows() != d || upper.cols() != d) {
    throw ShapeError("invertible linear: inconsistent factor shapes for d=" +
                     std::to_string(d));
  }
  std::vector<std::size_t> sorted = perm;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < d; ++i) {
    if (sorted[i] != i) throw DataError("invertible linear: invalid permutation");
  }
  for (double s : sign) {
    if (s != 1.0 && s != -1.0) {
      throw DataError("invertible linear: diagonal signs must be +-1");
    }
  }
  InvertibleLinear lin;
  lin.perm_ = std::move(perm);
  lin.sign_ = std::move(sign);
  lin.lower_ = Tensor::Parameter(lower);
  lin.upper_ = Tensor::Parameter(upper);
  lin.log_abs_diag_ = Tensor::Parameter({1, d}, std::move(log_abs));
  lin.BuildConstants();
  return lin;
}

InvertibleLinear InvertibleLinear::FromMatrix(const Matrix& w) {
  const std::size_t d = w.rows();
  if (d == 0 || w.cols() != d) {
    throw ShapeError("invertible linear: matrix must be square, got " +
                     ShapeString(w.rows(), w.cols()));
  }
  // Doolittle LU with partial pivoting: A[piv] = L U.
  Matrix a = w;
  std::vector<std::size_t> piv(d);
  for (std::size_t i = 0; i < d; ++i) piv[i] = i;
  double scale = 0.0;
  for (double v : w.values()) scale = std::max(scale, std::abs(v));
  for (std::size_t k = 0; k < d; ++k) {
    std::size_t best = k;
    for (std::size_t r = k + 1; r < d; ++r) {
      if (std::abs(a(r, k)) > std::abs(a(best, k))) best = r;
    }
    if (std::abs(a(best, k)) <= kSingularTolerance * std::max(scale, 1.0)) {
      throw NumericError("invertible linear: matrix is singular");
    }
    if (best != k) {
      for (std::size_t c = 0; c < d; ++c) std::swap(a(k, c), a(best, c));
      std::swap(piv[k], piv[best]);
    }
    for (std::size_t r = k + 1; r < d; ++r) {
      a(r, k) /= a(k, k);
      for (std::size_t c = k + 1; c < d; ++c) a(r, c) -= a(r, k) * a(k, c);
    }
  }
  Matrix lower(d, d), upper(d, d);
  std::vector<double> sign(d), log_abs(d);
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      if (c < r) lower(r, c) = a(r, c);
      if (c > r) upper(r, c) = a(r, c);
    }
    sign[r] = a(r, r) < 0.0 ? -1.0 : 1.0;
    log_abs[r] = std::log(std::abs(a(r, r)));
  }
  // Row i of (L U) is row piv[i] of W, so W = P (L U) with P[piv[i]][i] = 1.
  std::vector<std::size_t> perm(d);
  for (std::size_t i = 0; i < d; ++i) perm[piv[i]] = i;
  return FromFactors(std::move(perm), std::move(sign), lower, upper,
                     std::move(log_abs));
}

void InvertibleLinear::BuildConstants() {
  const std::size_t d = perm_.size();
  std::vector<double> lmask(d * d, 0.0), umask(d * d, 0.0), eye(d * d, 0.0),
      p(d * d, 0.0);
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      if (c < r) lmask[r * d + c] = 1.0;
      if (c > r) umask[r * d + c] = 1.0;
    }
    eye[r * d + r] = 1.0;
    p[r * d + perm_[r]] = 1.0;
  }
  lower_mask_ = Tensor::Constant({d, d}, std::move(lmask));
  upper_mask_ = Tensor::Constant({d, d}, std::move(umask));
  identity_ = Tensor::Constant({d, d}, std::move(eye));
  permutation_ = Tensor::Constant({d, d}, std::move(p));
  sign_row_ = RowTensor(sign_);
}

Tensor InvertibleLinear::BuildWeight() const {
  Tensor l = ops::Add(ops::Mul(lower_, lower_mask_), identity_);
  Tensor u = ops::Add(ops::Mul(upper_, upper_mask_),
                      ops::Diag(ops::Mul(sign_row_, ops::Exp(log_abs_diag_))));
  return ops::MatMul(permutation_, ops::MatMul(l, u));
}

Matrix InvertibleLinear::Weight() const {
  NoGradGuard guard;
  return BuildWeight().ToMatrix();
}

StepOutput InvertibleLinear::Apply(const Tensor& x, Direction dir) const {
  const std::size_t d = channels();
  if (x.cols() != d) {
    throw ShapeError("invertible linear: input " + ShapeString(x.shape()) +
                     " does not have " + std::to_string(d) + " channels");
  }
  const double frames = static_cast<double>(x.rows());
  Tensor logdet = ops::Scale(ops::Sum(log_abs_diag_), frames);
  if (dir == Direction::kForward) {
    return {ops::MatMul(x, ops::Transpose(BuildWeight())), logdet};
  }

  // x_t = U^-1 L^-1 P^T y_t by substitution; not differentiated.
  const auto lower = lower_.values();
  const auto upper = upper_.values();
  std::vector<double> diag(d);
  for (std::size_t i = 0; i < d; ++i) {
    diag[i] = sign_[i] * std::exp(log_abs_diag_.values()[i]);
  }
  const std::size_t t = x.rows();
  std::vector<double> out(t * d);
  std::vector<double> w(d);
  for (std::size_t f = 0; f < t; ++f) {
    auto y = x.values().subspan(f * d, d);
    for (std::size_t i = 0; i < d; ++i) w[perm_[i]] = y[i];
    for (std::size_t i = 0; i < d; ++i) {
      double acc = w[i];
      for (std::size_t j = 0; j < i; ++j) acc -= lower[i * d + j] * w[j];
      w[i] = acc;
    }
    for (std::size_t ii = d; ii-- > 0;) {
      double acc = w[ii];
      for (std::size_t j = ii + 1; j < d; ++j) {
        acc -= upper[ii * d + j] * out[f * d + j];
      }
      out[f * d + ii] = acc / diag[ii];
    }
  }
  NoGradGuard guard;
  return {Tensor::Constant({t, d}, std::move(out)), ops::Neg(logdet)};
}

// ---------------------------------------------------------------------------
// AffineCoupling

AffineCoupling::AffineCoupling(const CouplingShape& shape, std::uint64_t seed)
    : shape_(shape) {
  if (shape.channels == 0 || shape.hidden == 0 || shape.kernel % 2 == 0) {
    throw ConfigError("coupling: channels and hidden must be positive and "
                      "the kernel odd");
  }
  if (!(shape.log_scale_clamp > 0.0)) {
    throw ConfigError("coupling: log-scale clamp must be positive");
  }
  std::mt19937_64 rng(seed);
  const std::size_t a = conditioner_width();
  const std::size_t b = transformed_width();
  const std::size_t h = shape.hidden;
  const std::size_t k = shape.kernel;
  if (a > 0) {
    w_in_ = Tensor::Parameter(
        {k * a, h},
        NormalVector(k * a * h, 1.0 / std::sqrt(static_cast<double>(k * a)),
                     rng));
  }
  if (shape.cond_width > 0) {
    w_cond_ = Tensor::Parameter(
        {shape.cond_width, h},
        NormalVector(shape.cond_width * h,
                     1.0 / std::sqrt(static_cast<double>(shape.cond_width)),
                     rng));
  }
  b_in_ = Tensor::Parameter({1, h}, std::vector<double>(h, 0.0));
  w_out_ = Tensor::Parameter({k * h, 2 * b},
                             std::vector<double>(k * h * 2 * b, 0.0));
  b_out_ = Tensor::Parameter({1, 2 * b}, std::vector<double>(2 * b, 0.0));
}

std::pair<std::size_t, std::size_t> AffineCoupling::ConditionerRange() const {
  const std::size_t d = shape_.channels, a = conditioner_width();
  return shape_.conditioner_is_tail ? std::make_pair(d - a, d)
                                    : std::make_pair(std::size_t{0}, a);
}

std::pair<std::size_t, std::size_t> AffineCoupling::TransformedRange() const {
  const std::size_t d = shape_.channels, b = transformed_width();
  return shape_.conditioner_is_tail ? std::make_pair(std::size_t{0}, b)
                                    : std::make_pair(d - b, d);
}

AffineCoupling::NetOutput AffineCoupling::Net(const Tensor& conditioner,
                                              const Tensor& cond,
                                              std::size_t frames) const {
  Tensor pre;
  if (conditioner.defined()) {
    pre = ops::Conv1d(conditioner, w_in_, shape_.kernel);
  }
  if (cond.defined()) {
    Tensor projected = ops::MatMul(cond, w_cond_);
    pre = pre.defined() ? ops::Add(pre, projected) : projected;
  }
  if (!pre.defined()) pre = Tensor::Zeros({frames, shape_.hidden});
  Tensor hidden = ops::Tanh(ops::AddRow(pre, b_in_));
  Tensor out =
      ops::AddRow(ops::Conv1d(hidden, w_out_, shape_.kernel), b_out_);
  const std::size_t b = transformed_width();
  const double clamp = shape_.log_scale_clamp;
  Tensor log_scale = ops::Scale(
      ops::Tanh(ops::Scale(ops::SliceCols(out, 0, b), 1.0 / clamp)), clamp);
  return {log_scale, ops::SliceCols(out, b, 2 * b)};
}

StepOutput AffineCoupling::ApplyAffine(const Tensor& xb,
                                       const Tensor& log_scale,
                                       const Tensor& shift, Direction dir) {
  if (dir == Direction::kForward) {
    return {ops::Add(ops::Mul(xb, ops::Exp(log_scale)), shift),
            ops::Sum(log_scale)};
  }
  return {ops::Mul(ops::Sub(xb, shift), ops::Exp(ops::Neg(log_scale))),
          ops::Neg(ops::Sum(log_scale))};
}

StepOutput AffineCoupling::Apply(const Tensor& x, const Tensor& cond,
                                 Direction dir) const {
  if (x.cols() != shape_.channels) {
    throw ShapeError("coupling: input " + ShapeString(x.shape()) +
                     " does not have " + std::to_string(shape_.channels) +
                     " channels");
  }
  if (shape_.cond_width > 0) {
    if (!cond.defined() || cond.rows() != x.rows() ||
        cond.cols() != shape_.cond_width) {
      throw ShapeError(
          "coupling: conditioning " +
          (cond.defined() ? ShapeString(cond.shape()) : std::string("[]")) +
          " does not match " + std::to_string(x.rows()) + " frames x " +
          std::to_string(shape_.cond_width) + " features");
    }
  }
  const auto [ca, cb] = ConditionerRange();
  const auto [ta, tb] = TransformedRange();
  Tensor xa;
  if (cb > ca) xa = ops::SliceCols(x, ca, cb);
  Tensor xb = ops::SliceCols(x, ta, tb);
  NetOutput net = Net(xa, shape_.cond_width > 0 ? cond : Tensor(), x.rows());
  StepOutput moved = ApplyAffine(xb, net.log_scale, net.shift, dir);
  if (!xa.defined()) return moved;
  Tensor y = shape_.conditioner_is_tail ? ops::ConcatCols({moved.y, xa})
                                        : ops::ConcatCols({xa, moved.y});
  return {y, moved.logdet};
}

std::vector<std::pair<std::string, Tensor>> AffineCoupling::NamedParameters()
    const {
  std::vector<std::pair<std::string, Tensor>> out;
  if (w_in_.defined()) out.emplace_back("w_in", w_in_);
  if (w_cond_.defined()) out.emplace_back("w_cond", w_cond_);
  out.emplace_back("b_in", b_in_);
  out.emplace_back("w_out", w_out_);
  out.emplace_back("b_out", b_out_);
  return out;
}

void AffineCoupling::Load(const std::string& name, const Matrix& value) {
  for (auto& [n, t] : NamedParameters()) {
    if (n == name) {
      if (t.rows() != value.rows() || t.cols() != value.cols()) {
        throw DataError("coupling parameter " + name + " has shape " +
                        ShapeString(t.shape()) + ", stored " +
                        ShapeString(value.rows(), value.cols()));
      }
      Overwrite(t, value.values(), name);
      return;
    }
  }
  throw DataError("coupling has no parameter " + name);
}

// ---------------------------------------------------------------------------
// FlowModel

FlowModel::FlowModel(const FlowConfig& config, std::uint64_t seed)
    : config_(config) {
  if (config.bins == 0) throw ConfigError("flow: bins must be positive");
  if (config.num_steps == 0) throw ConfigError("flow: need at least one step");
  std::mt19937_64 rng(seed);
  steps_.reserve(config.num_steps);
  for (std::size_t k = 0; k < config.num_steps; ++k) {
    CouplingShape shape;
    shape.channels = config.bins;
    shape.cond_width = config.cond_width;
    shape.hidden = config.hidden;
    shape.kernel = config.kernel;
    shape.log_scale_clamp = config.log_scale_clamp;
    shape.conditioner_is_tail = (k % 2 == 1);
    steps_.push_back(FlowStep{ActNorm(config.bins),
                              InvertibleLinear(config.bins),
                              AffineCoupling(shape, rng())});
  }
}

void FlowModel::CheckInputs(const Tensor& x, const Tensor& cond) const {
  if (x.rank() != 2 || x.cols() != config_.bins) {
    throw ShapeError("flow: input " + ShapeString(x.shape()) +
                     " does not have " + std::to_string(config_.bins) +
                     " bins");
  }
  if (config_.cond_width == 0) return;
  if (!cond.defined() || cond.rows() != x.rows() ||
      cond.cols() != config_.cond_width) {
    throw ShapeError(
        "flow: conditioning " +
        (cond.defined() ? ShapeString(cond.shape()) : std::string("[]")) +
        " is not frame-aligned with input " + ShapeString(x.shape()) +
        " (expected width " + std::to_string(config_.cond_width) + ")");
  }
}

FlowModel::GraphOutput FlowModel::ForwardGraph(const Tensor& m,
                                               const Tensor& cond) const {
  CheckInputs(m, cond);
  Tensor x = m;
  Tensor logdet = Tensor::Scalar(0.0);
  for (const FlowStep& step : steps_) {
    StepOutput a = step.actnorm.Apply(x, Direction::kForward);
    StepOutput l = step.linear.Apply(a.y, Direction::kForward);
    StepOutput c = step.coupling.Apply(l.y, cond, Direction::kForward);
    logdet = ops::Add(logdet, ops::Add(a.logdet, ops::Add(l.logdet, c.logdet)));
    x = c.y;
  }
  return {x, logdet};
}

Tensor FlowModel::InverseGraph(const Tensor& z, const Tensor& cond) const {
  CheckInputs(z, cond);
  Tensor x = z;
  for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) {
    x = it->coupling.Apply(x, cond, Direction::kInverse).y;
    x = it->linear.Apply(x, Direction::kInverse).y;
    x = it->actnorm.Apply(x, Direction::kInverse).y;
  }
  return x;
}

Tensor FlowModel::TotalNllGraph(const Tensor& m, const Tensor& cond) const {
  GraphOutput out = ForwardGraph(m, cond);
  const double n = static_cast<double>(out.z.size());
  // -log N(z; 0, I) = 0.5 sum z^2 + 0.5 n log(2 pi)
  Tensor neg_log_prior = ops::AddScalar(
      ops::Scale(ops::Sum(ops::Square(out.z)), 0.5),
      0.5 * n * std::log(2.0 * std::numbers::pi));
  return ops::Sub(neg_log_prior, out.logdet);
}

FlowModel::ForwardResult FlowModel::Forward(const MelTensor& m,
                                            const Matrix& cond) const {
  NoGradGuard guard;
  GraphOutput out =
      ForwardGraph(Tensor::FromMatrix(m.matrix()), CondTensor(cond));
  return {MelTensor(out.z.ToMatrix()), out.logdet.item()};
}

MelTensor FlowModel::Inverse(const MelTensor& z, const Matrix& cond) const {
  NoGradGuard guard;
  return MelTensor(
      InverseGraph(Tensor::FromMatrix(z.matrix()), CondTensor(cond))
          .ToMatrix());
}

double FlowModel::Nll(const MelTensor& m, const Matrix& cond) const {
  NoGradGuard guard;
  Tensor total = TotalNllGraph(Tensor::FromMatrix(m.matrix()), CondTensor(cond));
  return total.item() / static_cast<double>(m.frames() * m.bins());
}

void FlowModel::DataInit(std::span<const MelTensor> mels,
                         std::span<const Matrix> conds) {
  if (mels.size() != conds.size() || mels.empty()) {
    throw ShapeError("flow init: need matching, non-empty mel/cond lists");
  }
  NoGradGuard guard;
  std::vector<Tensor> acts;
  std::vector<Tensor> cond_tensors;
  std::size_t total_rows = 0;
  for (std::size_t i = 0; i < mels.size(); ++i) {
    acts.push_back(Tensor::FromMatrix(mels[i].matrix()));
    cond_tensors.push_back(CondTensor(conds[i]));
    CheckInputs(acts.back(), cond_tensors.back());
    total_rows += mels[i].frames();
  }
  for (FlowStep& step : steps_) {
    Matrix batch(total_rows, config_.bins);
    std::size_t row = 0;
    for (const Tensor& a : acts) {
      std::copy(a.values().begin(), a.values().end(),
                batch.mutable_values().begin() + row * config_.bins);
      row += a.rows();
    }
    step.actnorm.DataInit(batch);
    for (std::size_t i = 0; i < acts.size(); ++i) {
      Tensor x = step.actnorm.Apply(acts[i], Direction::kForward).y;
      x = step.linear.Apply(x, Direction::kForward).y;
      acts[i] =
          step.coupling.Apply(x, cond_tensors[i], Direction::kForward).y;
    }
  }
}

bool FlowModel::initialized() const {
  return std::all_of(steps_.begin(), steps_.end(), [](const FlowStep& s) {
    return s.actnorm.initialized();
  });
}

std::vector<std::pair<std::string, Tensor>> FlowModel::NamedParameters()
    const {
  std::vector<std::pair<std::string, Tensor>> out;
  for (std::size_t k = 0; k < steps_.size(); ++k) {
    const std::string p = "step" + std::to_string(k) + ".";
    const FlowStep& s = steps_[k];
    out.emplace_back(p + "actnorm.scale", s.actnorm.scale());
    out.emplace_back(p + "actnorm.bias", s.actnorm.bias());
    out.emplace_back(p + "linear.lower", s.linear.lower());
    out.emplace_back(p + "linear.upper", s.linear.upper());
    out.emplace_back(p + "linear.log_abs_diag", s.linear.log_abs_diag());
    for (auto& [name, t] : s.coupling.NamedParameters()) {
      out.emplace_back(p + "coupling." + name, t);
    }
  }
  return out;
}

std::vector<Tensor> FlowModel::Parameters() const {
  std::vector<Tensor> out;
  for (auto& [name, t] : NamedParameters()) out.push_back(t);
  return out;
}

void FlowModel::Randomize(std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t d = config_.bins;
  for (FlowStep& step : steps_) {
    std::vector<double> s(d), b(d);
    for (std::size_t c = 0; c < d; ++c) {
      s[c] = std::exp(scale * normal(rng));
      b[c] = scale * normal(rng);
    }
    step.actnorm = ActNorm::FromScaleBias(s, b);

    std::vector<std::size_t> perm(d);
    for (std::size_t i = 0; i < d; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> sign(d), log_abs(d);
    Matrix lower(d, d), upper(d, d);
    for (std::size_t r = 0; r < d; ++r) {
      sign[r] = (rng() & 1u) ? 1.0 : -1.0;
      log_abs[r] = scale * normal(rng);
      for (std::size_t c = 0; c < d; ++c) {
        if (c < r) lower(r, c) = scale * normal(rng);
        if (c > r) upper(r, c) = scale * normal(rng);
      }
    }
    step.linear = InvertibleLinear::FromFactors(perm, sign, lower, upper,
                                                log_abs);

    for (auto& [name, t] : step.coupling.NamedParameters()) {
      const double fan_in = static_cast<double>(t.rows());
      for (double& v : t.mutable_values()) {
        v = scale * normal(rng) / std::sqrt(fan_in);
      }
    }
  }
}

void FlowModel::SaveTo(Checkpoint& ckpt, const std::string& prefix) const {
  ckpt.metadata()[prefix] = {
      {"bins", config_.bins},
      {"cond_width", config_.cond_width},
      {"num_steps", config_.num_steps},
      {"hidden", config_.hidden},
      {"kernel", config_.kernel},
      {"log_scale_clamp", config_.log_scale_clamp},
      {"initialized", initialized()},
  };
  for (const auto& [name, t] : NamedParameters()) {
    ckpt.Put(prefix + "." + name, t);
  }
  for (std::size_t k = 0; k < steps_.size(); ++k) {
    const std::string p = prefix + ".step" + std::to_string(k) + ".linear.";
    const InvertibleLinear& lin = steps_[k].linear;
    std::vector<double> perm(lin.permutation().begin(),
                             lin.permutation().end());
    ckpt.Put(p + "perm", {1, perm.size()}, perm);
    ckpt.Put(p + "sign", {1, lin.diag_sign().size()}, lin.diag_sign());
  }
}

FlowModel FlowModel::LoadFrom(const Checkpoint& ckpt,
                              const std::string& prefix) {
  if (!ckpt.metadata().contains(prefix)) {
    throw DataError("checkpoint has no '" + prefix + "' model section");
  }
  const auto& meta = ckpt.metadata()[prefix];
  FlowConfig config;
  try {
    config.bins = meta.at("bins").get<std::size_t>();
    config.cond_width = meta.at("cond_width").get<std::size_t>();
    config.num_steps = meta.at("num_steps").get<std::size_t>();
    config.hidden = meta.at("hidden").get<std::size_t>();
    config.kernel = meta.at("kernel").get<std::size_t>();
    config.log_scale_clamp = meta.at("log_scale_clamp").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("flow metadata incomplete: ") + e.what());
  }
  const bool initialized = meta.value("initialized", false);
  FlowModel model(config);
  for (std::size_t k = 0; k < model.steps_.size(); ++k) {
    const std::string p = prefix + ".step" + std::to_string(k) + ".";
    FlowStep& s = model.steps_[k];
    s.actnorm = ActNorm::FromScaleBias(ckpt.Values(p + "actnorm.scale"),
                                       ckpt.Values(p + "actnorm.bias"));
    s.actnorm.set_initialized(initialized);
    std::vector<std::size_t> perm;
    for (double v : ckpt.Values(p + "linear.perm")) {
      perm.push_back(static_cast<std::size_t>(v));
    }
    s.linear = InvertibleLinear::FromFactors(
        perm, ckpt.Values(p + "linear.sign"),
        ckpt.GetMatrix(p + "linear.lower"), ckpt.GetMatrix(p + "linear.upper"),
        ckpt.Values(p + "linear.log_abs_diag"));
    for (auto& [name, t] : s.coupling.NamedParameters()) {
      s.coupling.Load(name, ckpt.GetMatrix(p + "coupling." + name));
    }
  }
  return model;
}

double StandardNormalLogDensity(std::span<const double> z) {
  double acc = 0.0;
  for (double v : z) acc += v * v;
  return -0.5 * acc -
         0.5 * static_cast<double>(z.size()) * std::log(2.0 * std::numbers::pi);
}

}  // namespace nfvc::flow
