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

#ifndef NFVC_FLOW_H_
#define NFVC_FLOW_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nfvc/checkpoint.h"
#include "nfvc/matrix.h"
#include "nfvc/tensor.h"

namespace nfvc::flow {

enum class Direction { kForward, kInverse };

// Output of one invertible layer. `logdet` is a [1, 1] tensor holding
// log|det dy/dx| of the map actually applied (negated for kInverse).
struct StepOutput {
  Tensor y;
  Tensor logdet;
};

// Per-channel affine map y = s * x + b.
class ActNorm {
 public:
  explicit ActNorm(std::size_t channels);
  // Throws NumericError when any scale is zero.
  static ActNorm FromScaleBias(std::vector<double> scale,
                               std::vector<double> bias);

  StepOutput Apply(const Tensor& x, Direction dir) const;

  // Data-dependent initialisation: afterwards each channel of `batch`
  // maps to zero mean and unit variance.
  void DataInit(const Matrix& batch);
  bool initialized() const { return initialized_; }
  void set_initialized(bool v) { initialized_ = v; }

  const Tensor& scale() const { return scale_; }
  const Tensor& bias() const { return bias_; }
  std::size_t channels() const { return scale_.cols(); }

 private:
  Tensor scale_;
  Tensor bias_;
  bool initialized_ = false;
};

// Channel mixing y_t = W x_t with W = P L (U + diag(sign * exp(log|d|))),
// L unit lower triangular, U strictly upper triangular, P a fixed
// permutation. log|det W| = sum log|d| costs O(d).
class InvertibleLinear {
 public:
  // Identity map.
  explicit InvertibleLinear(std::size_t channels);
  // LU-factorises `w` with partial pivoting; throws NumericError when w is
  // singular.
  static InvertibleLinear FromMatrix(const Matrix& w);

  StepOutput Apply(const Tensor& x, Direction dir) const;

  Matrix Weight() const;
  std::size_t channels() const { return perm_.size(); }

  const std::vector<std::size_t>& permutation() const { return perm_; }
  const std::vector<double>& diag_sign() const { return sign_; }
  const Tensor& lower() const { return lower_; }
  const Tensor& upper() const { return upper_; }
  const Tensor& log_abs_diag() const { return log_abs_diag_; }

  // Restores a previously saved factorisation.
  static InvertibleLinear FromFactors(std::vector<std::size_t> perm,
                                      std::vector<double> sign,
                                      const Matrix& lower, const Matrix& upper,
                                      std::vector<double> log_abs_diag);

 private:
  InvertibleLinear() = default;
  Tensor BuildWeight() const;
  void BuildConstants();

  std::vector<std::size_t> perm_;  // (P v)_i = v[perm_[i]]
  std::vector<double> sign_;
  Tensor lower_;
  Tensor upper_;
  Tensor log_abs_diag_;
  Tensor lower_mask_;
  Tensor upper_mask_;
  Tensor identity_;
  Tensor permutation_;
  Tensor sign_row_;
};

struct CouplingShape {
  std::size_t channels = 0;
  std::size_t cond_width = 0;
  std::size_t hidden = 64;
  std::size_t kernel = 3;
  double log_scale_clamp = 5.0;
  // false: channels [0, floor(d/2)) condition the rest; true: the last
  // floor(d/2) channels do.
  bool conditioner_is_tail = false;
};

// Conditional affine coupling. The conditioner half x_a passes through;
// the transformed half becomes y_b = exp(log_s) * x_b + shift where
// (log_s, shift) = net(x_a, cond). The net is conv(k) -> +cond projection
// -> tanh -> conv(k), with the last conv zero-initialised so the layer
// starts as the identity. log_s is soft-clamped to (-clamp, clamp).
class AffineCoupling {
 public:
  AffineCoupling(const CouplingShape& shape, std::uint64_t seed);

  StepOutput Apply(const Tensor& x, const Tensor& cond, Direction dir) const;

  struct NetOutput {
    Tensor log_scale;
    Tensor shift;
  };
  // With neither input present the net reduces to its biases over
  // `frames` rows.
  NetOutput Net(const Tensor& conditioner, const Tensor& cond,
                std::size_t frames) const;

  // y_b = exp(log_s) * x_b + shift, logdet = sum(log_s); or its inverse.
  static StepOutput ApplyAffine(const Tensor& xb, const Tensor& log_scale,
                                const Tensor& shift, Direction dir);

  const CouplingShape& shape() const { return shape_; }
  std::size_t conditioner_width() const { return shape_.channels / 2; }
  std::size_t transformed_width() const {
    return shape_.channels - conditioner_width();
  }

  // Named parameters in a stable order. Absent pieces (no conditioner
  // channels, no conditioning) are skipped.
  std::vector<std::pair<std::string, Tensor>> NamedParameters() const;
  void Load(const std::string& name, const Matrix& value);

 private:
  std::pair<std::size_t, std::size_t> ConditionerRange() const;
  std::pair<std::size_t, std::size_t> TransformedRange() const;

  CouplingShape shape_;
  Tensor w_in_;    // [kernel * a, hidden]
  Tensor w_cond_;  // [cond_width, hidden]
  Tensor b_in_;    // [1, hidden]
  Tensor w_out_;   // [kernel * hidden, 2 * b]
  Tensor b_out_;   // [1, 2 * b]
};

struct FlowConfig {
  std::size_t bins = 8;
  std::size_t cond_width = 0;
  std::size_t num_steps = 8;
  std::size_t hidden = 64;
  std::size_t kernel = 3;
  double log_scale_clamp = 5.0;
};

struct FlowStep {
  ActNorm actnorm;
  InvertibleLinear linear;
  AffineCoupling coupling;
};

// f = f_K o ... o f_1 with each step actnorm -> invertible linear ->
// coupling. Coupling roles alternate between consecutive steps so every
// channel gets transformed. Prior: standard normal.
class FlowModel {
 public:
  explicit FlowModel(const FlowConfig& config, std::uint64_t seed = 0);

  const FlowConfig& config() const { return config_; }
  std::size_t num_steps() const { return steps_.size(); }
  const FlowStep& step(std::size_t k) const { return steps_[k]; }
  FlowStep& mutable_step(std::size_t k) { return steps_[k]; }

  struct GraphOutput {
    Tensor z;
    Tensor logdet;
  };
  GraphOutput ForwardGraph(const Tensor& m, const Tensor& cond) const;
  Tensor InverseGraph(const Tensor& z, const Tensor& cond) const;
  // Total negative log-likelihood -[log p_z(f(m)) + logdet] in nats.
  Tensor TotalNllGraph(const Tensor& m, const Tensor& cond) const;

  struct ForwardResult {
    MelTensor z;
    double logdet = 0.0;
  };
  ForwardResult Forward(const MelTensor& m, const Matrix& cond) const;
  MelTensor Inverse(const MelTensor& z, const Matrix& cond) const;
  // Negative log-likelihood per frame-element (total / (t * d)).
  double Nll(const MelTensor& m, const Matrix& cond) const;

  // Sequential data-dependent actnorm initialisation over a batch.
  void DataInit(std::span<const MelTensor> mels, std::span<const Matrix> conds);
  bool initialized() const;

  std::vector<std::pair<std::string, Tensor>> NamedParameters() const;
  std::vector<Tensor> Parameters() const;

  // Moves every parameter away from the identity (random LU, actnorm,
  // coupling weights). For tests of invertibility and log-determinants.
  void Randomize(std::uint64_t seed, double scale = 0.3);

  // Stores config in metadata[prefix] and tensors under "<prefix>.".
  void SaveTo(Checkpoint& ckpt, const std::string& prefix = "flow") const;
  static FlowModel LoadFrom(const Checkpoint& ckpt,
                            const std::string& prefix = "flow");

 private:
  void CheckInputs(const Tensor& x, const Tensor& cond) const;

  FlowConfig config_;
  std::vector<FlowStep> steps_;
};

// Standard-normal log density summed over all elements.
double StandardNormalLogDensity(std::span<const double> z);

}  // namespace nfvc::flow

#endif  // NFVC_FLOW_H_
