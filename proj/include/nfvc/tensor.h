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

#ifndef NFVC_TENSOR_H_
#define NFVC_TENSOR_H_

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "nfvc/matrix.h"

namespace nfvc {

using Shape = std::vector<std::size_t>;

std::string ShapeString(const Shape& shape);

namespace internal {

// One vertex of the recorded computation graph. Parents are held by
// shared ownership, so a graph lives exactly as long as the tensors that
// reference its outputs.
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into the parents' grads.
  std::function<void(Node&)> backward;

  void AccumulateGrad(std::span<const double> g);
};

}  // namespace internal

// Reverse-mode differentiable tensor handle.
//
// Every operation in ops.h returns a fresh tensor that owns its values;
// when gradients are enabled and some input requires them, the result also
// records its parents and a backward rule. Calling Backward() on a scalar
// output walks that graph once in reverse topological order and accumulates
// d(output)/d(leaf) into every leaf that requires gradients.
class Tensor {
 public:
  Tensor() = default;

  static Tensor Constant(Shape shape, std::vector<double> values);
  static Tensor Zeros(Shape shape);
  static Tensor Scalar(double value);
  static Tensor FromMatrix(const Matrix& m);
  // A leaf that accumulates gradients.
  static Tensor Parameter(Shape shape, std::vector<double> values);
  static Tensor Parameter(const Matrix& m);

  // Builds an op result. Parents and the backward rule are dropped when no
  // parent requires gradients or gradient recording is disabled.
  static Tensor MakeResult(Shape shape, std::vector<double> value,
                           std::vector<Tensor> parents,
                           std::function<void(internal::Node&)> backward);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t size() const;
  // Rank-2 accessors; throw ShapeError on other ranks.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> values() const;
  // Writes never reach the inputs an op recorded: every op copies.
  std::span<double> mutable_values();
  double item() const;
  double at(std::size_t r, std::size_t c) const;
  Matrix ToMatrix() const;

  bool requires_grad() const;
  bool is_leaf() const;
  // Accumulated gradient; all zeros when nothing has been accumulated.
  std::vector<double> grad() const;
  void ZeroGrad();

  // Requires a single-element output.
  void Backward() const;

  // Same values, no history, no gradient.
  Tensor Detach() const;

  const internal::Node* id() const { return node_.get(); }
  internal::Node* node() const { return node_.get(); }

 private:
  explicit Tensor(std::shared_ptr<internal::Node> node)
      : node_(std::move(node)) {}

  std::shared_ptr<internal::Node> node_;
};

bool GradEnabled();

// Disables graph recording for the lifetime of the guard.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

}  // namespace nfvc

#endif  // NFVC_TENSOR_H_
