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

#include "nfvc/tensor.h"

#include <algorithm>
#include <functional>
#include <numeric>
#include <sstream>
#include <unordered_set>
#include <utility>

#include "nfvc/error.h"

namespace nfvc {
namespace {

thread_local bool g_grad_enabled = true;

std::size_t ShapeSize(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::shared_ptr<internal::Node> NewNode(Shape shape,
                                        std::vector<double> values) {
  for (std::size_t extent : shape) {
    if (extent == 0) {
      throw ShapeError("tensor extents must be positive, got " +
                       ShapeString(shape));
    }
  }
  if (ShapeSize(shape) != values.size()) {
    std::ostringstream os;
    os << "tensor of shape " << ShapeString(shape) << " given "
       << values.size() << " values";
    throw ShapeError(os.str());
  }
  auto node = std::make_shared<internal::Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  return node;
}

}  // namespace

std::string ShapeString(const Shape& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) os << ", ";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

namespace internal {

void Node::AccumulateGrad(std::span<const double> g) {
  if (grad.empty()) grad.assign(value.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) grad[i] += g[i];
}

}  // namespace internal

Tensor Tensor::Constant(Shape shape, std::vector<double> values) {
  return Tensor(NewNode(std::move(shape), std::move(values)));
}

Tensor Tensor::Zeros(Shape shape) {
  const std::size_t n = ShapeSize(shape);
  return Constant(std::move(shape), std::vector<double>(n, 0.0));
}

Tensor Tensor::Scalar(double value) { return Constant({1, 1}, {value}); }

Tensor Tensor::FromMatrix(const Matrix& m) {
  return Constant({m.rows(), m.cols()}, m.vector());
}

Tensor Tensor::Parameter(Shape shape, std::vector<double> values) {
  auto node = NewNode(std::move(shape), std::move(values));
  node->requires_grad = true;
  return Tensor(std::move(node));
}

Tensor Tensor::Parameter(const Matrix& m) {
  return Parameter({m.rows(), m.cols()}, m.vector());
}

Tensor Tensor::MakeResult(Shape shape, std::vector<double> value,
                          std::vector<Tensor> parents,
                          std::function<void(internal::Node&)> backward) {
  auto node = NewNode(std::move(shape), std::move(value));
  if (g_grad_enabled) {
    const bool any = std::any_of(parents.begin(), parents.end(),
                                 [](const Tensor& p) {
                                   return p.defined() && p.requires_grad();
                                 });
    if (any) {
      node->requires_grad = true;
      node->backward = std::move(backward);
      node->parents.reserve(parents.size());
      for (auto& p : parents) node->parents.push_back(p.node_);
    }
  }
  return Tensor(std::move(node));
}

const Shape& Tensor::shape() const { return node_->shape; }

std::size_t Tensor::size() const { return node_->value.size(); }

std::size_t Tensor::rows() const {
  if (rank() != 2) {
    throw ShapeError("expected a rank-2 tensor, got " + ShapeString(shape()));
  }
  return node_->shape[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) {
    throw ShapeError("expected a rank-2 tensor, got " + ShapeString(shape()));
  }
  return node_->shape[1];
}

std::span<const double> Tensor::values() const { return node_->value; }

std::span<double> Tensor::mutable_values() { return node_->value; }

double Tensor::item() const {
  if (size() != 1) {
    throw ShapeError("item() needs a single element, got " +
                     ShapeString(shape()));
  }
  return node_->value[0];
}

double Tensor::at(std::size_t r, std::size_t c) const {
  return node_->value[r * cols() + c];
}

Matrix Tensor::ToMatrix() const { return Matrix(rows(), cols(), node_->value); }

bool Tensor::requires_grad() const { return node_->requires_grad; }

bool Tensor::is_leaf() const { return node_->backward == nullptr; }

std::vector<double> Tensor::grad() const {
  if (node_->grad.empty()) return std::vector<double>(size(), 0.0);
  return node_->grad;
}

void Tensor::ZeroGrad() { node_->grad.clear(); }

void Tensor::Backward() const {
  if (size() != 1) {
    throw ShapeError("backward needs a scalar output, got " +
                     ShapeString(shape()));
  }
  if (!requires_grad()) return;

  // Iterative post-order DFS; each node enters `order` once.
  std::vector<internal::Node*> order;
  std::unordered_set<internal::Node*> visited;
  std::vector<std::pair<internal::Node*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      internal::Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) {
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (internal::Node* node : order) {
    if (node->backward) node->grad.assign(node->value.size(), 0.0);
  }
  const double one = 1.0;
  node_->AccumulateGrad(std::span<const double>(&one, 1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    internal::Node* node = *it;
    if (node->backward) node->backward(*node);
  }
}

Tensor Tensor::Detach() const {
  return Constant(node_->shape, node_->value);
}

bool GradEnabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) {
  g_grad_enabled = false;
}

NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

}  // namespace nfvc
