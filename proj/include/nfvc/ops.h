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

#ifndef NFVC_OPS_H_
#define NFVC_OPS_H_

#include <cstddef>
#include <vector>

#include "nfvc/tensor.h"

// Differentiable operations. Binary elementwise ops require identical
// shapes; the only broadcasts are the explicit row/column variants.
// Every shape violation throws ShapeError naming the offending shapes.
namespace nfvc::ops {

Tensor Add(const Tensor& a, const Tensor& b);
Tensor Sub(const Tensor& a, const Tensor& b);
Tensor Mul(const Tensor& a, const Tensor& b);
Tensor Div(const Tensor& a, const Tensor& b);

// x: [n, m], row: [1, m]. Applies row to every row of x.
Tensor AddRow(const Tensor& x, const Tensor& row);
Tensor MulRow(const Tensor& x, const Tensor& row);
// x: [n, m], col: [n, 1]. Applies col to every column of x.
Tensor AddCol(const Tensor& x, const Tensor& col);

Tensor Scale(const Tensor& x, double factor);
Tensor AddScalar(const Tensor& x, double offset);
Tensor Neg(const Tensor& x);

Tensor Exp(const Tensor& x);
// Throws NumericError on non-positive input.
Tensor Log(const Tensor& x);
Tensor Tanh(const Tensor& x);
Tensor Sigmoid(const Tensor& x);
Tensor Softplus(const Tensor& x);
Tensor Square(const Tensor& x);

// Reductions to a [1, 1] scalar.
Tensor Sum(const Tensor& x);
Tensor Mean(const Tensor& x);
// [n, m] -> [n, 1], numerically stable.
Tensor LogSumExpRows(const Tensor& x);

Tensor MatMul(const Tensor& a, const Tensor& b);
Tensor Transpose(const Tensor& x);
// [1, n] -> [n, n] diagonal matrix.
Tensor Diag(const Tensor& row);
Tensor Reshape(const Tensor& x, Shape shape);

// Channel (column) slicing and concatenation of [t, c] tensors.
Tensor SliceCols(const Tensor& x, std::size_t begin, std::size_t end);
Tensor ConcatCols(const std::vector<Tensor>& parts);

// Stacks each frame with its kernel-1 neighbours (zero padded, centred):
// [t, c] -> [t, kernel * c]. Kernel must be odd.
Tensor TimeUnfold(const Tensor& x, std::size_t kernel);
// 1-D convolution over time with "same" padding.
// x: [t, c_in], weight: [kernel * c_in, c_out] -> [t, c_out].
Tensor Conv1d(const Tensor& x, const Tensor& weight, std::size_t kernel);

}  // namespace nfvc::ops

#endif  // NFVC_OPS_H_
