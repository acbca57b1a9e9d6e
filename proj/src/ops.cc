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

#include "nfvc/ops.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "nfvc/error.h"

namespace nfvc::ops {
namespace {

using internal::Node;

void RequireSameShape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     ShapeString(a.shape()) + " vs " + ShapeString(b.shape()));
  }
}

void RequireRank2(const char* op, const Tensor& x) {
  if (x.rank() != 2) {
    throw ShapeError(std::string(op) + ": expected rank 2, got " +
                     ShapeString(x.shape()));
  }
}

// Elementwise unary op; `deriv(x, y)` gives dy/dx at one element.
template <typename F, typename D>
Tensor Unary(const Tensor& x, F f, D deriv) {
  std::vector<double> out(x.size());
  auto in = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(in[i]);
  return Tensor::MakeResult(x.shape(), std::move(out), {x}, [deriv](Node& n) {
    Node& p = *n.parents[0];
    if (!p.requires_grad) return;
    std::vector<double> g(n.grad.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] = n.grad[i] * deriv(p.value[i], n.value[i]);
    }
    p.AccumulateGrad(g);
  });
}

double StableSoftplus(double v) {
  return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
}

double StableSigmoid(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

}  // namespace

Tensor Add(const Tensor& a, const Tensor& b) {
  RequireSameShape("add", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = a.values()[i] + b.values()[i];
  }
  return Tensor::MakeResult(a.shape(), std::move(out), {a, b}, [](Node& n) {
    for (auto& p : n.parents) {
      if (p->requires_grad) p->AccumulateGrad(n.grad);
    }
  });
}

Tensor Sub(const Tensor& a, const Tensor& b) {
  RequireSameShape("sub", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = a.values()[i] - b.values()[i];
  }
  return Tensor::MakeResult(a.shape(), std::move(out), {a, b}, [](Node& n) {
    if (n.parents[0]->requires_grad) n.parents[0]->AccumulateGrad(n.grad);
    if (n.parents[1]->requires_grad) {
      std::vector<double> g(n.grad.size());
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = -n.grad[i];
      n.parents[1]->AccumulateGrad(g);
    }
  });
}

Tensor Mul(const Tensor& a, const Tensor& b) {
  RequireSameShape("mul", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = a.values()[i] * b.values()[i];
  }
  return Tensor::MakeResult(a.shape(), std::move(out), {a, b}, [](Node& n) {
    Node& pa = *n.parents[0];
    Node& pb = *n.parents[1];
    std::vector<double> g(n.grad.size());
    if (pa.requires_grad) {
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = n.grad[i] * pb.value[i];
      pa.AccumulateGrad(g);
    }
    if (pb.requires_grad) {
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = n.grad[i] * pa.value[i];
      pb.AccumulateGrad(g);
    }
  });
}

Tensor Div(const Tensor& a, const Tensor& b) {
  RequireSameShape("div", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = a.values()[i] / b.values()[i];
  }
  return Tensor::MakeResult(a.shape(), std::move(out), {a, b}, [](Node& n) {
    Node& pa = *n.parents[0];
    Node& pb = *n.parents[1];
    std::vector<double> g(n.grad.size());
    if (pa.requires_grad) {
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = n.grad[i] / pb.value[i];
      pa.AccumulateGrad(g);
    }
    if (pb.requires_grad) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] = -n.grad[i] * n.value[i] / pb.value[i];
      }
      pb.AccumulateGrad(g);
    }
  });
}

Tensor AddRow(const Tensor& x, const Tensor& row) {
  RequireRank2("add_row", x);
  RequireRank2("add_row", row);
  if (row.rows() != 1 || row.cols() != x.cols()) {
    throw ShapeError("add_row: cannot broadcast " + ShapeString(row.shape()) +
                     " over " + ShapeString(x.shape()));
  }
  const std::size_t rows = x.rows(), cols = x.cols();
  std::vector<double> out(x.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      out[r * cols + c] = x.values()[r * cols + c] + row.values()[c];
    }
  }
  return Tensor::MakeResult(
      x.shape(), std::move(out), {x, row}, [rows, cols](Node& n) {
        if (n.parents[0]->requires_grad) n.parents[0]->AccumulateGrad(n.grad);
        if (n.parents[1]->requires_grad) {
          std::vector<double> g(cols, 0.0);
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) g[c] += n.grad[r * cols + c];
          }
          n.parents[1]->AccumulateGrad(g);
        }
      });
}

Tensor MulRow(const Tensor& x, const Tensor& row) {
  RequireRank2("mul_row", x);
  RequireRank2("mul_row", row);
  if (row.rows() != 1 || row.cols() != x.cols()) {
    throw ShapeError("mul_row: cannot broadcast " + ShapeString(row.shape()) +
                     " over " + ShapeString(x.shape()));
  }
  const std::size_t rows = x.rows(), cols = x.cols();
  std::vector<double> out(x.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      out[r * cols + c] = x.values()[r * cols + c] * row.values()[c];
    }
  }
  return Tensor::MakeResult(
      x.shape(), std::move(out), {x, row}, [rows, cols](Node& n) {
        Node& px = *n.parents[0];
        Node& pr = *n.parents[1];
        if (px.requires_grad) {
          std::vector<double> g(n.grad.size());
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) {
              g[r * cols + c] = n.grad[r * cols + c] * pr.value[c];
            }
          }
          px.AccumulateGrad(g);
        }
        if (pr.requires_grad) {
          std::vector<double> g(cols, 0.0);
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) {
              g[c] += n.grad[r * cols + c] * px.value[r * cols + c];
            }
          }
          pr.AccumulateGrad(g);
        }
      });
}

Tensor AddCol(const Tensor& x, const Tensor& col) {
  RequireRank2("add_col", x);
  RequireRank2("add_col", col);
  if (col.cols() != 1 || col.rows() != x.rows()) {
    throw ShapeError("add_col: cannot broadcast " + ShapeString(col.shape()) +
                     " over " + ShapeString(x.shape()));
  }
  const std::size_t rows = x.rows(), cols = x.cols();
  std::vector<double> out(x.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      out[r * cols + c] = x.values()[r * cols + c] + col.values()[r];
    }
  }
  return Tensor::MakeResult(
      x.shape(), std::move(out), {x, col}, [rows, cols](Node& n) {
        if (n.parents[0]->requires_grad) n.parents[0]->AccumulateGrad(n.grad);
        if (n.parents[1]->requires_grad) {
          std::vector<double> g(rows, 0.0);
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) g[r] += n.grad[r * cols + c];
          }
          n.parents[1]->AccumulateGrad(g);
        }
      });
}

Tensor Scale(const Tensor& x, double factor) {
  return Unary(
      x, [factor](double v) { return v * factor; },
      [factor](double, double) { return factor; });
}

Tensor AddScalar(const Tensor& x, double offset) {
  return Unary(
      x, [offset](double v) { return v + offset; },
      [](double, double) { return 1.0; });
}

Tensor Neg(const Tensor& x) { return Scale(x, -1.0); }

Tensor Exp(const Tensor& x) {
  return Unary(
      x, [](double v) { return std::exp(v); },
      [](double, double y) { return y; });
}

Tensor Log(const Tensor& x) {
  for (double v : x.values()) {
    if (!(v > 0.0)) {
      throw NumericError("log: non-positive input " + std::to_string(v));
    }
  }
  return Unary(
      x, [](double v) { return std::log(v); },
      [](double v, double) { return 1.0 / v; });
}

Tensor Tanh(const Tensor& x) {
  return Unary(
      x, [](double v) { return std::tanh(v); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor Sigmoid(const Tensor& x) {
  return Unary(x, StableSigmoid, [](double, double y) { return y * (1.0 - y); });
}

Tensor Softplus(const Tensor& x) {
  return Unary(x, StableSoftplus, [](double v, double) {
    return StableSigmoid(v);
  });
}

Tensor Square(const Tensor& x) {
  return Unary(
      x, [](double v) { return v * v; },
      [](double v, double) { return 2.0 * v; });
}

Tensor Sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.values()) total += v;
  return Tensor::MakeResult({1, 1}, {total}, {x}, [](Node& n) {
    Node& p = *n.parents[0];
    if (!p.requires_grad) return;
    p.AccumulateGrad(std::vector<double>(p.value.size(), n.grad[0]));
  });
}

Tensor Mean(const Tensor& x) {
  return Scale(Sum(x), 1.0 / static_cast<double>(x.size()));
}

Tensor LogSumExpRows(const Tensor& x) {
  RequireRank2("logsumexp_rows", x);
  const std::size_t rows = x.rows(), cols = x.cols();
  std::vector<double> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    auto row = x.values().subspan(r * cols, cols);
    const double peak = *std::max_element(row.begin(), row.end());
    double acc = 0.0;
    for (double v : row) acc += std::exp(v - peak);
    out[r] = peak + std::log(acc);
  }
  return Tensor::MakeResult({rows, 1}, std::move(out), {x},
                            [rows, cols](Node& n) {
                              Node& p = *n.parents[0];
                              if (!p.requires_grad) return;
                              std::vector<double> g(rows * cols);
                              for (std::size_t r = 0; r < rows; ++r) {
                                for (std::size_t c = 0; c < cols; ++c) {
                                  const std::size_t i = r * cols + c;
                                  g[i] = n.grad[r] *
                                         std::exp(p.value[i] - n.value[r]);
                                }
                              }
                              p.AccumulateGrad(g);
                            });
}

namespace {

// out[n, m] = a[n, k] * b[k, m]
void Gemm(std::span<const double> a, std::span<const double> b,
          std::span<double> out, std::size_t n, std::size_t k, std::size_t m) {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double* orow = out.data() + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      if (av == 0.0) continue;
      const double* brow = b.data() + p * m;
      for (std::size_t j = 0; j < m; ++j) orow[j] += av * brow[j];
    }
  }
}

}  // namespace

Tensor MatMul(const Tensor& a, const Tensor& b) {
  RequireRank2("matmul", a);
  RequireRank2("matmul", b);
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions differ " +
                     ShapeString(a.shape()) + " x " + ShapeString(b.shape()));
  }
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  std::vector<double> out(n * m);
  Gemm(a.values(), b.values(), out, n, k, m);
  return Tensor::MakeResult({n, m}, std::move(out), {a, b},
                            [n, k, m](Node& node) {
    Node& pa = *node.parents[0];
    Node& pb = *node.parents[1];
    const std::vector<double>& g = node.grad;
    if (pa.requires_grad) {
      // dA = G * B^T
      std::vector<double> ga(n * k, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          const double* brow = pb.value.data() + p * m;
          const double* grow = g.data() + i * m;
          for (std::size_t j = 0; j < m; ++j) acc += grow[j] * brow[j];
          ga[i * k + p] = acc;
        }
      }
      pa.AccumulateGrad(ga);
    }
    if (pb.requires_grad) {
      // dB = A^T * G
      std::vector<double> gb(k * m, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const double* grow = g.data() + i * m;
        for (std::size_t p = 0; p < k; ++p) {
          const double av = pa.value[i * k + p];
          if (av == 0.0) continue;
          double* gbrow = gb.data() + p * m;
          for (std::size_t j = 0; j < m; ++j) gbrow[j] += av * grow[j];
        }
      }
      pb.AccumulateGrad(gb);
    }
  });
}

Tensor Transpose(const Tensor& x) {
  RequireRank2("transpose", x);
  const std::size_t rows = x.rows(), cols = x.cols();
  std::vector<double> out(x.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      out[c * rows + r] = x.values()[r * cols + c];
    }
  }
  return Tensor::MakeResult({cols, rows}, std::move(out), {x},
                            [rows, cols](Node& n) {
                              Node& p = *n.parents[0];
                              if (!p.requires_grad) return;
                              std::vector<double> g(rows * cols);
                              for (std::size_t r = 0; r < rows; ++r) {
                                for (std::size_t c = 0; c < cols; ++c) {
                                  g[r * cols + c] = n.grad[c * rows + r];
                                }
                              }
                              p.AccumulateGrad(g);
                            });
}

Tensor Diag(const Tensor& row) {
  RequireRank2("diag", row);
  if (row.rows() != 1) {
    throw ShapeError("diag: expected a [1, n] row, got " +
                     ShapeString(row.shape()));
  }
  const std::size_t dim = row.cols();
  std::vector<double> out(dim * dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i) out[i * dim + i] = row.values()[i];
  return Tensor::MakeResult({dim, dim}, std::move(out), {row}, [dim](Node& n) {
    Node& p = *n.parents[0];
    if (!p.requires_grad) return;
    std::vector<double> g(dim);
    for (std::size_t i = 0; i < dim; ++i) g[i] = n.grad[i * dim + i];
    p.AccumulateGrad(g);
  });
}

Tensor Reshape(const Tensor& x, Shape shape) {
  std::size_t total = 1;
  for (std::size_t e : shape) total *= e;
  if (total != x.size()) {
    throw ShapeError("reshape: cannot view " + ShapeString(x.shape()) +
                     " as " + ShapeString(shape));
  }
  std::vector<double> out(x.values().begin(), x.values().end());
  return Tensor::MakeResult(std::move(shape), std::move(out), {x},
                            [](Node& n) {
                              if (n.parents[0]->requires_grad) {
                                n.parents[0]->AccumulateGrad(n.grad);
                              }
                            });
}

Tensor SliceCols(const Tensor& x, std::size_t begin, std::size_t end) {
  RequireRank2("slice_cols", x);
  if (begin >= end || end > x.cols()) {
    throw ShapeError("slice_cols: range [" + std::to_string(begin) + ", " +
                     std::to_string(end) + ") invalid for " +
                     ShapeString(x.shape()));
  }
  const std::size_t rows = x.rows(), cols = x.cols(), width = end - begin;
  std::vector<double> out(rows * width);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(x.values().begin() + r * cols + begin, width,
                out.begin() + r * width);
  }
  return Tensor::MakeResult(
      {rows, width}, std::move(out), {x}, [rows, cols, begin, width](Node& n) {
        Node& p = *n.parents[0];
        if (!p.requires_grad) return;
        std::vector<double> g(rows * cols, 0.0);
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t c = 0; c < width; ++c) {
            g[r * cols + begin + c] = n.grad[r * width + c];
          }
        }
        p.AccumulateGrad(g);
      });
}

Tensor ConcatCols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const std::size_t rows = parts[0].rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const Tensor& p : parts) {
    RequireRank2("concat_cols", p);
    if (p.rows() != rows) {
      throw ShapeError("concat_cols: row mismatch " +
                       ShapeString(parts[0].shape()) + " vs " +
                       ShapeString(p.shape()));
    }
    widths.push_back(p.cols());
    total += p.cols();
  }
  std::vector<double> out(rows * total);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(parts[k].values().begin() + r * widths[k], widths[k],
                  out.begin() + r * total + offset);
    }
    offset += widths[k];
  }
  return Tensor::MakeResult(
      {rows, total}, std::move(out), parts, [rows, total, widths](Node& n) {
        std::size_t off = 0;
        for (std::size_t k = 0; k < n.parents.size(); ++k) {
          Node& p = *n.parents[k];
          const std::size_t w = widths[k];
          if (p.requires_grad) {
            std::vector<double> g(rows * w);
            for (std::size_t r = 0; r < rows; ++r) {
              std::copy_n(n.grad.begin() + r * total + off, w,
                          g.begin() + r * w);
            }
            p.AccumulateGrad(g);
          }
          off += w;
        }
      });
}

Tensor TimeUnfold(const Tensor& x, std::size_t kernel) {
  RequireRank2("time_unfold", x);
  if (kernel % 2 == 0) {
    throw ShapeError("time_unfold: kernel must be odd, got " +
                     std::to_string(kernel));
  }
  const std::size_t t = x.rows(), c = x.cols(), width = kernel * c;
  const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(kernel / 2);
  std::vector<double> out(t * width, 0.0);
  for (std::size_t f = 0; f < t; ++f) {
    for (std::size_t j = 0; j < kernel; ++j) {
      const std::ptrdiff_t src =
          static_cast<std::ptrdiff_t>(f) + static_cast<std::ptrdiff_t>(j) - half;
      if (src < 0 || src >= static_cast<std::ptrdiff_t>(t)) continue;
      std::copy_n(x.values().begin() + src * c, c,
                  out.begin() + f * width + j * c);
    }
  }
  return Tensor::MakeResult(
      {t, width}, std::move(out), {x}, [t, c, kernel, width, half](Node& n) {
        Node& p = *n.parents[0];
        if (!p.requires_grad) return;
        std::vector<double> g(t * c, 0.0);
        for (std::size_t f = 0; f < t; ++f) {
          for (std::size_t j = 0; j < kernel; ++j) {
            const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(f) +
                                       static_cast<std::ptrdiff_t>(j) - half;
            if (src < 0 || src >= static_cast<std::ptrdiff_t>(t)) continue;
            for (std::size_t k = 0; k < c; ++k) {
              g[src * c + k] += n.grad[f * width + j * c + k];
            }
          }
        }
        p.AccumulateGrad(g);
      });
}

Tensor Conv1d(const Tensor& x, const Tensor& weight, std::size_t kernel) {
  RequireRank2("conv1d", x);
  RequireRank2("conv1d", weight);
  if (weight.rows() != kernel * x.cols()) {
    throw ShapeError("conv1d: weight " + ShapeString(weight.shape()) +
                     " does not match kernel " + std::to_string(kernel) +
                     " over input " + ShapeString(x.shape()));
  }
  return MatMul(TimeUnfold(x, kernel), weight);
}

}  // namespace nfvc::ops
