// Copyright 2026 The aisam Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "autodiff/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace aisam::ad {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CMap = Eigen::Map<const RowMat>;
using MMap = Eigen::Map<RowMat>;

using detail::make_op;
using detail::wants_grad;

Node* parent(Node& out, std::size_t i) { return out.parents[i].get(); }

void require_same(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
}

void require_rank(const Tensor& x, std::size_t rank, const char* op) {
  if (x.rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                     shape_str(x.shape()));
  }
}

std::size_t last_dim(const Tensor& x) { return x.shape().back(); }

template <class F, class D>
Tensor unary(const char* name, const Tensor& x, F f, D dfdx) {
  std::vector<double> y(x.numel());
  auto xv = x.data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = f(xv[i]);
  return make_op(name, x.shape(), std::move(y), {x}, [dfdx](Node& out) {
    Node* p = parent(out, 0);
    if (!wants_grad(p)) return;
    for (std::size_t i = 0; i < out.grad.size(); ++i) {
      p->grad[i] += out.grad[i] * dfdx(p->value[i], out.value[i]);
    }
  });
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same(a, b, "add");
  std::vector<double> y(a.numel());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.data()[i] + b.data()[i];
  return make_op("add", a.shape(), std::move(y), {a, b}, [](Node& out) {
    for (std::size_t k = 0; k < 2; ++k) {
      Node* p = parent(out, k);
      if (!wants_grad(p)) continue;
      for (std::size_t i = 0; i < out.grad.size(); ++i) p->grad[i] += out.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same(a, b, "sub");
  std::vector<double> y(a.numel());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.data()[i] - b.data()[i];
  return make_op("sub", a.shape(), std::move(y), {a, b}, [](Node& out) {
    Node* pa = parent(out, 0);
    Node* pb = parent(out, 1);
    if (wants_grad(pa)) {
      for (std::size_t i = 0; i < out.grad.size(); ++i) pa->grad[i] += out.grad[i];
    }
    if (wants_grad(pb)) {
      for (std::size_t i = 0; i < out.grad.size(); ++i) pb->grad[i] -= out.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same(a, b, "mul");
  std::vector<double> y(a.numel());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.data()[i] * b.data()[i];
  return make_op("mul", a.shape(), std::move(y), {a, b}, [](Node& out) {
    Node* pa = parent(out, 0);
    Node* pb = parent(out, 1);
    if (wants_grad(pa)) {
      for (std::size_t i = 0; i < out.grad.size(); ++i) pa->grad[i] += out.grad[i] * pb->value[i];
    }
    if (wants_grad(pb)) {
      for (std::size_t i = 0; i < out.grad.size(); ++i) pb->grad[i] += out.grad[i] * pa->value[i];
    }
  });
}

Tensor div(const Tensor& a, const Tensor& b) {
  require_same(a, b, "div");
  std::vector<double> y(a.numel());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.data()[i] / b.data()[i];
  return make_op("div", a.shape(), std::move(y), {a, b}, [](Node& out) {
    Node* pa = parent(out, 0);
    Node* pb = parent(out, 1);
    if (wants_grad(pa)) {
      for (std::size_t i = 0; i < out.grad.size(); ++i) pa->grad[i] += out.grad[i] / pb->value[i];
    }
    if (wants_grad(pb)) {
      for (std::size_t i = 0; i < out.grad.size(); ++i) {
        pb->grad[i] -= out.grad[i] * out.value[i] / pb->value[i];
      }
    }
  });
}

Tensor scale(const Tensor& x, double s) {
  return unary("scale", x, [s](double v) { return v * s; }, [s](double, double) { return s; });
}

Tensor add_scalar(const Tensor& x, double s) {
  return unary("add_scalar", x, [s](double v) { return v + s; }, [](double, double) { return 1.0; });
}

Tensor relu(const Tensor& x) {
  return unary("relu", x, [](double v) { return v > 0 ? v : 0.0; },
               [](double v, double) { return v > 0 ? 1.0 : 0.0; });
}

Tensor gelu(const Tensor& x) {
  return unary(
      "gelu", x,
      [](double v) { return 0.5 * v * (1.0 + std::tanh(kGeluC * (v + kGeluA * v * v * v))); },
      [](double v, double) {
        const double t = std::tanh(kGeluC * (v + kGeluA * v * v * v));
        return 0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluA * v * v);
      });
}

Tensor sigmoid(const Tensor& x) {
  return unary("sigmoid", x,
               [](double v) {
                 if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
                 const double e = std::exp(v);
                 return e / (1.0 + e);
               },
               [](double, double y) { return y * (1.0 - y); });
}

Tensor exp(const Tensor& x) {
  return unary("exp", x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& x) {
  return unary("log", x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Tensor sqrt(const Tensor& x) {
  return unary("sqrt", x, [](double v) { return std::sqrt(v); },
               [](double, double y) { return 0.5 / y; });
}

Tensor custom_unary(const Tensor& x, const std::function<double(double)>& f,
                    const std::function<double(double, double)>& dfdx, const char* name) {
  return unary(name, x, f, dfdx);
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  const std::size_t n = last_dim(x);
  if (bias.numel() != n) {
    throw ShapeError("add_bias: bias " + shape_str(bias.shape()) + " vs input " + shape_str(x.shape()));
  }
  std::vector<double> y(x.data().begin(), x.data().end());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += bias.data()[i % n];
  return make_op("add_bias", x.shape(), std::move(y), {x, bias}, [n](Node& out) {
    Node* px = parent(out, 0);
    Node* pb = parent(out, 1);
    if (wants_grad(px)) {
      for (std::size_t i = 0; i < out.grad.size(); ++i) px->grad[i] += out.grad[i];
    }
    if (wants_grad(pb)) {
      for (std::size_t i = 0; i < out.grad.size(); ++i) pb->grad[i % n] += out.grad[i];
    }
  });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const auto m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw ShapeError("matmul: inner dims differ " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  }
  std::vector<double> y(m * n);
  MMap(y.data(), m, n).noalias() = CMap(a.data().data(), m, k) * CMap(b.data().data(), k, n);
  return make_op("matmul", {m, n}, std::move(y), {a, b}, [m, k, n](Node& out) {
    Node* pa = parent(out, 0);
    Node* pb = parent(out, 1);
    CMap dy(out.grad.data(), m, n);
    if (wants_grad(pa)) MMap(pa->grad.data(), m, k).noalias() += dy * CMap(pb->value.data(), k, n).transpose();
    if (wants_grad(pb)) MMap(pb->grad.data(), k, n).noalias() += CMap(pa->value.data(), m, k).transpose() * dy;
  });
}

Tensor matmul_bt(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul_bt");
  require_rank(b, 2, "matmul_bt");
  const auto m = a.dim(0), k = a.dim(1), n = b.dim(0);
  if (b.dim(1) != k) {
    throw ShapeError("matmul_bt: inner dims differ " + shape_str(a.shape()) + " x " +
                     shape_str(b.shape()) + "^T");
  }
  std::vector<double> y(m * n);
  MMap(y.data(), m, n).noalias() = CMap(a.data().data(), m, k) * CMap(b.data().data(), n, k).transpose();
  return make_op("matmul_bt", {m, n}, std::move(y), {a, b}, [m, k, n](Node& out) {
    Node* pa = parent(out, 0);
    Node* pb = parent(out, 1);
    CMap dy(out.grad.data(), m, n);
    if (wants_grad(pa)) MMap(pa->grad.data(), m, k).noalias() += dy * CMap(pb->value.data(), n, k);
    if (wants_grad(pb)) MMap(pb->grad.data(), n, k).noalias() += dy.transpose() * CMap(pa->value.data(), m, k);
  });
}

Tensor transpose(const Tensor& x) {
  require_rank(x, 2, "transpose");
  const auto m = x.dim(0), n = x.dim(1);
  std::vector<double> y(m * n);
  MMap(y.data(), n, m) = CMap(x.data().data(), m, n).transpose();
  return make_op("transpose", {n, m}, std::move(y), {x}, [m, n](Node& out) {
    Node* p = parent(out, 0);
    if (wants_grad(p)) MMap(p->grad.data(), m, n) += CMap(out.grad.data(), n, m).transpose();
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (numel_of(shape) != x.numel()) {
    throw ShapeError("reshape: " + shape_str(x.shape()) + " -> " + shape_str(shape));
  }
  std::vector<double> y(x.data().begin(), x.data().end());
  return make_op("reshape", std::move(shape), std::move(y), {x}, [](Node& out) {
    Node* p = parent(out, 0);
    if (!wants_grad(p)) return;
    for (std::size_t i = 0; i < out.grad.size(); ++i) p->grad[i] += out.grad[i];
  });
}

Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end) {
  require_rank(x, 2, "slice_rows");
  if (begin >= end || end > x.dim(0)) throw ShapeError("slice_rows: bad range");
  const auto n = x.dim(1);
  std::vector<double> y(x.data().begin() + begin * n, x.data().begin() + end * n);
  return make_op("slice_rows", {end - begin, n}, std::move(y), {x}, [begin, n](Node& out) {
    Node* p = parent(out, 0);
    if (!wants_grad(p)) return;
    for (std::size_t i = 0; i < out.grad.size(); ++i) p->grad[begin * n + i] += out.grad[i];
  });
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end) {
  require_rank(x, 2, "slice_cols");
  if (begin >= end || end > x.dim(1)) throw ShapeError("slice_cols: bad range");
  const auto m = x.dim(0), n = x.dim(1), w = end - begin;
  std::vector<double> y(m * w);
  for (std::size_t r = 0; r < m; ++r) {
    std::copy_n(x.data().begin() + r * n + begin, w, y.begin() + r * w);
  }
  return make_op("slice_cols", {m, w}, std::move(y), {x}, [m, n, w, begin](Node& out) {
    Node* p = parent(out, 0);
    if (!wants_grad(p)) return;
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t c = 0; c < w; ++c) p->grad[r * n + begin + c] += out.grad[r * w + c];
  });
}

Tensor gather_rows(const Tensor& x, const std::vector<std::size_t>& rows) {
  require_rank(x, 2, "gather_rows");
  if (rows.empty()) throw ShapeError("gather_rows: no rows requested");
  const auto n = x.dim(1);
  std::vector<double> y(rows.size() * n);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= x.dim(0)) throw ShapeError("gather_rows: row index out of range");
    std::copy_n(x.data().begin() + rows[r] * n, n, y.begin() + r * n);
  }
  return make_op("gather_rows", {rows.size(), n}, std::move(y), {x}, [rows, n](Node& out) {
    Node* p = parent(out, 0);
    if (!wants_grad(p)) return;
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t c = 0; c < n; ++c) p->grad[rows[r] * n + c] += out.grad[r * n + c];
  });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: nothing to concatenate");
  const auto n = parts[0].dim(1);
  std::size_t rows = 0;
  for (const auto& p : parts) {
    require_rank(p, 2, "concat_rows");
    if (p.dim(1) != n) throw ShapeError("concat_rows: column count mismatch");
    rows += p.dim(0);
  }
  std::vector<double> y;
  y.reserve(rows * n);
  std::vector<std::size_t> offsets;
  for (const auto& p : parts) {
    offsets.push_back(y.size());
    y.insert(y.end(), p.data().begin(), p.data().end());
  }
  return make_op("concat_rows", {rows, n}, std::move(y), parts, [offsets](Node& out) {
    for (std::size_t k = 0; k < out.parents.size(); ++k) {
      Node* p = parent(out, k);
      if (!wants_grad(p)) continue;
      for (std::size_t i = 0; i < p->grad.size(); ++i) p->grad[i] += out.grad[offsets[k] + i];
    }
  });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: nothing to concatenate");
  const auto m = parts[0].dim(0);
  std::size_t cols = 0;
  std::vector<std::size_t> offsets;
  for (const auto& p : parts) {
    require_rank(p, 2, "concat_cols");
    if (p.dim(0) != m) throw ShapeError("concat_cols: row count mismatch");
    offsets.push_back(cols);
    cols += p.dim(1);
  }
  std::vector<double> y(m * cols);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto w = parts[k].dim(1);
    for (std::size_t r = 0; r < m; ++r) {
      std::copy_n(parts[k].data().begin() + r * w, w, y.begin() + r * cols + offsets[k]);
    }
  }
  return make_op("concat_cols", {m, cols}, std::move(y), parts, [offsets, m, cols](Node& out) {
    for (std::size_t k = 0; k < out.parents.size(); ++k) {
      Node* p = parent(out, k);
      if (!wants_grad(p)) continue;
      const auto w = p->shape[1];
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < w; ++c) p->grad[r * w + c] += out.grad[r * cols + offsets[k] + c];
    }
  });
}

Tensor softmax_lastdim(const Tensor& x) {
  const auto n = last_dim(x);
  const auto rows = x.numel() / n;
  std::vector<double> y(x.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = x.data().data() + r * n;
    double* o = y.data() + r * n;
    const double mx = *std::max_element(in, in + n);
    double s = 0;
    for (std::size_t c = 0; c < n; ++c) s += (o[c] = std::exp(in[c] - mx));
    for (std::size_t c = 0; c < n; ++c) o[c] /= s;
  }
  return make_op("softmax", x.shape(), std::move(y), {x}, [rows, n](Node& out) {
    Node* p = parent(out, 0);
    if (!wants_grad(p)) return;
    for (std::size_t r = 0; r < rows; ++r) {
      const double* yv = out.value.data() + r * n;
      const double* dy = out.grad.data() + r * n;
      double dot = 0;
      for (std::size_t c = 0; c < n; ++c) dot += dy[c] * yv[c];
      for (std::size_t c = 0; c < n; ++c) p->grad[r * n + c] += yv[c] * (dy[c] - dot);
    }
  });
}

Tensor log_softmax_lastdim(const Tensor& x) {
  const auto n = last_dim(x);
  const auto rows = x.numel() / n;
  std::vector<double> y(x.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = x.data().data() + r * n;
    const double mx = *std::max_element(in, in + n);
    double s = 0;
    for (std::size_t c = 0; c < n; ++c) s += std::exp(in[c] - mx);
    const double lse = mx + std::log(s);
    for (std::size_t c = 0; c < n; ++c) y[r * n + c] = in[c] - lse;
  }
  return make_op("log_softmax", x.shape(), std::move(y), {x}, [rows, n](Node& out) {
    Node* p = parent(out, 0);
    if (!wants_grad(p)) return;
    for (std::size_t r = 0; r < rows; ++r) {
      const double* yv = out.value.data() + r * n;
      const double* dy = out.grad.data() + r * n;
      double total = 0;
      for (std::size_t c = 0; c < n; ++c) total += dy[c];
      for (std::size_t c = 0; c < n; ++c) p->grad[r * n + c] += dy[c] - std::exp(yv[c]) * total;
    }
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  const auto n = last_dim(x);
  if (gamma.numel() != n || beta.numel() != n) throw ShapeError("layer_norm: affine size mismatch");
  const auto rows = x.numel() / n;
  std::vector<double> y(x.numel());
  std::vector<double> xhat(x.numel());
  std::vector<double> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = x.data().data() + r * n;
    double mean = 0;
    for (std::size_t c = 0; c < n; ++c) mean += in[c];
    mean /= static_cast<double>(n);
    double var = 0;
    for (std::size_t c = 0; c < n; ++c) var += (in[c] - mean) * (in[c] - mean);
    var /= static_cast<double>(n);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < n; ++c) {
      xhat[r * n + c] = (in[c] - mean) * inv_std[r];
      y[r * n + c] = xhat[r * n + c] * gamma.data()[c] + beta.data()[c];
    }
  }
  return make_op("layer_norm", x.shape(), std::move(y), {x, gamma, beta},
                 [rows, n, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& out) {
                   Node* px = parent(out, 0);
                   Node* pg = parent(out, 1);
                   Node* pb = parent(out, 2);
                   const double inv_n = 1.0 / static_cast<double>(n);
                   for (std::size_t r = 0; r < rows; ++r) {
                     const double* dy = out.grad.data() + r * n;
                     const double* xh = xhat.data() + r * n;
                     if (wants_grad(pg))
                       for (std::size_t c = 0; c < n; ++c) pg->grad[c] += dy[c] * xh[c];
                     if (wants_grad(pb))
                       for (std::size_t c = 0; c < n; ++c) pb->grad[c] += dy[c];
                     if (!wants_grad(px)) continue;
                     double mean_d = 0, mean_dx = 0;
                     for (std::size_t c = 0; c < n; ++c) {
                       const double d = dy[c] * pg->value[c];
                       mean_d += d;
                       mean_dx += d * xh[c];
                     }
                     mean_d *= inv_n;
                     mean_dx *= inv_n;
                     for (std::size_t c = 0; c < n; ++c) {
                       const double d = dy[c] * pg->value[c];
                       px->grad[r * n + c] += inv_std[r] * (d - mean_d - xh[c] * mean_dx);
                     }
                   }
                 });
}

Tensor normalize_lastdim(const Tensor& x) {
  const auto n = last_dim(x);
  const auto rows = x.numel() / n;
  std::vector<double> y(x.numel());
  std::vector<double> norms(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0;
    for (std::size_t c = 0; c < n; ++c) s += x.data()[r * n + c] * x.data()[r * n + c];
    if (s == 0.0) throw std::domain_error("normalize_lastdim: zero-norm vector");
    norms[r] = std::sqrt(s);
    for (std::size_t c = 0; c < n; ++c) y[r * n + c] = x.data()[r * n + c] / norms[r];
  }
  return make_op("normalize", x.shape(), std::move(y), {x}, [rows, n, norms = std::move(norms)](Node& out) {
    Node* p = parent(out, 0);
    if (!wants_grad(p)) return;
    for (std::size_t r = 0; r < rows; ++r) {
      const double* yv = out.value.data() + r * n;
      const double* dy = out.grad.data() + r * n;
      double dot = 0;
      for (std::size_t c = 0; c < n; ++c) dot += yv[c] * dy[c];
      for (std::size_t c = 0; c < n; ++c) p->grad[r * n + c] += (dy[c] - yv[c] * dot) / norms[r];
    }
  });
}

Tensor reduce_sum(const Tensor& x) {
  double s = 0;
  for (double v : x.data()) s += v;
  return make_op("reduce_sum", {1}, {s}, {x}, [](Node& out) {
    Node* p = parent(out, 0);
    if (!wants_grad(p)) return;
    for (auto& g : p->grad) g += out.grad[0];
  });
}

Tensor reduce_mean(const Tensor& x) {
  double s = 0;
  for (double v : x.data()) s += v;
  const double inv = 1.0 / static_cast<double>(x.numel());
  return make_op("reduce_mean", {1}, {s * inv}, {x}, [inv](Node& out) {
    Node* p = parent(out, 0);
    if (!wants_grad(p)) return;
    for (auto& g : p->grad) g += out.grad[0] * inv;
  });
}

Tensor reduce_max(const Tensor& x) {
  const auto it = std::max_element(x.data().begin(), x.data().end());
  const auto idx = static_cast<std::size_t>(it - x.data().begin());
  return make_op("reduce_max", {1}, {*it}, {x}, [idx](Node& out) {
    Node* p = parent(out, 0);
    if (wants_grad(p)) p->grad[idx] += out.grad[0];
  });
}

Tensor sum_lastdim(const Tensor& x) {
  const auto n = last_dim(x);
  const auto rows = x.numel() / n;
  Shape shape(x.shape().begin(), x.shape().end() - 1);
  if (shape.empty()) shape = {1};
  std::vector<double> y(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < n; ++c) y[r] += x.data()[r * n + c];
  return make_op("sum_lastdim", std::move(shape), std::move(y), {x}, [rows, n](Node& out) {
    Node* p = parent(out, 0);
    if (!wants_grad(p)) return;
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < n; ++c) p->grad[r * n + c] += out.grad[r];
  });
}

Tensor conv2d_3x3(const Tensor& x, const Tensor& k, const Tensor& bias) {
  require_rank(x, 3, "conv2d_3x3");
  require_rank(k, 4, "conv2d_3x3");
  const auto c_in = x.dim(0), h = x.dim(1), w = x.dim(2), c_out = k.dim(0);
  if (k.dim(1) != c_in || k.dim(2) != 3 || k.dim(3) != 3) {
    throw ShapeError("conv2d_3x3: kernel " + shape_str(k.shape()) + " vs input " + shape_str(x.shape()));
  }
  if (bias.numel() != c_out) throw ShapeError("conv2d_3x3: bias size mismatch");
  const auto hw = h * w;
  // im2col: rows (ci, ky, kx), columns output pixels.
  auto cols = std::make_shared<std::vector<double>>(c_in * 9 * hw, 0.0);
  for (std::size_t ci = 0; ci < c_in; ++ci)
    for (int ky = 0; ky < 3; ++ky)
      for (int kx = 0; kx < 3; ++kx) {
        double* row = cols->data() + ((ci * 9) + ky * 3 + kx) * hw;
        for (std::size_t y = 0; y < h; ++y) {
          const auto sy = static_cast<long>(y) + ky - 1;
          if (sy < 0 || sy >= static_cast<long>(h)) continue;
          for (std::size_t xx = 0; xx < w; ++xx) {
            const auto sx = static_cast<long>(xx) + kx - 1;
            if (sx < 0 || sx >= static_cast<long>(w)) continue;
            row[y * w + xx] = x.data()[ci * hw + static_cast<std::size_t>(sy) * w + static_cast<std::size_t>(sx)];
          }
        }
      }
  std::vector<double> out_v(c_out * hw);
  MMap out_m(out_v.data(), c_out, hw);
  out_m.noalias() = CMap(k.data().data(), c_out, c_in * 9) * CMap(cols->data(), c_in * 9, hw);
  for (std::size_t co = 0; co < c_out; ++co) out_m.row(co).array() += bias.data()[co];
  return make_op("conv2d_3x3", {c_out, h, w}, std::move(out_v), {x, k, bias},
                 [cols, c_in, c_out, h, w, hw](Node& out) {
                   Node* px = parent(out, 0);
                   Node* pk = parent(out, 1);
                   Node* pb = parent(out, 2);
                   CMap dy(out.grad.data(), c_out, hw);
                   if (wants_grad(pk)) {
                     MMap(pk->grad.data(), c_out, c_in * 9).noalias() +=
                         dy * CMap(cols->data(), c_in * 9, hw).transpose();
                   }
                   if (wants_grad(pb)) {
                     for (std::size_t co = 0; co < c_out; ++co) pb->grad[co] += dy.row(co).sum();
                   }
                   if (wants_grad(px)) {
                     RowMat dcols = CMap(pk->value.data(), c_out, c_in * 9).transpose() * dy;
                     for (std::size_t ci = 0; ci < c_in; ++ci)
                       for (int ky = 0; ky < 3; ++ky)
                         for (int kx = 0; kx < 3; ++kx) {
                           const double* row = dcols.data() + ((ci * 9) + ky * 3 + kx) * hw;
                           for (std::size_t y = 0; y < h; ++y) {
                             const auto sy = static_cast<long>(y) + ky - 1;
                             if (sy < 0 || sy >= static_cast<long>(h)) continue;
                             for (std::size_t xx = 0; xx < w; ++xx) {
                               const auto sx = static_cast<long>(xx) + kx - 1;
                               if (sx < 0 || sx >= static_cast<long>(w)) continue;
                               px->grad[ci * hw + static_cast<std::size_t>(sy) * w + static_cast<std::size_t>(sx)] +=
                                   row[y * w + xx];
                             }
                           }
                         }
                   }
                 });
}

Tensor depthwise_conv3x3(const Tensor& x, const Tensor& k, const Tensor& bias) {
  require_rank(x, 3, "depthwise_conv3x3");
  const auto c = x.dim(0), h = x.dim(1), w = x.dim(2);
  if (k.numel() != c * 9) throw ShapeError("depthwise_conv3x3: kernel " + shape_str(k.shape()));
  if (bias.numel() != c) throw ShapeError("depthwise_conv3x3: bias size mismatch");
  const auto hw = h * w;
  std::vector<double> y(c * hw);
  auto in_bounds = [h, w](long yy, long xx) {
    return yy >= 0 && yy < static_cast<long>(h) && xx >= 0 && xx < static_cast<long>(w);
  };
  for (std::size_t ch = 0; ch < c; ++ch) {
    const double* kk = k.data().data() + ch * 9;
    const double* in = x.data().data() + ch * hw;
    for (std::size_t yy = 0; yy < h; ++yy)
      for (std::size_t xx = 0; xx < w; ++xx) {
        double s = bias.data()[ch];
        for (int ky = 0; ky < 3; ++ky)
          for (int kx = 0; kx < 3; ++kx) {
            const long sy = static_cast<long>(yy) + ky - 1, sx = static_cast<long>(xx) + kx - 1;
            if (in_bounds(sy, sx)) s += kk[ky * 3 + kx] * in[sy * static_cast<long>(w) + sx];
          }
        y[ch * hw + yy * w + xx] = s;
      }
  }
  return make_op("depthwise_conv3x3", x.shape(), std::move(y), {x, k, bias}, [c, h, w, hw, in_bounds](Node& out) {
    Node* px = parent(out, 0);
    Node* pk = parent(out, 1);
    Node* pb = parent(out, 2);
    const bool gx = wants_grad(px), gk = wants_grad(pk), gb = wants_grad(pb);
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double* dy = out.grad.data() + ch * hw;
      for (std::size_t yy = 0; yy < h; ++yy)
        for (std::size_t xx = 0; xx < w; ++xx) {
          const double g = dy[yy * w + xx];
          if (gb) pb->grad[ch] += g;
          for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
              const long sy = static_cast<long>(yy) + ky - 1, sx = static_cast<long>(xx) + kx - 1;
              if (!in_bounds(sy, sx)) continue;
              const auto src = ch * hw + static_cast<std::size_t>(sy * static_cast<long>(w) + sx);
              if (gk) pk->grad[ch * 9 + ky * 3 + kx] += g * px->value[src];
              if (gx) px->grad[src] += g * pk->value[ch * 9 + ky * 3 + kx];
            }
        }
    }
  });
}

Tensor conv_transpose2x2(const Tensor& x, const Tensor& k, const Tensor& bias) {
  require_rank(x, 3, "conv_transpose2x2");
  require_rank(k, 4, "conv_transpose2x2");
  const auto c_in = x.dim(0), h = x.dim(1), w = x.dim(2), c_out = k.dim(1);
  if (k.dim(0) != c_in || k.dim(2) != 2 || k.dim(3) != 2) {
    throw ShapeError("conv_transpose2x2: kernel " + shape_str(k.shape()) + " vs input " + shape_str(x.shape()));
  }
  if (bias.numel() != c_out) throw ShapeError("conv_transpose2x2: bias size mismatch");
  const auto hw = h * w;
  // Kernel as [(co, a, b), ci] so all four taps come out of one product.
  auto kmat = [&] {
    RowMat m(c_out * 4, c_in);
    for (std::size_t ci = 0; ci < c_in; ++ci)
      for (std::size_t co = 0; co < c_out; ++co)
        for (std::size_t t = 0; t < 4; ++t) m(co * 4 + t, ci) = k.data()[(ci * c_out + co) * 4 + t];
    return m;
  }();
  RowMat taps = kmat * CMap(x.data().data(), c_in, hw);
  const auto ow = 2 * w;
  std::vector<double> y(c_out * 4 * hw);
  for (std::size_t co = 0; co < c_out; ++co)
    for (std::size_t t = 0; t < 4; ++t) {
      const auto a = t / 2, b = t % 2;
      for (std::size_t yy = 0; yy < h; ++yy)
        for (std::size_t xx = 0; xx < w; ++xx) {
          y[co * 4 * hw + (2 * yy + a) * ow + 2 * xx + b] = taps(co * 4 + t, yy * w + xx) + bias.data()[co];
        }
    }
  return make_op("conv_transpose2x2", {c_out, 2 * h, 2 * w}, std::move(y), {x, k, bias},
                 [c_in, c_out, h, w, hw, ow, kmat = std::move(kmat)](Node& out) {
                   Node* px = parent(out, 0);
                   Node* pk = parent(out, 1);
                   Node* pb = parent(out, 2);
                   RowMat dtaps(c_out * 4, hw);
                   for (std::size_t co = 0; co < c_out; ++co)
                     for (std::size_t t = 0; t < 4; ++t) {
                       const auto a = t / 2, b = t % 2;
                       for (std::size_t yy = 0; yy < h; ++yy)
                         for (std::size_t xx = 0; xx < w; ++xx)
                           dtaps(co * 4 + t, yy * w + xx) = out.grad[co * 4 * hw + (2 * yy + a) * ow + 2 * xx + b];
                     }
                   if (wants_grad(pb)) {
                     for (std::size_t co = 0; co < c_out; ++co)
                       pb->grad[co] += dtaps.middleRows(co * 4, 4).sum();
                   }
                   if (wants_grad(px)) MMap(px->grad.data(), c_in, hw).noalias() += kmat.transpose() * dtaps;
                   if (wants_grad(pk)) {
                     RowMat dk = dtaps * CMap(px->value.data(), c_in, hw).transpose();
                     for (std::size_t ci = 0; ci < c_in; ++ci)
                       for (std::size_t co = 0; co < c_out; ++co)
                         for (std::size_t t = 0; t < 4; ++t) pk->grad[(ci * c_out + co) * 4 + t] += dk(co * 4 + t, ci);
                   }
                 });
}

namespace {

// Source taps for a half-pixel 2x bilinear resize along one axis.
struct Tap {
  std::size_t i0, i1;
  double w0, w1;
};

std::vector<Tap> bilinear_taps(std::size_t n) {
  std::vector<Tap> taps(2 * n);
  for (std::size_t o = 0; o < 2 * n; ++o) {
    const double src = (static_cast<double>(o) + 0.5) / 2.0 - 0.5;
    const double fl = std::floor(src);
    const double frac = src - fl;
    const long lo = static_cast<long>(fl);
    const auto clamp = [n](long i) { return static_cast<std::size_t>(std::clamp<long>(i, 0, static_cast<long>(n) - 1)); };
    taps[o] = {clamp(lo), clamp(lo + 1), 1.0 - frac, frac};
  }
  return taps;
}

}  // namespace

Tensor upsample_bilinear2x(const Tensor& x) {
  require_rank(x, 3, "upsample_bilinear2x");
  const auto c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const auto ty = bilinear_taps(h), tx = bilinear_taps(w);
  const auto oh = 2 * h, ow = 2 * w;
  std::vector<double> y(c * oh * ow);
  for (std::size_t ch = 0; ch < c; ++ch) {
    const double* in = x.data().data() + ch * h * w;
    for (std::size_t oy = 0; oy < oh; ++oy)
      for (std::size_t ox = 0; ox < ow; ++ox) {
        const auto& a = ty[oy];
        const auto& b = tx[ox];
        y[(ch * oh + oy) * ow + ox] = a.w0 * (b.w0 * in[a.i0 * w + b.i0] + b.w1 * in[a.i0 * w + b.i1]) +
                                      a.w1 * (b.w0 * in[a.i1 * w + b.i0] + b.w1 * in[a.i1 * w + b.i1]);
      }
  }
  return make_op("upsample_bilinear2x", {c, oh, ow}, std::move(y), {x}, [c, h, w, oh, ow, ty, tx](Node& out) {
    Node* p = parent(out, 0);
    if (!wants_grad(p)) return;
    for (std::size_t ch = 0; ch < c; ++ch) {
      double* g = p->grad.data() + ch * h * w;
      for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox) {
          const double d = out.grad[(ch * oh + oy) * ow + ox];
          const auto& a = ty[oy];
          const auto& b = tx[ox];
          g[a.i0 * w + b.i0] += d * a.w0 * b.w0;
          g[a.i0 * w + b.i1] += d * a.w0 * b.w1;
          g[a.i1 * w + b.i0] += d * a.w1 * b.w0;
          g[a.i1 * w + b.i1] += d * a.w1 * b.w1;
        }
    }
  });
}

}  // namespace aisam::ad
