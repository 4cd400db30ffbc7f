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

#pragma once

#include <functional>
#include <vector>

#include "autodiff/tensor.hpp"

// Differentiable ops over row-major f64 tensors. Binary elementwise ops need
// identical shapes; the only broadcast is add_bias over the last dimension.
namespace aisam::ad {

// Elementwise.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double s);
Tensor add_scalar(const Tensor& x, double s);
Tensor relu(const Tensor& x);
/// tanh approximation.
Tensor gelu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor sqrt(const Tensor& x);

/// x[..., n] + b[n]
Tensor add_bias(const Tensor& x, const Tensor& bias);

// Linear algebra and layout, all 2-D unless stated.
Tensor matmul(const Tensor& a, const Tensor& b);
/// a · bᵀ
Tensor matmul_bt(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& x);
Tensor reshape(const Tensor& x, Shape shape);
Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end);
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end);
Tensor gather_rows(const Tensor& x, const std::vector<std::size_t>& rows);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor concat_cols(const std::vector<Tensor>& parts);

// Normalizations over the last dimension.
Tensor softmax_lastdim(const Tensor& x);
Tensor log_softmax_lastdim(const Tensor& x);
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);
/// Rows scaled to unit L2 norm; a zero row is a domain error.
Tensor normalize_lastdim(const Tensor& x);

// Reductions.
Tensor reduce_sum(const Tensor& x);
Tensor reduce_mean(const Tensor& x);
/// Gradient flows to the first maximal element.
Tensor reduce_max(const Tensor& x);
/// Sums out the last dimension: [..., n] -> [...] (rank-1 input gives [1]).
Tensor sum_lastdim(const Tensor& x);

// Spatial ops on [C, H, W].
/// Full 3x3 convolution, stride 1, zero padding 1. k is [Cout, C, 3, 3].
Tensor conv2d_3x3(const Tensor& x, const Tensor& k, const Tensor& bias);
/// Per-channel 3x3 convolution, stride 1, zero padding 1. k is [C, 3, 3].
Tensor depthwise_conv3x3(const Tensor& x, const Tensor& k, const Tensor& bias);
/// Kernel 2, stride 2. k is [C, Cout, 2, 2]; output [Cout, 2H, 2W].
Tensor conv_transpose2x2(const Tensor& x, const Tensor& k, const Tensor& bias);
/// Half-pixel-centred bilinear resize by 2, edges clamped.
Tensor upsample_bilinear2x(const Tensor& x);

/// Elementwise op with a caller-supplied derivative dy/dx(x, y).
Tensor custom_unary(const Tensor& x, const std::function<double(double)>& f,
                    const std::function<double(double, double)>& dfdx, const char* name = "custom");

}  // namespace aisam::ad
