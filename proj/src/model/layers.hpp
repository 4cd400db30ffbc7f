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

#include <string>

#include "autodiff/ops.hpp"
#include "model/params.hpp"

// Building blocks shared by the encoder, prompter, decoder and classifier.
namespace aisam::model {

struct Linear {
  ad::Tensor weight;  // [in, out]
  ad::Tensor bias;    // [out], may be undefined

  Linear() = default;
  Linear(ParamStore& ps, const std::string& name, int in, int out, bool with_bias = true, double gain = 1.0);
  ad::Tensor operator()(const ad::Tensor& x) const;
};

struct LayerNorm {
  ad::Tensor gamma, beta;

  LayerNorm() = default;
  LayerNorm(ParamStore& ps, const std::string& name, int dim);
  ad::Tensor operator()(const ad::Tensor& x) const { return ad::layer_norm(x, gamma, beta); }
};

/// Multi-head attention with an optional narrower inner width. Keys carry no
/// bias: it would only shift each query's logits uniformly.
struct Attention {
  Linear q, k, v, out;
  int heads = 1;
  int inner = 0;

  Attention() = default;
  Attention(ParamStore& ps, const std::string& name, int dim, int heads, int inner);
  ad::Tensor operator()(const ad::Tensor& queries, const ad::Tensor& keys, const ad::Tensor& values) const;
};

struct Mlp {
  Linear fc1, fc2;

  Mlp() = default;
  Mlp(ParamStore& ps, const std::string& name, int dim, int hidden);
  ad::Tensor operator()(const ad::Tensor& x) const { return fc2(ad::gelu(fc1(x))); }
};

/// 3x3 depthwise convolution applied to [cells, dim] tokens laid out on a grid.
struct TokenConv {
  ad::Tensor kernel;  // [dim, 3, 3]
  ad::Tensor bias;    // [dim]; a constant zero when built without bias
  int grid_h = 0, grid_w = 0;

  TokenConv() = default;
  TokenConv(ParamStore& ps, const std::string& name, int dim, int grid_h, int grid_w, bool with_bias = true);
  ad::Tensor operator()(const ad::Tensor& tokens) const;
};

/// Attention-convolution block: query self-attention, query-to-image
/// attention, query MLP, image-to-query attention. Image tokens are refreshed
/// by a depthwise convolution before each attention that reads them, in place
/// of positional embeddings. Every stage is residual with a layer norm.
/// Without `update_image` the last stage is omitted and `image` is left as is.
struct AttnConvBlock {
  Attention self_attn, query_to_image, image_to_query;
  Mlp mlp;
  LayerNorm norm1, norm2, norm3, norm4;
  TokenConv conv_a, conv_b;
  bool update_image = true;

  AttnConvBlock() = default;
  AttnConvBlock(ParamStore& ps, const std::string& name, int dim, int heads, int mlp_hidden, int grid_h, int grid_w,
                bool update_image = true);
  /// Updates `queries` and `image` in place.
  void forward(ad::Tensor& queries, ad::Tensor& image) const;
};

/// Two-way block of the mask decoder. Prompt tokens and image keys receive
/// their positional terms before every attention.
struct TwoWayBlock {
  Attention self_attn, token_to_image, image_to_token;
  Mlp mlp;
  LayerNorm norm1, norm2, norm3, norm4;

  TwoWayBlock() = default;
  TwoWayBlock(ParamStore& ps, const std::string& name, int dim, int heads, int cross_inner, int mlp_hidden);
  void forward(ad::Tensor& tokens, ad::Tensor& image, const ad::Tensor& token_pe, const ad::Tensor& image_pe) const;
};

}  // namespace aisam::model
