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

#include "model/layers.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace aisam::model {

using ad::Tensor;

Linear::Linear(ParamStore& ps, const std::string& name, int in, int out, bool with_bias, double gain)
    : weight(ps.normal(name + ".weight", {static_cast<std::size_t>(in), static_cast<std::size_t>(out)},
                       gain / std::sqrt(static_cast<double>(in)))) {
  if (with_bias) bias = ps.constant(name + ".bias", {static_cast<std::size_t>(out)}, 0.0);
}

Tensor Linear::operator()(const Tensor& x) const {
  auto y = ad::matmul(x, weight);
  return bias.defined() ? ad::add_bias(y, bias) : y;
}

LayerNorm::LayerNorm(ParamStore& ps, const std::string& name, int dim)
    : gamma(ps.constant(name + ".gamma", {static_cast<std::size_t>(dim)}, 1.0)),
      beta(ps.constant(name + ".beta", {static_cast<std::size_t>(dim)}, 0.0)) {}

Attention::Attention(ParamStore& ps, const std::string& name, int dim, int heads_, int inner_)
    : q(ps, name + ".q", dim, inner_),
      k(ps, name + ".k", dim, inner_, false),
      v(ps, name + ".v", dim, inner_),
      out(ps, name + ".out", inner_, dim),
      heads(heads_),
      inner(inner_) {
  if (inner % heads != 0) throw std::invalid_argument("attention width must divide into heads");
}

Tensor Attention::operator()(const Tensor& queries, const Tensor& keys, const Tensor& values) const {
  const auto qp = q(queries), kp = k(keys), vp = v(values);
  const auto hd = static_cast<std::size_t>(inner / heads);
  const double s = 1.0 / std::sqrt(static_cast<double>(hd));
  if (heads == 1) return out(ad::matmul(ad::softmax_lastdim(ad::scale(ad::matmul_bt(qp, kp), s)), vp));
  std::vector<Tensor> per_head;
  for (std::size_t h = 0; h < static_cast<std::size_t>(heads); ++h) {
    const auto qh = ad::slice_cols(qp, h * hd, (h + 1) * hd);
    const auto kh = ad::slice_cols(kp, h * hd, (h + 1) * hd);
    const auto vh = ad::slice_cols(vp, h * hd, (h + 1) * hd);
    per_head.push_back(ad::matmul(ad::softmax_lastdim(ad::scale(ad::matmul_bt(qh, kh), s)), vh));
  }
  return out(ad::concat_cols(per_head));
}

Mlp::Mlp(ParamStore& ps, const std::string& name, int dim, int hidden)
    : fc1(ps, name + ".fc1", dim, hidden), fc2(ps, name + ".fc2", hidden, dim) {}

TokenConv::TokenConv(ParamStore& ps, const std::string& name, int dim, int gh, int gw, bool with_bias)
    : kernel(ps.normal(name + ".kernel", {static_cast<std::size_t>(dim), 3, 3}, 1.0 / 3.0)),
      bias(with_bias ? ps.constant(name + ".bias", {static_cast<std::size_t>(dim)}, 0.0)
                     : Tensor::zeros({static_cast<std::size_t>(dim)})),
      grid_h(gh),
      grid_w(gw) {}

Tensor TokenConv::operator()(const Tensor& tokens) const {
  const auto dim = tokens.dim(1);
  const auto gh = static_cast<std::size_t>(grid_h), gw = static_cast<std::size_t>(grid_w);
  auto chw = ad::reshape(ad::transpose(tokens), {dim, gh, gw});
  auto y = ad::depthwise_conv3x3(chw, kernel, bias);
  return ad::transpose(ad::reshape(y, {dim, gh * gw}));
}

AttnConvBlock::AttnConvBlock(ParamStore& ps, const std::string& name, int dim, int heads, int mlp_hidden, int gh,
                             int gw, bool update)
    : self_attn(ps, name + ".self_attn", dim, heads, dim),
      query_to_image(ps, name + ".query_to_image", dim, heads, dim),
      mlp(ps, name + ".mlp", dim, mlp_hidden),
      norm1(ps, name + ".norm1", dim),
      norm2(ps, name + ".norm2", dim),
      norm3(ps, name + ".norm3", dim),
      conv_a(ps, name + ".conv_a", dim, gh, gw),
      update_image(update) {
  if (update_image) {
    image_to_query = Attention(ps, name + ".image_to_query", dim, heads, dim);
    norm4 = LayerNorm(ps, name + ".norm4", dim);
    conv_b = TokenConv(ps, name + ".conv_b", dim, gh, gw);
  }
}

void AttnConvBlock::forward(Tensor& queries, Tensor& image) const {
  queries = norm1(ad::add(queries, self_attn(queries, queries, queries)));
  const auto refreshed = ad::add(image, conv_a(image));
  queries = norm2(ad::add(queries, query_to_image(queries, refreshed, refreshed)));
  queries = norm3(ad::add(queries, mlp(queries)));
  if (!update_image) return;
  const auto refreshed_b = ad::add(image, conv_b(image));
  image = norm4(ad::add(image, image_to_query(refreshed_b, queries, queries)));
}

TwoWayBlock::TwoWayBlock(ParamStore& ps, const std::string& name, int dim, int heads, int cross_inner, int mlp_hidden)
    : self_attn(ps, name + ".self_attn", dim, heads, dim),
      token_to_image(ps, name + ".token_to_image", dim, heads, cross_inner),
      image_to_token(ps, name + ".image_to_token", dim, heads, cross_inner),
      mlp(ps, name + ".mlp", dim, mlp_hidden),
      norm1(ps, name + ".norm1", dim),
      norm2(ps, name + ".norm2", dim),
      norm3(ps, name + ".norm3", dim),
      norm4(ps, name + ".norm4", dim) {}

void TwoWayBlock::forward(Tensor& tokens, Tensor& image, const Tensor& token_pe, const Tensor& image_pe) const {
  auto q = ad::add(tokens, token_pe);
  tokens = norm1(ad::add(tokens, self_attn(q, q, tokens)));
  q = ad::add(tokens, token_pe);
  auto k = ad::add(image, image_pe);
  tokens = norm2(ad::add(tokens, token_to_image(q, k, image)));
  tokens = norm3(ad::add(tokens, mlp(tokens)));
  q = ad::add(tokens, token_pe);
  k = ad::add(image, image_pe);
  image = norm4(ad::add(image, image_to_token(k, q, tokens)));
}

}  // namespace aisam::model
