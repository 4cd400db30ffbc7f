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

#include "model/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace aisam::model {

using ad::Tensor;

namespace {

std::size_t sz(int v) { return static_cast<std::size_t>(v); }

// Rows of `x` reordered lexicographically by value.
Tensor canonical_rows(const Tensor& x) {
  const auto rows = x.dim(0), cols = x.dim(1);
  std::vector<std::size_t> order(rows);
  std::iota(order.begin(), order.end(), 0);
  const auto v = x.data();
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::lexicographical_compare(v.begin() + static_cast<long>(a * cols), v.begin() + static_cast<long>((a + 1) * cols),
                                        v.begin() + static_cast<long>(b * cols), v.begin() + static_cast<long>((b + 1) * cols));
  });
  if (std::is_sorted(order.begin(), order.end())) return x;
  return ad::gather_rows(x, order);
}

Tensor row_of(const Tensor& m, std::size_t r) { return ad::reshape(ad::slice_rows(m, r, r + 1), {m.dim(1)}); }

}  // namespace

void ModelConfig::validate() const {
  if (grid <= 0 || image_size % grid != 0) throw std::invalid_argument("model: image size must be a multiple of grid");
  int up = grid * 4;
  while (up < image_size) up *= 2;
  if (up != image_size) throw std::invalid_argument("model: image size must be grid * 4 * 2^k");
  if (dim % 4 != 0 || dim % heads != 0 || (dim / 2) % heads != 0) {
    throw std::invalid_argument("model: dim must be a multiple of 4 and split evenly across heads");
  }
  if (num_classes < 2 || num_classes > 8) throw std::invalid_argument("model: num_classes must be in 2..8");
  if (points_per_class < 1) throw std::invalid_argument("model: points_per_class must be positive");
  if (encoder_blocks < 0 || prompter_blocks < 0 || decoder_blocks < 0) {
    throw std::invalid_argument("model: block counts must be non-negative");
  }
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = {{"image_size", c.image_size},         {"grid", c.grid},
       {"dim", c.dim},                       {"heads", c.heads},
       {"encoder_blocks", c.encoder_blocks}, {"prompter_blocks", c.prompter_blocks},
       {"decoder_blocks", c.decoder_blocks}, {"mlp_ratio", c.mlp_ratio},
       {"num_classes", c.num_classes},       {"points_per_class", c.points_per_class},
       {"init_seed", c.init_seed}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  ModelConfig d;
  c.image_size = j.value("image_size", d.image_size);
  c.grid = j.value("grid", d.grid);
  c.dim = j.value("dim", d.dim);
  c.heads = j.value("heads", d.heads);
  c.encoder_blocks = j.value("encoder_blocks", d.encoder_blocks);
  c.prompter_blocks = j.value("prompter_blocks", d.prompter_blocks);
  c.decoder_blocks = j.value("decoder_blocks", d.decoder_blocks);
  c.mlp_ratio = j.value("mlp_ratio", d.mlp_ratio);
  c.num_classes = j.value("num_classes", d.num_classes);
  c.points_per_class = j.value("points_per_class", d.points_per_class);
  c.init_seed = j.value("init_seed", d.init_seed);
}

Tensor positional_grid(int grid_h, int grid_w, int dim) {
  if (dim <= 0 || dim % 2 != 0) throw std::invalid_argument("positional_grid: dim must be even and positive");
  const int pairs = dim / 2;
  const int row_freqs = (pairs + 1) / 2, col_freqs = pairs / 2;
  auto freq = [](int k, int count, int grid) {
    return count <= 1 ? 1.0 : std::pow(static_cast<double>(grid), static_cast<double>(k) / (count - 1));
  };
  std::vector<double> v(sz(grid_h * grid_w * dim));
  for (int r = 0; r < grid_h; ++r)
    for (int c = 0; c < grid_w; ++c) {
      double* out = v.data() + sz((r * grid_w + c) * dim);
      for (int p = 0; p < pairs; ++p) {
        const bool row_axis = p % 2 == 0;
        const int k = p / 2;
        const double f = row_axis ? freq(k, row_freqs, grid_h) : freq(k, col_freqs, grid_w);
        const double u = row_axis ? (r + 0.5) / grid_h : (c + 0.5) / grid_w;
        out[2 * p] = std::sin(std::numbers::pi * f * u);
        out[2 * p + 1] = std::cos(std::numbers::pi * f * u);
      }
    }
  return Tensor::from({sz(grid_h * grid_w), sz(dim)}, std::move(v));
}

Tensor generalized_points(const Tensor& weights, const Tensor& positional) { return ad::matmul(weights, positional); }

Tensor point_features(const Tensor& weights, const Tensor& positional, const Tensor& features) {
  return ad::matmul(weights, ad::add(positional, features));
}

Model::Model(const ModelConfig& config) : config_(config), params_(config.init_seed) {
  config_.validate();
  const int d = config_.dim, g = config_.grid, fg = config_.foreground_classes();
  const int hidden = d * config_.mlp_ratio, pd = config_.pixel_dim(), p = config_.patch();
  positional_ = positional_grid(g, g, d);

  patch_embed_ = Linear(params_, "encoder.patch_embed", 3 * p * p, d);
  for (int b = 0; b < config_.encoder_blocks; ++b) {
    const auto n = "encoder.block" + std::to_string(b);
    encoder_.push_back({LayerNorm(params_, n + ".norm1", d), LayerNorm(params_, n + ".norm2", d),
                        Attention(params_, n + ".attn", d, config_.heads, d), Mlp(params_, n + ".mlp", d, hidden)});
  }
  encoder_norm_ = LayerNorm(params_, "encoder.norm", d);
  pixel_conv1_k_ = params_.normal("encoder.pixel_conv1.kernel", {sz(2 * pd), 3, 3, 3}, 1.0 / std::sqrt(27.0));
  pixel_conv1_b_ = params_.constant("encoder.pixel_conv1.bias", {sz(2 * pd)}, 0.0);
  pixel_conv2_k_ = params_.normal("encoder.pixel_conv2.kernel", {sz(pd), sz(2 * pd), 3, 3}, 1.0 / std::sqrt(18.0 * pd));
  pixel_conv2_b_ = params_.constant("encoder.pixel_conv2.bias", {sz(pd)}, 0.0);

  class_embed_ = params_.normal("prompter.class_embed", {sz(fg), sz(d)}, 1.0);
  point_embed_ = params_.normal("prompter.point_embed", {sz(config_.points_per_class), sz(d)}, 1.0);
  for (int b = 0; b < config_.prompter_blocks; ++b) {
    prompter_.emplace_back(params_, "prompter.block" + std::to_string(b), d, config_.heads, hidden, g, g);
  }
  prompter_final_conv_ = TokenConv(params_, "prompter.final_conv", d, g, g, false);
  prompter_query_ = Linear(params_, "prompter.query", d, d);
  prompter_key_ = Linear(params_, "prompter.key", d, d, false);

  mask_token_ = params_.normal("decoder.mask_token", {1, sz(d)}, 1.0);
  polarity_ = params_.normal("decoder.polarity", {2, sz(d)}, 1.0);
  for (int b = 0; b < config_.decoder_blocks; ++b) {
    decoder_.emplace_back(params_, "decoder.block" + std::to_string(b), d, config_.heads, d / 2, hidden);
  }
  decoder_final_attn_ = Attention(params_, "decoder.final_attn", d, config_.heads, d / 2);
  decoder_final_norm_ = LayerNorm(params_, "decoder.final_norm", d);
  hyper1_ = Linear(params_, "decoder.hyper1", d, d);
  hyper2_ = Linear(params_, "decoder.hyper2", d, pd);
  const int mid = std::max(4, d / 4);
  up1_k_ = params_.normal("decoder.up1.kernel", {sz(d), sz(mid), 2, 2}, 1.0 / std::sqrt(static_cast<double>(d)));
  up1_b_ = params_.constant("decoder.up1.bias", {sz(mid)}, 0.0);
  up2_k_ = params_.normal("decoder.up2.kernel", {sz(mid), sz(pd), 2, 2}, 1.0 / std::sqrt(static_cast<double>(mid)));
  up2_b_ = params_.constant("decoder.up2.bias", {sz(pd)}, 0.0);

  class_tokens_ = params_.normal("classifier.class_tokens", {sz(fg), sz(d)}, 1.0);
  classifier_block_ = AttnConvBlock(params_, "classifier.block", d, config_.heads, hidden, g, g, false);
  probe_w_ = params_.normal("classifier.probe.weight", {sz(fg), sz(d)}, 1.0 / std::sqrt(static_cast<double>(d)));
  probe_b_ = params_.constant("classifier.probe.bias", {sz(fg)}, 0.0);
}

void Model::check_class(int class_id) const {
  if (class_id < 1 || class_id >= config_.num_classes) {
    throw std::out_of_range("unknown class id " + std::to_string(class_id));
  }
}

Tensor Model::image_tensor(const img::RgbImage& image) const {
  const int s = config_.image_size;
  if (image.width != s || image.height != s) {
    throw std::invalid_argument("model expects a " + std::to_string(s) + "x" + std::to_string(s) + " image, got " +
                                std::to_string(image.width) + "x" + std::to_string(image.height));
  }
  std::vector<double> v(sz(3 * s * s));
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < s; ++y)
      for (int x = 0; x < s; ++x) v[sz((c * s + y) * s + x)] = (image.at(x, y, c) / 255.0 - 0.5) / 0.25;
  return Tensor::from({3, sz(s), sz(s)}, std::move(v));
}

Tensor Model::patch_embeddings(const img::RgbImage& image) const {
  const auto chw = image_tensor(image);
  const int s = config_.image_size, g = config_.grid, p = config_.patch();
  std::vector<double> v(sz(g * g * 3 * p * p));
  const auto src = chw.data();
  for (int r = 0; r < g; ++r)
    for (int c = 0; c < g; ++c) {
      double* out = v.data() + sz((r * g + c) * 3 * p * p);
      for (int ch = 0; ch < 3; ++ch)
        for (int dy = 0; dy < p; ++dy)
          for (int dx = 0; dx < p; ++dx) *out++ = src[sz((ch * s + r * p + dy) * s + c * p + dx)];
    }
  return ad::add(patch_embed_(Tensor::from({sz(g * g), sz(3 * p * p)}, std::move(v))), positional_);
}

EncodedImage Model::encode(const img::RgbImage& image) const {
  auto tokens = patch_embeddings(image);
  for (const auto& b : encoder_) {
    const auto h = b.norm1(tokens);
    tokens = ad::add(tokens, b.attn(h, h, h));
    tokens = ad::add(tokens, b.mlp(b.norm2(tokens)));
  }
  EncodedImage enc;
  enc.features = encoder_norm_(tokens);
  const auto chw = image_tensor(image);
  const auto hidden = ad::gelu(ad::conv2d_3x3(chw, pixel_conv1_k_, pixel_conv1_b_));
  const auto px = ad::conv2d_3x3(hidden, pixel_conv2_k_, pixel_conv2_b_);
  const int s = config_.image_size;
  enc.pixels = ad::reshape(px, {sz(config_.pixel_dim()), sz(s * s)});
  return enc;
}

std::vector<Tensor> Model::prompt_weights(const Tensor& features, std::span<const int> class_ids) const {
  if (class_ids.empty()) return {};
  const auto n = sz(config_.points_per_class);
  std::vector<Tensor> queries;
  for (int c : class_ids) {
    check_class(c);
    const std::vector<std::size_t> rows(n, sz(c - 1));
    queries.push_back(ad::add(ad::gather_rows(class_embed_, rows), point_embed_));
  }
  auto q = ad::concat_rows(queries);
  auto image = features;
  for (const auto& b : prompter_) b.forward(q, image);
  const auto refreshed = ad::add(image, prompter_final_conv_(image));
  const double s = 1.0 / std::sqrt(static_cast<double>(config_.dim));
  const auto w = ad::softmax_lastdim(ad::scale(ad::matmul_bt(prompter_query_(q), prompter_key_(refreshed)), s));
  std::vector<Tensor> out;
  for (std::size_t k = 0; k < class_ids.size(); ++k) out.push_back(ad::slice_rows(w, k * n, (k + 1) * n));
  return out;
}

Tensor Model::decode(const EncodedImage& enc, const DecoderPrompts& prompts) const {
  std::vector<Tensor> rows{mask_token_,
                           ad::add_bias(canonical_rows(prompts.foreground), row_of(polarity_, 0))};
  if (prompts.background.defined()) {
    rows.push_back(ad::add_bias(canonical_rows(prompts.background), row_of(polarity_, 1)));
  }
  const auto token_pe = ad::concat_rows(rows);
  auto tokens = token_pe;
  auto image = enc.features;
  for (const auto& b : decoder_) b.forward(tokens, image, token_pe, positional_);
  {
    const auto q = ad::add(tokens, token_pe);
    const auto k = ad::add(image, positional_);
    tokens = decoder_final_norm_(ad::add(tokens, decoder_final_attn_(q, k, image)));
  }
  const auto hyper = hyper2_(ad::gelu(hyper1_(ad::slice_rows(tokens, 0, 1))));

  const auto d = sz(config_.dim), g = sz(config_.grid);
  auto grid = ad::reshape(ad::transpose(image), {d, g, g});
  grid = ad::gelu(ad::conv_transpose2x2(grid, up1_k_, up1_b_));
  grid = ad::gelu(ad::conv_transpose2x2(grid, up2_k_, up2_b_));
  while (grid.dim(1) < sz(config_.image_size)) grid = ad::upsample_bilinear2x(grid);
  const auto pd = sz(config_.pixel_dim()), hw = sz(config_.image_size * config_.image_size);
  const auto dense = ad::gelu(ad::add(ad::reshape(grid, {pd, hw}), enc.pixels));
  return ad::matmul(hyper, dense);
}

Tensor Model::classify_logits(const Tensor& features) const {
  auto tokens = class_tokens_;
  auto image = features;
  classifier_block_.forward(tokens, image);
  return ad::add(ad::sum_lastdim(ad::mul(tokens, probe_w_)), probe_b_);
}

Tensor Model::classify(const Tensor& features) const { return ad::sigmoid(classify_logits(features)); }

}  // namespace aisam::model
