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

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "autodiff/ops.hpp"
#include "imaging/netpbm.hpp"
#include "model/geometry.hpp"
#include "model/layers.hpp"
#include "model/params.hpp"

namespace aisam::model {

struct ModelConfig {
  int image_size = 64;
  int grid = 8;
  int dim = 64;
  int heads = 4;
  int encoder_blocks = 2;
  int prompter_blocks = 2;
  int decoder_blocks = 2;
  int mlp_ratio = 2;
  int num_classes = 4;  // including background
  int points_per_class = 4;
  std::uint64_t init_seed = 0;

  int foreground_classes() const { return num_classes - 1; }
  int cells() const { return grid * grid; }
  int patch() const { return image_size / grid; }
  int pixel_dim() const { return std::max(4, dim / 8); }
  GridGeometry geometry() const { return {image_size, image_size, grid, grid}; }
  void validate() const;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

/// Fixed sinusoidal encodings, one row per grid cell. Channel pairs alternate
/// between the row and column axis; each axis uses frequencies spaced
/// geometrically from 1 to its grid size.
ad::Tensor positional_grid(int grid_h, int grid_w, int dim);

/// Encoder output for one image.
struct EncodedImage {
  ad::Tensor features;  // X, [cells, dim]
  ad::Tensor pixels;    // high-resolution skip features, [pixel_dim, H*W]
};

/// Generalized points Wᵀ P for a [N, cells] weight block.
ad::Tensor generalized_points(const ad::Tensor& weights, const ad::Tensor& positional);
/// Point features Wᵀ (P + X).
ad::Tensor point_features(const ad::Tensor& weights, const ad::Tensor& positional, const ad::Tensor& features);

/// Decoder prompt set for one class: foreground rows and (optional)
/// background rows in positional-embedding space.
struct DecoderPrompts {
  ad::Tensor foreground;  // [n, dim]
  ad::Tensor background;  // [m, dim] or undefined
};

class Model {
 public:
  explicit Model(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  const ad::Tensor& positional() const { return positional_; }

  /// Normalized image as [3, H, W].
  ad::Tensor image_tensor(const img::RgbImage& image) const;
  EncodedImage encode(const img::RgbImage& image) const;
  /// Encoder with the transformer blocks skipped (patch embedding only).
  ad::Tensor patch_embeddings(const img::RgbImage& image) const;

  /// One [points_per_class, cells] row-stochastic block per requested class.
  std::vector<ad::Tensor> prompt_weights(const ad::Tensor& features, std::span<const int> class_ids) const;

  /// Mask logits for one class, [1, H*W]. Prompt rows are put in a canonical
  /// order first, so the result depends only on the prompt sets.
  ad::Tensor decode(const EncodedImage& enc, const DecoderPrompts& prompts) const;

  /// Per-class presence probabilities for the foreground classes, [fg].
  ad::Tensor classify(const ad::Tensor& features) const;
  ad::Tensor classify_logits(const ad::Tensor& features) const;

 private:
  void check_class(int class_id) const;

  ModelConfig config_;
  ParamStore params_;
  ad::Tensor positional_;

  // encoder
  Linear patch_embed_;
  struct EncoderBlock {
    LayerNorm norm1, norm2;
    Attention attn;
    Mlp mlp;
  };
  std::vector<EncoderBlock> encoder_;
  LayerNorm encoder_norm_;
  ad::Tensor pixel_conv1_k_, pixel_conv1_b_, pixel_conv2_k_, pixel_conv2_b_;

  // prompter
  ad::Tensor class_embed_;  // [fg, dim]
  ad::Tensor point_embed_;  // [points, dim]
  std::vector<AttnConvBlock> prompter_;
  TokenConv prompter_final_conv_;
  Linear prompter_query_, prompter_key_;

  // decoder
  ad::Tensor mask_token_;  // [1, dim]
  ad::Tensor polarity_;    // [2, dim]: foreground, background
  std::vector<TwoWayBlock> decoder_;
  Attention decoder_final_attn_;
  LayerNorm decoder_final_norm_;
  Linear hyper1_, hyper2_;
  ad::Tensor up1_k_, up1_b_, up2_k_, up2_b_;

  // classifier
  ad::Tensor class_tokens_;  // [fg, dim]
  AttnConvBlock classifier_block_;
  ad::Tensor probe_w_, probe_b_;
};

}  // namespace aisam::model
