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

#include <optional>
#include <string>
#include <vector>

#include "model/model.hpp"

namespace aisam::model {

/// A decoder prompt located at a grid cell, reported back to callers.
struct PromptPoint {
  int class_id = 0;
  int cell = 0;
  int x = 0;
  int y = 0;
  bool positive = true;
  bool user = false;
};

/// Decoder inputs for one class.
struct ClassPrompts {
  int class_id = 0;
  ad::Tensor foreground;  // [n, dim]
  ad::Tensor background;  // [m, dim] or undefined
};

struct ClassOutput {
  int class_id = 0;
  std::vector<double> probability;  // sigmoid of the logits, H*W
  img::GrayImage mask;              // 0/1
};

struct SegmentationResult {
  std::vector<int> classes;
  std::vector<double> class_probs;  // classifier output per foreground class (index = class id - 1)
  std::vector<ClassOutput> outputs;
  img::GrayImage labels;            // combined label map
  std::vector<PromptPoint> points;
  std::vector<ad::Tensor> weights;  // W per selected class, after any conversion
};

struct SegmentOptions {
  std::optional<std::vector<int>> classes;  // explicit set bypasses the classifier
  double threshold = 0.5;
  bool one_hot = false;  // decode with argmax one-hot W rows
};

/// Index of the largest entry in each row; ties go to the smallest index.
std::vector<int> argmax_cells(const ad::Tensor& weights);
/// W with every row replaced by the one-hot of its argmax.
ad::Tensor one_hot_weights(const ad::Tensor& weights);

/// Classes to segment: the explicit set, sorted and deduplicated, or every
/// class whose probability reaches the threshold.
std::vector<int> select_classes(const Model& model, std::span<const double> class_probs, const SegmentOptions& options);

/// Prompts for each class: own points as foreground, every other class's
/// points as background.
std::vector<ClassPrompts> cross_class_prompts(std::span<const int> classes, const std::vector<ad::Tensor>& points);

/// Decodes every prompt set and fills outputs and the label map.
void decode_into(const Model& model, const EncodedImage& enc, const std::vector<ClassPrompts>& prompts,
                 SegmentationResult& result);

/// Points at the argmax cell of every W row.
std::vector<PromptPoint> auto_points(const Model& model, int class_id, const ad::Tensor& weights);

SegmentationResult segment_auto(const Model& model, const EncodedImage& enc, const SegmentOptions& options = {});
SegmentationResult segment_auto(const Model& model, const img::RgbImage& image, const SegmentOptions& options = {});

}  // namespace aisam::model
