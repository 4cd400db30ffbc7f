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

#include "model/segment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace aisam::model {

using ad::Tensor;

std::vector<int> argmax_cells(const Tensor& weights) {
  const auto rows = weights.rank() == 1 ? 1 : weights.dim(0);
  const auto cols = weights.numel() / rows;
  const auto v = weights.data();
  std::vector<int> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < cols; ++c)
      if (v[r * cols + c] > v[r * cols + best]) best = c;
    out[r] = static_cast<int>(best);
  }
  return out;
}

Tensor one_hot_weights(const Tensor& weights) {
  const auto cells = argmax_cells(weights);
  const auto cols = weights.numel() / cells.size();
  std::vector<double> v(weights.numel(), 0.0);
  for (std::size_t r = 0; r < cells.size(); ++r) v[r * cols + static_cast<std::size_t>(cells[r])] = 1.0;
  return Tensor::from(weights.shape(), std::move(v));
}

std::vector<int> select_classes(const Model& model, std::span<const double> class_probs, const SegmentOptions& options) {
  std::vector<int> out;
  if (options.classes) {
    out = *options.classes;
    for (int c : out) {
      if (c < 1 || c >= model.config().num_classes) throw std::out_of_range("unknown class id " + std::to_string(c));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
  for (std::size_t k = 0; k < class_probs.size(); ++k)
    if (class_probs[k] >= options.threshold) out.push_back(static_cast<int>(k) + 1);
  return out;
}

std::vector<ClassPrompts> cross_class_prompts(std::span<const int> classes, const std::vector<Tensor>& points) {
  std::vector<ClassPrompts> out;
  for (std::size_t k = 0; k < classes.size(); ++k) {
    ClassPrompts p{classes[k], points[k], {}};
    std::vector<Tensor> others;
    for (std::size_t j = 0; j < classes.size(); ++j)
      if (j != k) others.push_back(points[j]);
    if (!others.empty()) p.background = ad::concat_rows(others);
    out.push_back(std::move(p));
  }
  return out;
}

void decode_into(const Model& model, const EncodedImage& enc, const std::vector<ClassPrompts>& prompts,
                 SegmentationResult& result) {
  const int s = model.config().image_size;
  const auto hw = static_cast<std::size_t>(s * s);
  result.outputs.clear();
  for (const auto& p : prompts) {
    const auto logit_tensor = model.decode(enc, {p.foreground, p.background});
    const auto logits = logit_tensor.data();
    ClassOutput out;
    out.class_id = p.class_id;
    out.probability.resize(hw);
    out.mask = img::GrayImage(s, s);
    for (std::size_t i = 0; i < hw; ++i) {
      out.probability[i] = 1.0 / (1.0 + std::exp(-logits[i]));
      out.mask.pixels[i] = out.probability[i] > 0.5 ? 1 : 0;
    }
    result.outputs.push_back(std::move(out));
  }
  // Highest probability wins; a pixel stays background unless some class
  // passes 0.5, and the lower class id wins exact ties.
  result.labels = img::GrayImage(s, s);
  for (std::size_t i = 0; i < hw; ++i) {
    double best = 0.5;
    for (const auto& o : result.outputs) {
      if (o.probability[i] > best) {
        best = o.probability[i];
        result.labels.pixels[i] = static_cast<std::uint8_t>(o.class_id);
      }
    }
  }
}

std::vector<PromptPoint> auto_points(const Model& model, int class_id, const Tensor& weights) {
  const auto geom = model.config().geometry();
  std::vector<PromptPoint> out;
  for (int cell : argmax_cells(weights)) {
    const auto [x, y] = geom.cell_center_pixel(cell);
    out.push_back({class_id, cell, x, y, true, false});
  }
  return out;
}

SegmentationResult segment_auto(const Model& model, const EncodedImage& enc, const SegmentOptions& options) {
  SegmentationResult result;
  const auto probs = model.classify(enc.features);
  result.class_probs.assign(probs.data().begin(), probs.data().end());
  result.classes = select_classes(model, result.class_probs, options);
  auto weights = model.prompt_weights(enc.features, result.classes);
  std::vector<Tensor> points;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (options.one_hot) weights[k] = one_hot_weights(weights[k]);
    points.push_back(generalized_points(weights[k], model.positional()));
    const auto pts = auto_points(model, result.classes[k], weights[k]);
    result.points.insert(result.points.end(), pts.begin(), pts.end());
  }
  result.weights = weights;
  decode_into(model, enc, cross_class_prompts(result.classes, points), result);
  return result;
}

SegmentationResult segment_auto(const Model& model, const img::RgbImage& image, const SegmentOptions& options) {
  return segment_auto(model, model.encode(image), options);
}

}  // namespace aisam::model
