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

#include "interactive/interactive.hpp"

#include <algorithm>
#include <set>
#include <string>

namespace aisam::interactive {

using ad::Tensor;

PromptState build_state(const std::vector<UserEdit>& edits, int width, int height, int num_classes) {
  PromptState state;
  for (std::size_t i = 0; i < edits.size(); ++i) {
    const auto& e = edits[i];
    const auto where = "edit " + std::to_string(i) + ": ";
    if (e.class_id < 1 || e.class_id >= num_classes) throw EditError(where + "unknown class id " + std::to_string(e.class_id));
    auto& c = state.classes[e.class_id];
    switch (e.kind) {
      case EditKind::point:
        if (e.x < 0 || e.y < 0 || e.x >= width || e.y >= height) {
          throw EditError(where + "point (" + std::to_string(e.x) + ", " + std::to_string(e.y) + ") outside the image");
        }
        c.points.push_back(e);
        break;
      case EditKind::box:
        if (e.box.x0 < 0 || e.box.y0 < 0 || e.box.x1 >= width || e.box.y1 >= height || e.box.x0 > e.box.x1 ||
            e.box.y0 > e.box.y1) {
          throw EditError(where + "box outside the image or inverted");
        }
        c.box = e.box;
        break;
      case EditKind::class_toggle:
        c.toggled = !c.toggled;
        break;
    }
  }
  return state;
}

Tensor apply_box_constraint(const Tensor& weights, const PixelBox& box, const GridGeometry& geom) {
  const auto cells = static_cast<std::size_t>(geom.cells());
  if (weights.numel() % cells != 0) throw ad::ShapeError("apply_box_constraint: weights do not match the grid");
  std::vector<bool> inside(cells);
  std::size_t n_inside = 0;
  for (std::size_t c = 0; c < cells; ++c) n_inside += inside[c] = geom.center_in_box(static_cast<int>(c), box);
  if (n_inside == 0) throw EditError("box contains no grid cell centre");
  const auto rows = weights.numel() / cells;
  const auto src = weights.data();
  std::vector<double> out(weights.numel(), 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    double mass = 0;
    for (std::size_t c = 0; c < cells; ++c)
      if (inside[c]) mass += src[r * cells + c];
    for (std::size_t c = 0; c < cells; ++c) {
      if (!inside[c]) continue;
      out[r * cells + c] = mass > 0 ? src[r * cells + c] / mass : 1.0 / static_cast<double>(n_inside);
    }
  }
  return Tensor::from(weights.shape(), std::move(out));
}

std::vector<model::PromptPoint> to_one_hot_points(const Tensor& weights, const GridGeometry& geom, int class_id) {
  std::vector<model::PromptPoint> out;
  for (int cell : model::argmax_cells(weights)) {
    const auto [x, y] = geom.cell_center_pixel(cell);
    out.push_back({class_id, cell, x, y, true, false});
  }
  return out;
}

namespace {

// One-hot positional rows for the distinct cells of the user's points with
// the given polarity.
Tensor user_rows(const ClassEdits* edits, bool positive, const Tensor& positional, const GridGeometry& geom) {
  if (!edits) return {};
  std::vector<std::size_t> cells;
  for (const auto& p : edits->points) {
    if (p.positive != positive) continue;
    const auto cell = static_cast<std::size_t>(geom.cell_of_pixel(p.x, p.y));
    if (std::find(cells.begin(), cells.end(), cell) == cells.end()) cells.push_back(cell);
  }
  if (cells.empty()) return {};
  return ad::gather_rows(positional, cells);
}

Tensor join(std::vector<Tensor> parts) {
  std::erase_if(parts, [](const Tensor& t) { return !t.defined(); });
  if (parts.empty()) return {};
  return parts.size() == 1 ? parts[0] : ad::concat_rows(parts);
}

const ClassEdits* edits_for(const PromptState& state, int class_id) {
  const auto it = state.classes.find(class_id);
  return it == state.classes.end() ? nullptr : &it->second;
}

}  // namespace

std::vector<model::ClassPrompts> merge_user_points(const PromptState& state, std::span<const int> classes,
                                                   const std::vector<Tensor>& weights, const Tensor& positional,
                                                   const GridGeometry& geom) {
  std::vector<Tensor> generated;
  for (const auto& w : weights) generated.push_back(model::generalized_points(w, positional));
  std::vector<model::ClassPrompts> out;
  for (std::size_t k = 0; k < classes.size(); ++k) {
    const auto* edits = edits_for(state, classes[k]);
    model::ClassPrompts p;
    p.class_id = classes[k];
    p.foreground = join({generated[k], user_rows(edits, true, positional, geom)});
    std::vector<Tensor> bg{user_rows(edits, false, positional, geom)};
    for (std::size_t j = 0; j < classes.size(); ++j)
      if (j != k) bg.push_back(generated[j]);
    p.background = join(std::move(bg));
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<int> refine_classes(const model::Model& model, std::span<const double> class_probs,
                                const model::SegmentOptions& options, const PromptState& state) {
  const auto base = model::select_classes(model, class_probs, options);
  std::set<int> chosen(base.begin(), base.end());
  for (const auto& [c, e] : state.classes) {
    const bool wants = e.box.has_value() ||
                       std::any_of(e.points.begin(), e.points.end(), [](const UserEdit& p) { return p.positive; });
    if (wants) chosen.insert(c);
    if (e.toggled) {
      if (chosen.contains(c)) chosen.erase(c);
      else chosen.insert(c);
    }
  }
  return {chosen.begin(), chosen.end()};
}

model::SegmentationResult refine(const model::Model& model, const model::EncodedImage& enc, const PromptState& state,
                                 const model::SegmentOptions& options) {
  const auto geom = model.config().geometry();
  model::SegmentationResult result;
  const auto probs = model.classify(enc.features);
  result.class_probs.assign(probs.data().begin(), probs.data().end());
  result.classes = refine_classes(model, result.class_probs, options, state);
  auto weights = model.prompt_weights(enc.features, result.classes);
  for (std::size_t k = 0; k < weights.size(); ++k) {
    const auto* edits = edits_for(state, result.classes[k]);
    if (edits && edits->box) weights[k] = apply_box_constraint(weights[k], *edits->box, geom);
    if (options.one_hot) weights[k] = model::one_hot_weights(weights[k]);
    const auto pts = to_one_hot_points(weights[k], geom, result.classes[k]);
    result.points.insert(result.points.end(), pts.begin(), pts.end());
    if (edits) {
      for (const auto& p : edits->points) {
        result.points.push_back({p.class_id, geom.cell_of_pixel(p.x, p.y), p.x, p.y, p.positive, true});
      }
    }
  }
  result.weights = weights;
  model::decode_into(model, enc, merge_user_points(state, result.classes, weights, model.positional(), geom), result);
  return result;
}

}  // namespace aisam::interactive
