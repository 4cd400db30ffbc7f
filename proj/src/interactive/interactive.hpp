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

#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "model/geometry.hpp"
#include "model/segment.hpp"

namespace aisam::interactive {

class EditError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class EditKind { point, box, class_toggle };

struct UserEdit {
  EditKind kind = EditKind::point;
  int class_id = 0;
  int x = 0, y = 0;        // point
  bool positive = true;    // point
  PixelBox box;            // box
};

struct ClassEdits {
  std::vector<UserEdit> points;
  std::optional<PixelBox> box;
  bool toggled = false;
};

/// User edits grouped per class. Points accumulate; a later box replaces an
/// earlier one; a class toggle flips the class in or out of the selection.
struct PromptState {
  std::map<int, ClassEdits> classes;

  bool empty() const { return classes.empty(); }
};

/// Validates edits against the image and class range, then groups them.
/// Throws EditError on out-of-range coordinates or class ids.
PromptState build_state(const std::vector<UserEdit>& edits, int width, int height, int num_classes);

/// Zeroes every weight whose cell centre lies outside the box and renormalizes
/// each row; a row with no in-box mass becomes uniform over in-box cells.
/// Throws EditError when no cell centre is inside the box.
ad::Tensor apply_box_constraint(const ad::Tensor& weights, const PixelBox& box, const GridGeometry& geom);

/// Argmax cell of each row (ties to the smallest index) at its centre pixel.
std::vector<model::PromptPoint> to_one_hot_points(const ad::Tensor& weights, const GridGeometry& geom, int class_id);

/// Decoder prompt sets for the selected classes. `weights[k]` is the W of
/// `classes[k]` with any box constraint already applied.
std::vector<model::ClassPrompts> merge_user_points(const PromptState& state, std::span<const int> classes,
                                                   const std::vector<ad::Tensor>& weights, const ad::Tensor& positional,
                                                   const GridGeometry& geom);

/// Classes to decode: the automatic or explicit selection, plus classes that
/// carry positive points or a box, with toggled classes flipped.
std::vector<int> refine_classes(const model::Model& model, std::span<const double> class_probs,
                                const model::SegmentOptions& options, const PromptState& state);

/// Prompter, constraints, merge and decode. With an empty state the result
/// equals segment_auto.
model::SegmentationResult refine(const model::Model& model, const model::EncodedImage& enc, const PromptState& state,
                                 const model::SegmentOptions& options = {});

}  // namespace aisam::interactive
