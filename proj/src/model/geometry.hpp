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
#include <stdexcept>
#include <utility>
#include <vector>

#include "imaging/netpbm.hpp"

namespace aisam {

/// Inclusive pixel bounds.
struct PixelBox {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  bool operator==(const PixelBox&) const = default;
};

/// Maps an image onto a grid of patches. Patch extents may be fractional;
/// all containment tests use exact integer arithmetic on doubled coordinates.
struct GridGeometry {
  int image_w = 64;
  int image_h = 64;
  int grid_w = 8;
  int grid_h = 8;

  int cells() const { return grid_w * grid_h; }
  int cell(int row, int col) const { return row * grid_w + col; }

  /// Patch whose centre is nearest to the pixel centre; ties go to the lower index.
  int cell_of_pixel(int x, int y) const;
  /// Pixel holding the patch centre (rounded down).
  std::pair<int, int> cell_center_pixel(int cell) const;
  /// True when the patch centre lies inside the box's pixel area [x0, x1+1) x [y0, y1+1).
  bool center_in_box(int cell, const PixelBox& box) const;
  bool contains_pixel(int x, int y) const { return x >= 0 && y >= 0 && x < image_w && y < image_h; }
};

/// Class of every patch by plurality pixel vote; ties resolve to background.
std::vector<int> cell_classes(const img::GrayImage& mask, const GridGeometry& geom);

/// 1 where a patch belongs to `class_id`, else 0.
std::vector<double> class_indicator(std::span<const int> cell_classes, int class_id);

}  // namespace aisam
