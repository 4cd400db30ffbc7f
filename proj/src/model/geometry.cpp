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

#include "model/geometry.hpp"

#include <cstdlib>
#include <map>

namespace aisam {

namespace {

// Nearest patch along one axis. Distances are compared in units of
// 1/(2*grid) pixels so fractional patch sizes stay exact.
int nearest_patch(int pixel, int image, int grid) {
  const long target = (2L * pixel + 1) * grid;
  const int guess = static_cast<int>((static_cast<long>(pixel) * grid) / image);
  int best = -1;
  long best_d = 0;
  for (int k = std::max(0, guess - 1); k <= std::min(grid - 1, guess + 1); ++k) {
    const long d = std::labs(target - (2L * k + 1) * image);
    if (best < 0 || d < best_d) {
      best = k;
      best_d = d;
    }
  }
  return best;
}

bool center_within(int k, int image, int grid, int lo, int hi) {
  const long c = (2L * k + 1) * image;
  return 2L * grid * lo <= c && c < 2L * grid * (hi + 1);
}

}  // namespace

int GridGeometry::cell_of_pixel(int x, int y) const {
  if (!contains_pixel(x, y)) throw std::out_of_range("pixel outside the image");
  return cell(nearest_patch(y, image_h, grid_h), nearest_patch(x, image_w, grid_w));
}

std::pair<int, int> GridGeometry::cell_center_pixel(int c) const {
  const int row = c / grid_w, col = c % grid_w;
  return {static_cast<int>(((2L * col + 1) * image_w) / (2L * grid_w)),
          static_cast<int>(((2L * row + 1) * image_h) / (2L * grid_h))};
}

bool GridGeometry::center_in_box(int c, const PixelBox& box) const {
  return center_within(c % grid_w, image_w, grid_w, box.x0, box.x1) &&
         center_within(c / grid_w, image_h, grid_h, box.y0, box.y1);
}

std::vector<int> cell_classes(const img::GrayImage& mask, const GridGeometry& geom) {
  if (mask.width != geom.image_w || mask.height != geom.image_h) {
    throw std::invalid_argument("cell_classes: mask size does not match grid geometry");
  }
  std::vector<std::map<int, int>> votes(static_cast<std::size_t>(geom.cells()));
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x) ++votes[static_cast<std::size_t>(geom.cell_of_pixel(x, y))][mask.at(x, y)];
  std::vector<int> out(votes.size(), 0);
  for (std::size_t c = 0; c < votes.size(); ++c) {
    int best = 0, best_count = -1;
    bool tie = false;
    for (auto [cls, n] : votes[c]) {
      if (n > best_count) {
        best = cls;
        best_count = n;
        tie = false;
      } else if (n == best_count) {
        tie = true;
      }
    }
    out[c] = tie ? 0 : best;
  }
  return out;
}

std::vector<double> class_indicator(std::span<const int> cells, int class_id) {
  std::vector<double> out(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) out[i] = cells[i] == class_id ? 1.0 : 0.0;
  return out;
}

}  // namespace aisam
