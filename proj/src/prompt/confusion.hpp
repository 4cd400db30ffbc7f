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
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "imaging/netpbm.hpp"
#include "model/geometry.hpp"

// Prompt-quality analysis: prompt samplers, prompt-feature embedding, and the
// prompt/output confusion matrices (PCM/OCM).
namespace aisam::prompt {

struct GridPoint {
  int x = 0;  // column
  int y = 0;  // row
  int class_id = 0;
  bool positive = true;
  bool operator==(const GridPoint&) const = default;
};

struct BoxPrompt {
  PixelBox box;
  int class_id = 0;
};

/// Patch features X, one row of `dim` values per grid cell.
struct FeatureGrid {
  GridGeometry geom;
  int dim = 0;
  std::vector<double> values;

  std::span<const double> row(int cell) const {
    return {values.data() + static_cast<std::size_t>(cell) * dim, static_cast<std::size_t>(dim)};
  }
};

/// Square matrix indexed [row][col] with an explicit validity flag per entry.
struct ClassMatrix {
  int n = 0;
  std::vector<double> value;
  std::vector<bool> valid;

  explicit ClassMatrix(int size = 0)
      : n(size), value(static_cast<std::size_t>(size) * size, 0.0), valid(static_cast<std::size_t>(size) * size, false) {}
  double at(int i, int j) const { return value[static_cast<std::size_t>(i) * n + j]; }
  bool defined(int i, int j) const { return valid[static_cast<std::size_t>(i) * n + j]; }
  void set(int i, int j, double v) {
    value[static_cast<std::size_t>(i) * n + j] = v;
    valid[static_cast<std::size_t>(i) * n + j] = true;
  }
};

struct ConfusionMatrices {
  ClassMatrix pcm;
  ClassMatrix ocm;
  std::vector<bool> class_present;
};

/// n points uniformly over the class's pixels; without replacement when the
/// class has at least n pixels.
std::vector<GridPoint> sample_point_prompts(const img::GrayImage& mask, int class_id, int n, std::uint64_t seed);

BoxPrompt tightest_box(const img::GrayImage& mask, int class_id);

std::vector<double> embed_point(const GridPoint& p, const FeatureGrid& features);
/// Mean feature of the patches whose centres lie in the box.
std::vector<double> embed_box(const BoxPrompt& b, const FeatureGrid& features);

using PromptFeatures = std::vector<std::vector<double>>;
/// Collapses the similarities of one patch against a class's prompts.
/// The default is the maximum.
using SimilarityReduce = std::function<double(std::span<const double>)>;

double cosine(std::span<const double> a, std::span<const double> b);

/// s_ij = mean over patches x of class i of reduce_j cos(x, p) over the
/// prompts p of class j. `prompts` is indexed by class id; rows with no
/// patches and columns with no prompts stay undefined.
ClassMatrix compute_pcm(const FeatureGrid& features, const img::GrayImage& gt_mask,
                        const std::vector<PromptFeatures>& prompts, const SimilarityReduce& reduce = {});

/// ocm[i][j] = |pred_j ∩ gt_i| / |gt_i|. `pred` holds one binary mask per
/// class id (nonzero = foreground); rows of absent gt classes stay undefined.
ClassMatrix compute_ocm(const std::vector<img::GrayImage>& pred, const img::GrayImage& gt_mask, int num_classes);

struct MonotonicityCheck {
  ClassMatrix before;
  ClassMatrix after;
  bool nondecreasing = true;
};

/// Adds one prompt to class `class_id` and reports whether any entry of that
/// column of the PCM dropped by more than 1e-12.
MonotonicityCheck check_added_prompt(const FeatureGrid& features, const img::GrayImage& gt_mask, int class_id,
                                     const std::vector<PromptFeatures>& base_prompts,
                                     std::span<const double> extra_prompt, const SimilarityReduce& reduce = {});

/// Unweighted mean over samples of every defined entry.
class MatrixAverager {
 public:
  explicit MatrixAverager(int n) : sum_(static_cast<std::size_t>(n) * n, 0.0), count_(sum_.size(), 0), n_(n) {}
  void add(const ClassMatrix& m);
  ClassMatrix mean() const;

 private:
  std::vector<double> sum_;
  std::vector<int> count_;
  int n_;
};

/// CSV with one labelled block per matrix; undefined entries are empty cells.
void write_confusion_csv(std::ostream& out, const std::vector<std::string>& class_names, const ClassMatrix& pcm,
                         const ClassMatrix& ocm);

double pearson(std::span<const double> a, std::span<const double> b);

}  // namespace aisam::prompt
