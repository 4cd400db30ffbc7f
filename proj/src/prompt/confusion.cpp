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

#include "prompt/confusion.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "imaging/rng.hpp"

namespace aisam::prompt {

namespace {

GridGeometry geometry_of(const FeatureGrid& f) { return f.geom; }

void check_mask_matches(const FeatureGrid& f, const img::GrayImage& mask) {
  if (mask.width != f.geom.image_w || mask.height != f.geom.image_h) {
    throw std::invalid_argument("mask size does not match feature grid geometry");
  }
}

double max_of(std::span<const double> v) { return *std::max_element(v.begin(), v.end()); }

}  // namespace

std::vector<GridPoint> sample_point_prompts(const img::GrayImage& mask, int class_id, int n, std::uint64_t seed) {
  std::vector<int> pixels;
  for (int i = 0; i < static_cast<int>(mask.pixels.size()); ++i)
    if (mask.pixels[static_cast<std::size_t>(i)] == class_id) pixels.push_back(i);
  if (pixels.empty()) throw std::invalid_argument("sample_point_prompts: class " + std::to_string(class_id) + " is empty");
  if (n < 0) throw std::invalid_argument("sample_point_prompts: negative count");
  Rng rng(seed);
  std::vector<int> chosen;
  if (static_cast<int>(pixels.size()) >= n) {
    // Partial Fisher-Yates.
    for (int k = 0; k < n; ++k) {
      const int j = k + static_cast<int>(rng.next() % (pixels.size() - static_cast<std::size_t>(k)));
      std::swap(pixels[static_cast<std::size_t>(k)], pixels[static_cast<std::size_t>(j)]);
      chosen.push_back(pixels[static_cast<std::size_t>(k)]);
    }
  } else {
    for (int k = 0; k < n; ++k) chosen.push_back(pixels[rng.next() % pixels.size()]);
  }
  std::vector<GridPoint> out;
  for (int idx : chosen) out.push_back({idx % mask.width, idx / mask.width, class_id, true});
  return out;
}

BoxPrompt tightest_box(const img::GrayImage& mask, int class_id) {
  PixelBox b{mask.width, mask.height, -1, -1};
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x) {
      if (mask.at(x, y) != class_id) continue;
      b.x0 = std::min(b.x0, x);
      b.y0 = std::min(b.y0, y);
      b.x1 = std::max(b.x1, x);
      b.y1 = std::max(b.y1, y);
    }
  if (b.x1 < 0) throw std::invalid_argument("tightest_box: class " + std::to_string(class_id) + " is empty");
  return {b, class_id};
}

std::vector<double> embed_point(const GridPoint& p, const FeatureGrid& f) {
  if (!f.geom.contains_pixel(p.x, p.y)) throw std::out_of_range("embed_point: pixel outside the image");
  const auto r = f.row(f.geom.cell_of_pixel(p.x, p.y));
  return {r.begin(), r.end()};
}

std::vector<double> embed_box(const BoxPrompt& b, const FeatureGrid& f) {
  std::vector<double> acc(static_cast<std::size_t>(f.dim), 0.0);
  int count = 0;
  for (int c = 0; c < f.geom.cells(); ++c) {
    if (!f.geom.center_in_box(c, b.box)) continue;
    const auto r = f.row(c);
    for (int d = 0; d < f.dim; ++d) acc[static_cast<std::size_t>(d)] += r[static_cast<std::size_t>(d)];
    ++count;
  }
  if (count == 0) throw std::invalid_argument("embed_box: box contains no patch centre");
  for (auto& v : acc) v /= count;
  return acc;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("cosine: dimension mismatch");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw std::domain_error("cosine: zero-norm feature vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

ClassMatrix compute_pcm(const FeatureGrid& features, const img::GrayImage& gt_mask,
                        const std::vector<PromptFeatures>& prompts, const SimilarityReduce& reduce) {
  check_mask_matches(features, gt_mask);
  const auto geom = geometry_of(features);
  const auto cells = cell_classes(gt_mask, geom);
  const int n = static_cast<int>(prompts.size());
  ClassMatrix m(n);
  std::vector<double> sims;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const auto& pj = prompts[static_cast<std::size_t>(j)];
      if (pj.empty()) continue;
      double total = 0;
      int patches = 0;
      for (int c = 0; c < geom.cells(); ++c) {
        if (cells[static_cast<std::size_t>(c)] != i) continue;
        sims.clear();
        for (const auto& p : pj) sims.push_back(cosine(features.row(c), p));
        total += reduce ? reduce(sims) : max_of(sims);
        ++patches;
      }
      if (patches > 0) m.set(i, j, total / patches);
    }
  }
  return m;
}

ClassMatrix compute_ocm(const std::vector<img::GrayImage>& pred, const img::GrayImage& gt, int num_classes) {
  if (static_cast<int>(pred.size()) != num_classes) throw std::invalid_argument("compute_ocm: need one mask per class");
  for (const auto& p : pred) {
    if (p.width != gt.width || p.height != gt.height) throw std::invalid_argument("compute_ocm: shape mismatch");
  }
  ClassMatrix m(num_classes);
  std::vector<long> gt_count(static_cast<std::size_t>(num_classes), 0);
  std::vector<long> hits(static_cast<std::size_t>(num_classes) * num_classes, 0);
  for (std::size_t px = 0; px < gt.pixels.size(); ++px) {
    const int i = gt.pixels[px];
    if (i >= num_classes) throw std::invalid_argument("compute_ocm: gt value out of range");
    ++gt_count[static_cast<std::size_t>(i)];
    for (int j = 0; j < num_classes; ++j)
      if (pred[static_cast<std::size_t>(j)].pixels[px] != 0) ++hits[static_cast<std::size_t>(i) * num_classes + j];
  }
  for (int i = 0; i < num_classes; ++i) {
    if (gt_count[static_cast<std::size_t>(i)] == 0) continue;
    for (int j = 0; j < num_classes; ++j) {
      m.set(i, j, static_cast<double>(hits[static_cast<std::size_t>(i) * num_classes + j]) /
                      static_cast<double>(gt_count[static_cast<std::size_t>(i)]));
    }
  }
  return m;
}

MonotonicityCheck check_added_prompt(const FeatureGrid& features, const img::GrayImage& gt_mask, int class_id,
                                     const std::vector<PromptFeatures>& base_prompts,
                                     std::span<const double> extra_prompt, const SimilarityReduce& reduce) {
  MonotonicityCheck out;
  out.before = compute_pcm(features, gt_mask, base_prompts, reduce);
  auto extended = base_prompts;
  extended.at(static_cast<std::size_t>(class_id)).emplace_back(extra_prompt.begin(), extra_prompt.end());
  out.after = compute_pcm(features, gt_mask, extended, reduce);
  for (int i = 0; i < out.before.n; ++i) {
    if (!out.before.defined(i, class_id)) continue;
    if (out.after.at(i, class_id) < out.before.at(i, class_id) - 1e-12) out.nondecreasing = false;
  }
  return out;
}

void MatrixAverager::add(const ClassMatrix& m) {
  if (m.n != n_) throw std::invalid_argument("MatrixAverager: size mismatch");
  for (std::size_t k = 0; k < sum_.size(); ++k) {
    if (!m.valid[k]) continue;
    sum_[k] += m.value[k];
    ++count_[k];
  }
}

ClassMatrix MatrixAverager::mean() const {
  ClassMatrix m(n_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) {
      const auto k = static_cast<std::size_t>(i) * n_ + j;
      if (count_[k] > 0) m.set(i, j, sum_[k] / count_[k]);
    }
  return m;
}

void write_confusion_csv(std::ostream& out, const std::vector<std::string>& names, const ClassMatrix& pcm,
                         const ClassMatrix& ocm) {
  auto block = [&](const char* label, const ClassMatrix& m) {
    out << label;
    for (const auto& n : names) out << ',' << n;
    out << '\n';
    for (int i = 0; i < m.n; ++i) {
      out << names.at(static_cast<std::size_t>(i));
      for (int j = 0; j < m.n; ++j) {
        out << ',';
        if (m.defined(i, j)) out << std::fixed << std::setprecision(6) << m.at(i, j);
      }
      out << '\n';
    }
  };
  block("PCM", pcm);
  out << '\n';
  block("OCM", ocm);
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("pearson: need two equal-length series");
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(a.size());
  mb /= static_cast<double>(b.size());
  double cov = 0, va = 0, vb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cov += (a[i] - ma) * (b[i] - mb);
    va += (a[i] - ma) * (a[i] - ma);
    vb += (b[i] - mb) * (b[i] - mb);
  }
  if (va == 0 || vb == 0) return 0.0;
  return cov / std::sqrt(va * vb);
}

}  // namespace aisam::prompt
