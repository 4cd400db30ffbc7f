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

#include "prompt/analysis.hpp"

#include <algorithm>

#include "imaging/rng.hpp"

namespace aisam::prompt {

using ad::Tensor;

FeatureGrid feature_grid(const model::Model& model, const model::EncodedImage& enc) {
  FeatureGrid g;
  g.geom = model.config().geometry();
  g.dim = model.config().dim;
  g.values.assign(enc.features.data().begin(), enc.features.data().end());
  return g;
}

SampleConfusion sample_confusion(const model::Model& model, const img::SegSample& sample, const AnalysisOptions& options) {
  const int k = model.config().num_classes;
  const auto enc = model.encode(sample.image);
  const auto features = feature_grid(model, enc);
  const auto& geom = features.geom;
  const auto present = img::classes_in(sample.mask);

  std::vector<PromptFeatures> prompts(static_cast<std::size_t>(k));
  std::vector<Tensor> tokens(static_cast<std::size_t>(k));  // decoder foreground rows per class
  for (int c = 0; c < k; ++c) {
    const bool has_pixels = c == 0 ? std::any_of(sample.mask.pixels.begin(), sample.mask.pixels.end(),
                                                 [](std::uint8_t v) { return v == 0; })
                                   : present.contains(c);
    if (!has_pixels) continue;
    auto& pf = prompts[static_cast<std::size_t>(c)];
    if (options.kind == PromptKind::point) {
      std::vector<std::size_t> cells;
      for (const auto& p : sample_point_prompts(sample.mask, c, options.points, derive_seed(options.seed, static_cast<std::uint64_t>(c)))) {
        pf.push_back(embed_point(p, features));
        cells.push_back(static_cast<std::size_t>(geom.cell_of_pixel(p.x, p.y)));
      }
      tokens[static_cast<std::size_t>(c)] = ad::gather_rows(model.positional(), cells);
    } else {
      const auto box = tightest_box(sample.mask, c);
      std::vector<std::size_t> cells;
      for (int cell = 0; cell < geom.cells(); ++cell)
        if (geom.center_in_box(cell, box.box)) cells.push_back(static_cast<std::size_t>(cell));
      if (cells.empty()) continue;  // box too small to hold a patch centre
      pf.push_back(embed_box(box, features));
      const auto rows = ad::gather_rows(model.positional(), cells);
      tokens[static_cast<std::size_t>(c)] =
          ad::scale(ad::reshape(ad::sum_lastdim(ad::transpose(rows)), {1, rows.dim(1)}), 1.0 / static_cast<double>(cells.size()));
    }
  }

  SampleConfusion out;
  out.pcm = compute_pcm(features, sample.mask, prompts);
  std::vector<img::GrayImage> pred(static_cast<std::size_t>(k), img::GrayImage(sample.mask.width, sample.mask.height));
  for (int j = 0; j < k; ++j) {
    if (!tokens[static_cast<std::size_t>(j)].defined()) continue;
    std::vector<Tensor> others;
    for (int c = 1; c < k; ++c)
      if (c != j && tokens[static_cast<std::size_t>(c)].defined()) others.push_back(tokens[static_cast<std::size_t>(c)]);
    const Tensor bg = others.empty() ? Tensor() : ad::concat_rows(others);
    const auto logits = model.decode(enc, {tokens[static_cast<std::size_t>(j)], bg});
    const auto v = logits.data();
    auto& mask = pred[static_cast<std::size_t>(j)];
    for (std::size_t i = 0; i < v.size(); ++i) mask.pixels[i] = v[i] > 0 ? 1 : 0;
  }
  out.ocm = compute_ocm(pred, sample.mask, k);
  // Columns without prompts carry no prediction; leave them undefined.
  for (int j = 0; j < k; ++j) {
    if (tokens[static_cast<std::size_t>(j)].defined()) continue;
    for (int i = 0; i < k; ++i) out.ocm.valid[static_cast<std::size_t>(i) * k + j] = false;
  }
  return out;
}

DatasetConfusion dataset_confusion(const model::Model& model, const img::DatasetIndex& index,
                                   std::span<const std::size_t> entries, const AnalysisOptions& options) {
  const int k = model.config().num_classes;
  MatrixAverager pcm(k), ocm(k);
  DatasetConfusion out;
  for (auto e : entries) {
    const auto sample = img::load_sample(index, index.entries.at(e));
    auto opts = options;
    opts.seed = derive_seed(options.seed, e);
    const auto sc = sample_confusion(model, sample, opts);
    pcm.add(sc.pcm);
    ocm.add(sc.ocm);
    for (std::size_t q = 0; q < sc.pcm.value.size(); ++q) {
      if (!sc.pcm.valid[q] || !sc.ocm.valid[q]) continue;
      out.pcm_entries.push_back(sc.pcm.value[q]);
      out.ocm_entries.push_back(sc.ocm.value[q]);
    }
    ++out.samples;
  }
  out.pcm = pcm.mean();
  out.ocm = ocm.mean();
  out.correlation = out.pcm_entries.size() >= 2 ? pearson(out.pcm_entries, out.ocm_entries) : 0.0;
  return out;
}

std::vector<std::string> class_names(int num_classes) {
  std::vector<std::string> names{"None"};
  for (int c = 1; c < num_classes; ++c) names.push_back("class" + std::to_string(c));
  return names;
}

}  // namespace aisam::prompt
