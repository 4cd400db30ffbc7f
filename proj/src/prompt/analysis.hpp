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
#include <string>
#include <vector>

#include "imaging/dataset.hpp"
#include "model/model.hpp"
#include "prompt/confusion.hpp"

namespace aisam::prompt {

enum class PromptKind { point, box };

struct AnalysisOptions {
  PromptKind kind = PromptKind::point;
  int points = 1;  // point prompts per class
  std::uint64_t seed = 0;
};

/// Encoder output X as a feature grid.
FeatureGrid feature_grid(const model::Model& model, const model::EncodedImage& enc);

struct SampleConfusion {
  ClassMatrix pcm;
  ClassMatrix ocm;
};

/// Samples ground-truth prompts for every class present in the sample
/// (background included), embeds them in X for the PCM, and decodes each
/// class's prompts, with the other classes' prompts as background, for the OCM.
SampleConfusion sample_confusion(const model::Model& model, const img::SegSample& sample, const AnalysisOptions& options);

struct DatasetConfusion {
  ClassMatrix pcm;  // unweighted mean over samples
  ClassMatrix ocm;
  std::vector<double> pcm_entries;  // paired per-sample entries defined in both
  std::vector<double> ocm_entries;
  double correlation = 0;  // Pearson over the paired entries
  std::size_t samples = 0;
};

DatasetConfusion dataset_confusion(const model::Model& model, const img::DatasetIndex& index,
                                   std::span<const std::size_t> entries, const AnalysisOptions& options);

/// "None" for class 0, "class<k>" otherwise.
std::vector<std::string> class_names(int num_classes);

}  // namespace aisam::prompt
