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
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "imaging/dataset.hpp"
#include "losses/losses.hpp"
#include "model/model.hpp"
#include "model/segment.hpp"
#include "training/checkpoint.hpp"

namespace aisam::train {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  double base_lr = 1e-4;
  double warmup_init_lr = 1e-10;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-2;
  int total_epochs = 20;
  int warmup_epochs = 2;
  int batch_size = 8;
  std::uint64_t seed = 0;
  double clip_norm = 1.0;  // 0 disables clipping
  int max_shift = 4;       // random translation in pixels, 0 disables
  int max_steps = 0;       // stop early after this many optimizer steps (0 = no limit)
  bool eval_each_epoch = true;
  // Let the segmentation losses reach the prompter through W. Off by default:
  // a decoder trained from scratch and the prompter then settle on fixed
  // off-object cells as class codes, and the saturated softmax keeps the
  // placement losses from moving them back.
  bool prompter_seg_grad = false;
  loss::LossConfig loss;
  model::ModelConfig model;

  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
/// Missing keys keep their defaults; unknown keys are rejected.
void from_json(const nlohmann::json& j, TrainConfig& c);

/// Linear warmup from warmup_init_lr to base_lr over `warmup_steps`, then
/// cosine decay to 0 at `total_steps`.
double cosine_lr(long step, long total_steps, long warmup_steps, const TrainConfig& cfg);

struct AdamState {
  std::vector<std::vector<double>> m, v;
  long step = 0;
};

/// One AdamW update from the accumulated gradients of `params`.
void adamw_step(std::vector<model::NamedTensor>& params, AdamState& state, double lr, const TrainConfig& cfg);

/// Scales the accumulated gradients so their global L2 norm is at most
/// `max_norm`. Returns the norm before scaling.
double clip_grad_norm(std::vector<model::NamedTensor>& params, double max_norm);

/// Held-out split: every fifth entry (position % 5 == 4) is test.
struct Split {
  std::vector<std::size_t> train, test;
};
Split split_dataset(const img::DatasetIndex& index);

/// Shifts image and mask by (dx, dy), replicating edge pixels.
img::SegSample translate_sample(const img::SegSample& s, int dx, int dy);

struct StepLosses {
  double total = 0, ce = 0, dice = 0, asl = 0, pc = 0, ps = 0, pd = 0;
};

/// Builds the full training loss for one sample on the active graph. Without
/// `prompter_seg_grad` the decoder sees W as a constant, so only the prompt
/// heuristic trains the prompter through W.
ad::Tensor sample_loss(const model::Model& model, const img::SegSample& sample, const loss::LossConfig& cfg,
                       bool prompter_seg_grad, StepLosses* parts = nullptr);

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<nlohmann::json> log;  // one object per epoch
};

/// Deterministic training run. Writes the checkpoint to `out_path` and the
/// epoch log (JSON Lines) to `log_path` when non-empty. A non-finite loss
/// aborts with a diagnostic dump next to `out_path`.
TrainResult train(const img::DatasetIndex& index, const TrainConfig& cfg, const std::string& out_path,
                  const std::string& log_path = "");

// Evaluation.

/// 2|A∩B| / (|A| + |B|) for one class; 1 when both are empty.
double dice_score(const img::GrayImage& pred, const img::GrayImage& gt, int class_id);

struct EvalReport {
  std::vector<double> per_class;  // index = class id - 1; NaN when the class never occurs in gt
  double mean_dice = 0;           // mean over samples of the mean over gt classes
  std::size_t samples = 0;
};

void to_json(nlohmann::json& j, const EvalReport& r);

/// Per-sample predictor producing a label map.
using Predictor = std::function<img::GrayImage(const img::SegSample&)>;

EvalReport evaluate(const img::DatasetIndex& index, std::span<const std::size_t> entries, int num_classes,
                    const Predictor& predict);
/// Automatic-mode evaluation of `model`.
EvalReport evaluate(const model::Model& model, const img::DatasetIndex& index, std::span<const std::size_t> entries,
                    const model::SegmentOptions& options = {});

}  // namespace aisam::train
