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

#include <span>
#include <vector>

#include <json.hpp>

#include "autodiff/ops.hpp"

namespace aisam::loss {

/// Loss weights and temperatures. Defaults are the medical-segmentation
/// settings: gamma 0.1, tau 7, alpha_pc 2, alpha_ps 1, beta_in 0.2,
/// beta_out 0.5, CE/DICE 0.3/0.7, ASL gammas 0/2.
struct LossConfig {
  double gamma = 0.1;
  double tau = 7.0;
  double alpha_pc = 2.0;
  double alpha_ps = 1.0;
  double alpha_pd = 1.0;
  double beta_in = 0.2;
  double beta_out = 0.5;
  double ce_weight = 0.3;
  double dice_weight = 0.7;
  double asl_weight = 1.0;
  double asl_gamma_pos = 0.0;
  double asl_gamma_neg = 2.0;

  void validate() const;
  /// Same config with the prompt heuristic switched off.
  LossConfig without_heuristic() const;
};

void to_json(nlohmann::json& j, const LossConfig& c);
void from_json(const nlohmann::json& j, LossConfig& c);

/// Point correctness, averaged over the rows of `weights` ([N, cells] or
/// [cells]): 1 - (1_cᵀw + γ) / (1ᵀw + γ).
ad::Tensor point_correctness(const ad::Tensor& weights, std::span<const double> indicator, double gamma);

/// Point sharpness, averaged over rows: 1 - (max(1_c ⊙ w) + γ) / (1_cᵀw + γ).
ad::Tensor point_sharpness(const ad::Tensor& weights, std::span<const double> indicator, double gamma);

/// Contrastive spread of one class's point features [N, D]. Every point is an
/// anchor once; the self term contributes exp(1/τ) exactly.
ad::Tensor diversity_in(const ad::Tensor& point_features, double tau);

/// Same contrastive form across classes at each point index, averaged over
/// point indices. Each entry of `per_class` is [N, D].
ad::Tensor diversity_out(const std::vector<ad::Tensor>& per_class, double tau);

/// β_in · mean_c L^in_c + β_out · L^out.
ad::Tensor diversity(const std::vector<ad::Tensor>& per_class, const LossConfig& cfg);

struct HeuristicTerms {
  ad::Tensor correctness;  // L^pc
  ad::Tensor sharpness;    // L^ps
  ad::Tensor diversity;    // L^pd
  ad::Tensor total;        // α-weighted sum
};

/// Composite prompt heuristic over the requested classes: weights[k] and
/// point_features[k] belong to the class with grid indicator indicators[k].
HeuristicTerms prompt_heuristic(const std::vector<ad::Tensor>& weights,
                                const std::vector<std::vector<double>>& indicators,
                                const std::vector<ad::Tensor>& point_features, const LossConfig& cfg);

/// Soft DICE loss 1 - (2Σpq + ε)/(Σp + Σq + ε), ε = 1e-6.
ad::Tensor soft_dice(const ad::Tensor& probs, std::span<const double> target);
/// Mean soft DICE over classes.
ad::Tensor dice_loss(const std::vector<ad::Tensor>& probs, const std::vector<std::vector<double>>& targets);

/// Mean per-row multi-class cross-entropy of logits [rows, K] against labels.
ad::Tensor cross_entropy(const ad::Tensor& logits, std::span<const int> labels);

/// Asymmetric multi-label loss, mean over classes, no probability margin.
ad::Tensor asl_loss(const ad::Tensor& probs, std::span<const double> targets, const LossConfig& cfg);

struct LossTerms {
  ad::Tensor ce, dice, asl;
  HeuristicTerms heuristic;
};

/// ce_weight·CE + dice_weight·DICE + L^ph + asl_weight·ASL. Undefined terms
/// count as zero.
ad::Tensor total_loss(const LossTerms& terms, const LossConfig& cfg);

}  // namespace aisam::loss
