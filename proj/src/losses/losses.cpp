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

#include "losses/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace aisam::loss {

using ad::Tensor;

namespace {

constexpr double kDiceEps = 1e-6;
constexpr double kAslClamp = 1e-8;

Tensor as_rows(const Tensor& w) { return w.rank() == 1 ? ad::reshape(w, {1, w.numel()}) : w; }

Tensor column(std::span<const double> v) {
  return Tensor::from({v.size(), 1}, std::vector<double>(v.begin(), v.end()));
}

Tensor constant_like(const Tensor& t, double v) { return Tensor::filled(t.shape(), v); }

Tensor one_minus(const Tensor& t) { return ad::sub(constant_like(t, 1.0), t); }

// log(1 + Σ_{n≠a} exp((s_an - 1)/τ)) per anchor, averaged: the contrastive
// term with the self similarity pinned to exactly 1.
Tensor contrastive(const Tensor& feats, double tau) {
  const auto n = feats.dim(0);
  const auto u = ad::normalize_lastdim(feats);
  const auto sims = ad::matmul_bt(u, u);
  std::vector<double> off(n * n, 1.0);
  for (std::size_t i = 0; i < n; ++i) off[i * n + i] = 0.0;
  const auto others = ad::mul(ad::exp(ad::scale(ad::add_scalar(sims, -1.0), 1.0 / tau)),
                              Tensor::from({n, n}, std::move(off)));
  return ad::reduce_mean(ad::log(ad::add_scalar(ad::sum_lastdim(others), 1.0)));
}

Tensor weighted_sum(std::initializer_list<std::pair<double, Tensor>> parts) {
  Tensor acc;
  for (const auto& [w, t] : parts) {
    if (!t.defined()) continue;
    const auto term = ad::scale(t, w);
    acc = acc.defined() ? ad::add(acc, term) : term;
  }
  return acc.defined() ? acc : Tensor::scalar(0.0);
}

}  // namespace

void LossConfig::validate() const {
  for (double v : {gamma, tau, alpha_pc, alpha_ps, alpha_pd, beta_in, beta_out, ce_weight, dice_weight, asl_weight,
                   asl_gamma_pos, asl_gamma_neg}) {
    if (!(v >= 0.0)) throw std::invalid_argument("loss config values must be non-negative");
  }
  if (!(tau > 0.0)) throw std::invalid_argument("loss config: tau must be positive");
}

LossConfig LossConfig::without_heuristic() const {
  auto c = *this;
  c.alpha_pc = c.alpha_ps = c.alpha_pd = 0.0;
  return c;
}

void to_json(nlohmann::json& j, const LossConfig& c) {
  j = {{"gamma", c.gamma},         {"tau", c.tau},
       {"alpha_pc", c.alpha_pc},   {"alpha_ps", c.alpha_ps},
       {"alpha_pd", c.alpha_pd},   {"beta_in", c.beta_in},
       {"beta_out", c.beta_out},   {"ce_weight", c.ce_weight},
       {"dice_weight", c.dice_weight}, {"asl_weight", c.asl_weight},
       {"asl_gamma_pos", c.asl_gamma_pos}, {"asl_gamma_neg", c.asl_gamma_neg}};
}

void from_json(const nlohmann::json& j, LossConfig& c) {
  LossConfig d;
  c.gamma = j.value("gamma", d.gamma);
  c.tau = j.value("tau", d.tau);
  c.alpha_pc = j.value("alpha_pc", d.alpha_pc);
  c.alpha_ps = j.value("alpha_ps", d.alpha_ps);
  c.alpha_pd = j.value("alpha_pd", d.alpha_pd);
  c.beta_in = j.value("beta_in", d.beta_in);
  c.beta_out = j.value("beta_out", d.beta_out);
  c.ce_weight = j.value("ce_weight", d.ce_weight);
  c.dice_weight = j.value("dice_weight", d.dice_weight);
  c.asl_weight = j.value("asl_weight", d.asl_weight);
  c.asl_gamma_pos = j.value("asl_gamma_pos", d.asl_gamma_pos);
  c.asl_gamma_neg = j.value("asl_gamma_neg", d.asl_gamma_neg);
}

Tensor point_correctness(const Tensor& weights, std::span<const double> indicator, double gamma) {
  const auto w = as_rows(weights);
  if (w.dim(1) != indicator.size()) throw ad::ShapeError("point_correctness: indicator length mismatch");
  const auto rows = w.dim(0);
  const auto inside = ad::reshape(ad::matmul(w, column(indicator)), {rows});
  const auto total = ad::sum_lastdim(w);
  return ad::reduce_mean(one_minus(ad::div(ad::add_scalar(inside, gamma), ad::add_scalar(total, gamma))));
}

Tensor point_sharpness(const Tensor& weights, std::span<const double> indicator, double gamma) {
  const auto w = as_rows(weights);
  const auto rows = w.dim(0), cells = w.dim(1);
  if (cells != indicator.size()) throw ad::ShapeError("point_sharpness: indicator length mismatch");
  const auto mask = Tensor::from({1, cells}, std::vector<double>(indicator.begin(), indicator.end()));
  std::vector<Tensor> per_row;
  for (std::size_t r = 0; r < rows; ++r) {
    const auto masked = ad::mul(ad::slice_rows(w, r, r + 1), mask);
    const auto peak = ad::add_scalar(ad::reduce_max(masked), gamma);
    const auto inside = ad::add_scalar(ad::reduce_sum(masked), gamma);
    per_row.push_back(ad::reshape(ad::div(peak, inside), {1, 1}));
  }
  return ad::reduce_mean(one_minus(ad::concat_rows(per_row)));
}

Tensor diversity_in(const Tensor& point_features, double tau) { return contrastive(as_rows(point_features), tau); }

Tensor diversity_out(const std::vector<Tensor>& per_class, double tau) {
  if (per_class.empty()) throw std::invalid_argument("diversity_out: no classes");
  const auto points = as_rows(per_class[0]).dim(0);
  std::vector<Tensor> per_index;
  for (std::size_t n = 0; n < points; ++n) {
    std::vector<Tensor> across;
    for (const auto& f : per_class) across.push_back(ad::slice_rows(as_rows(f), n, n + 1));
    per_index.push_back(ad::reshape(contrastive(ad::concat_rows(across), tau), {1, 1}));
  }
  return ad::reduce_mean(ad::concat_rows(per_index));
}

Tensor diversity(const std::vector<Tensor>& per_class, const LossConfig& cfg) {
  std::vector<Tensor> in_terms;
  for (const auto& f : per_class) in_terms.push_back(ad::reshape(diversity_in(f, cfg.tau), {1, 1}));
  const auto l_in = ad::reduce_mean(ad::concat_rows(in_terms));
  const auto l_out = diversity_out(per_class, cfg.tau);
  return ad::add(ad::scale(l_in, cfg.beta_in), ad::scale(l_out, cfg.beta_out));
}

HeuristicTerms prompt_heuristic(const std::vector<Tensor>& weights, const std::vector<std::vector<double>>& indicators,
                                const std::vector<Tensor>& point_features, const LossConfig& cfg) {
  if (weights.empty() || weights.size() != indicators.size() || weights.size() != point_features.size()) {
    throw std::invalid_argument("prompt_heuristic: need matching non-empty per-class inputs");
  }
  std::vector<Tensor> pc, ps;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    pc.push_back(ad::reshape(point_correctness(weights[k], indicators[k], cfg.gamma), {1, 1}));
    ps.push_back(ad::reshape(point_sharpness(weights[k], indicators[k], cfg.gamma), {1, 1}));
  }
  HeuristicTerms h;
  h.correctness = ad::reduce_mean(ad::concat_rows(pc));
  h.sharpness = ad::reduce_mean(ad::concat_rows(ps));
  h.diversity = diversity(point_features, cfg);
  h.total = weighted_sum({{cfg.alpha_pc, h.correctness}, {cfg.alpha_ps, h.sharpness}, {cfg.alpha_pd, h.diversity}});
  return h;
}

Tensor soft_dice(const Tensor& probs, std::span<const double> target) {
  if (probs.numel() != target.size()) throw ad::ShapeError("soft_dice: size mismatch");
  const auto q = Tensor::from(probs.shape(), std::vector<double>(target.begin(), target.end()));
  double q_sum = 0;
  for (double v : target) q_sum += v;
  const auto overlap = ad::add_scalar(ad::scale(ad::reduce_sum(ad::mul(probs, q)), 2.0), kDiceEps);
  const auto denom = ad::add_scalar(ad::reduce_sum(probs), q_sum + kDiceEps);
  return one_minus(ad::div(overlap, denom));
}

Tensor dice_loss(const std::vector<Tensor>& probs, const std::vector<std::vector<double>>& targets) {
  if (probs.empty() || probs.size() != targets.size()) throw std::invalid_argument("dice_loss: class count mismatch");
  std::vector<Tensor> per_class;
  for (std::size_t k = 0; k < probs.size(); ++k) per_class.push_back(ad::reshape(soft_dice(probs[k], targets[k]), {1, 1}));
  return ad::reduce_mean(ad::concat_rows(per_class));
}

Tensor cross_entropy(const Tensor& logits, std::span<const int> labels) {
  if (logits.rank() != 2 || logits.dim(0) != labels.size()) throw ad::ShapeError("cross_entropy: label count mismatch");
  const auto rows = logits.dim(0), k = logits.dim(1);
  std::vector<double> pick(rows * k, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const int l = labels[r];
    if (l < 0 || static_cast<std::size_t>(l) >= k) throw std::out_of_range("cross_entropy: label out of range");
    pick[r * k + static_cast<std::size_t>(l)] = 1.0;
  }
  const auto logp = ad::log_softmax_lastdim(logits);
  return ad::scale(ad::reduce_sum(ad::mul(logp, Tensor::from({rows, k}, std::move(pick)))), -1.0 / static_cast<double>(rows));
}

Tensor asl_loss(const Tensor& probs, std::span<const double> targets, const LossConfig& cfg) {
  if (probs.numel() != targets.size()) throw ad::ShapeError("asl_loss: target count mismatch");
  const double gp = cfg.asl_gamma_pos, gn = cfg.asl_gamma_neg;
  // Positive term -(1-p)^γ+ · log(p), with p clamped away from 0.
  const auto pos = ad::custom_unary(
      probs,
      [gp](double p) { return -std::pow(1.0 - p, gp) * std::log(std::max(p, kAslClamp)); },
      [gp](double p, double) {
        const double lp = std::log(std::max(p, kAslClamp));
        const double dlp = p > kAslClamp ? 1.0 / p : 0.0;
        const double focus = std::pow(1.0 - p, gp);
        const double dfocus = gp == 0.0 ? 0.0 : -gp * std::pow(1.0 - p, gp - 1.0);
        return -(dfocus * lp + focus * dlp);
      },
      "asl_pos");
  // Negative term -p^γ- · log(1-p), with 1-p clamped away from 0.
  const auto neg = ad::custom_unary(
      probs,
      [gn](double p) { return -std::pow(p, gn) * std::log(std::max(1.0 - p, kAslClamp)); },
      [gn](double p, double) {
        const double lq = std::log(std::max(1.0 - p, kAslClamp));
        const double dlq = 1.0 - p > kAslClamp ? -1.0 / (1.0 - p) : 0.0;
        const double focus = std::pow(p, gn);
        const double dfocus = gn == 0.0 ? 0.0 : gn * std::pow(p, gn - 1.0);
        return -(dfocus * lq + focus * dlq);
      },
      "asl_neg");
  std::vector<double> y(targets.begin(), targets.end()), not_y(targets.size());
  for (std::size_t i = 0; i < y.size(); ++i) not_y[i] = 1.0 - y[i];
  const auto yt = Tensor::from(probs.shape(), std::move(y));
  const auto nyt = Tensor::from(probs.shape(), std::move(not_y));
  return ad::reduce_mean(ad::add(ad::mul(yt, pos), ad::mul(nyt, neg)));
}

Tensor total_loss(const LossTerms& t, const LossConfig& cfg) {
  return weighted_sum({{cfg.ce_weight, t.ce}, {cfg.dice_weight, t.dice}, {1.0, t.heuristic.total}, {cfg.asl_weight, t.asl}});
}

}  // namespace aisam::loss
