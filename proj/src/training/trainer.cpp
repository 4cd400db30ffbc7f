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

#include "training/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include "imaging/rng.hpp"
#include "model/geometry.hpp"
#include "util/digest.hpp"

namespace aisam::train {

using ad::Tensor;
using nlohmann::json;

void TrainConfig::validate() const {
  if (!(base_lr > 0) || !(warmup_init_lr > 0)) throw std::invalid_argument("train config: learning rates must be positive");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) throw std::invalid_argument("train config: betas must be in [0, 1)");
  if (!(eps > 0) || !(weight_decay >= 0)) throw std::invalid_argument("train config: eps must be positive, weight decay non-negative");
  if (total_epochs < 1 || warmup_epochs < 0 || warmup_epochs >= total_epochs) {
    throw std::invalid_argument("train config: need 0 <= warmup_epochs < total_epochs");
  }
  if (batch_size < 1) throw std::invalid_argument("train config: batch_size must be positive");
  if (clip_norm < 0 || max_shift < 0 || max_steps < 0) throw std::invalid_argument("train config: negative clip/shift/steps");
  loss.validate();
  model.validate();
}

void to_json(json& j, const TrainConfig& c) {
  j = {{"base_lr", c.base_lr},
       {"warmup_init_lr", c.warmup_init_lr},
       {"beta1", c.beta1},
       {"beta2", c.beta2},
       {"eps", c.eps},
       {"weight_decay", c.weight_decay},
       {"total_epochs", c.total_epochs},
       {"warmup_epochs", c.warmup_epochs},
       {"batch_size", c.batch_size},
       {"seed", c.seed},
       {"clip_norm", c.clip_norm},
       {"max_shift", c.max_shift},
       {"max_steps", c.max_steps},
       {"eval_each_epoch", c.eval_each_epoch},
       {"prompter_seg_grad", c.prompter_seg_grad},
       {"loss", c.loss},
       {"model", c.model}};
}

void from_json(const json& j, TrainConfig& c) {
  static const std::vector<std::string> known{"base_lr",     "warmup_init_lr", "beta1",      "beta2",     "eps",
                                              "weight_decay", "total_epochs",  "warmup_epochs", "batch_size", "seed",
                                              "clip_norm",   "max_shift",      "max_steps",  "eval_each_epoch", "loss",
                                              "model",       "prompter_seg_grad"};
  for (const auto& [k, v] : j.items()) {
    if (std::find(known.begin(), known.end(), k) == known.end()) throw std::invalid_argument("train config: unknown key '" + k + "'");
  }
  TrainConfig d;
  c.base_lr = j.value("base_lr", d.base_lr);
  c.warmup_init_lr = j.value("warmup_init_lr", d.warmup_init_lr);
  c.beta1 = j.value("beta1", d.beta1);
  c.beta2 = j.value("beta2", d.beta2);
  c.eps = j.value("eps", d.eps);
  c.weight_decay = j.value("weight_decay", d.weight_decay);
  c.total_epochs = j.value("total_epochs", d.total_epochs);
  c.warmup_epochs = j.value("warmup_epochs", d.warmup_epochs);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.seed = j.value("seed", d.seed);
  c.clip_norm = j.value("clip_norm", d.clip_norm);
  c.max_shift = j.value("max_shift", d.max_shift);
  c.max_steps = j.value("max_steps", d.max_steps);
  c.eval_each_epoch = j.value("eval_each_epoch", d.eval_each_epoch);
  c.prompter_seg_grad = j.value("prompter_seg_grad", d.prompter_seg_grad);
  c.loss = j.contains("loss") ? j.at("loss").get<loss::LossConfig>() : d.loss;
  c.model = j.contains("model") ? j.at("model").get<model::ModelConfig>() : d.model;
}

double cosine_lr(long step, long total_steps, long warmup_steps, const TrainConfig& cfg) {
  if (step >= total_steps) return 0.0;
  if (step < warmup_steps) {
    const double t = static_cast<double>(step) / static_cast<double>(warmup_steps);
    return cfg.warmup_init_lr + (cfg.base_lr - cfg.warmup_init_lr) * t;
  }
  const double t = static_cast<double>(step - warmup_steps) / static_cast<double>(total_steps - warmup_steps);
  return 0.5 * cfg.base_lr * (1.0 + std::cos(std::numbers::pi * t));
}

void adamw_step(std::vector<model::NamedTensor>& params, AdamState& state, double lr, const TrainConfig& cfg) {
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.tensor.numel(), 0.0);
      state.v.emplace_back(p.tensor.numel(), 0.0);
    }
  }
  if (state.m.size() != params.size()) throw std::logic_error("adamw_step: optimizer state does not match params");
  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto value = params[i].tensor.mutable_data();
    const auto grad = params[i].tensor.grad();
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t k = 0; k < value.size(); ++k) {
      const double g = grad.empty() ? 0.0 : grad[k];
      m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g;
      v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g * g;
      value[k] *= 1.0 - lr * cfg.weight_decay;
      value[k] -= lr * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + cfg.eps);
    }
  }
}

double clip_grad_norm(std::vector<model::NamedTensor>& params, double max_norm) {
  double sq = 0;
  for (const auto& p : params)
    for (double g : p.tensor.grad()) sq += g * g;
  const double norm = std::sqrt(sq);
  if (max_norm > 0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (auto& p : params)
      for (double& g : p.tensor.mutable_grad()) g *= s;
  }
  return norm;
}

Split split_dataset(const img::DatasetIndex& index) {
  Split s;
  for (std::size_t i = 0; i < index.entries.size(); ++i) (i % 5 == 4 ? s.test : s.train).push_back(i);
  return s;
}

img::SegSample translate_sample(const img::SegSample& s, int dx, int dy) {
  if (dx == 0 && dy == 0) return s;
  img::SegSample out = s;
  const int w = s.image.width, h = s.image.height;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int sx = std::clamp(x - dx, 0, w - 1), sy = std::clamp(y - dy, 0, h - 1);
      for (int c = 0; c < 3; ++c) out.image.at(x, y, c) = s.image.at(sx, sy, c);
      out.mask.at(x, y) = s.mask.at(sx, sy);
    }
  out.present_classes = img::classes_in(out.mask);
  return out;
}

Tensor sample_loss(const model::Model& model, const img::SegSample& sample, const loss::LossConfig& cfg,
                   bool prompter_seg_grad, StepLosses* parts) {
  const auto& mc = model.config();
  const auto enc = model.encode(sample.image);
  const std::vector<int> classes(sample.present_classes.begin(), sample.present_classes.end());

  loss::LossTerms terms;
  std::vector<double> presence(static_cast<std::size_t>(mc.foreground_classes()), 0.0);
  for (int c : classes) presence[static_cast<std::size_t>(c - 1)] = 1.0;
  terms.asl = loss::asl_loss(model.classify(enc.features), presence, cfg);

  if (!classes.empty()) {
    const auto weights = model.prompt_weights(enc.features, classes);
    const auto cells = cell_classes(sample.mask, mc.geometry());
    std::vector<std::vector<double>> indicators;
    std::vector<Tensor> feats, points;
    for (std::size_t k = 0; k < classes.size(); ++k) {
      indicators.push_back(class_indicator(cells, classes[k]));
      feats.push_back(model::point_features(weights[k], model.positional(), enc.features));
      points.push_back(model::generalized_points(prompter_seg_grad ? weights[k] : weights[k].detach(), model.positional()));
    }
    const bool heuristic = cfg.alpha_pc > 0 || cfg.alpha_ps > 0 || cfg.alpha_pd > 0;
    if (heuristic) terms.heuristic = loss::prompt_heuristic(weights, indicators, feats, cfg);

    const auto hw = sample.mask.pixels.size();
    std::vector<Tensor> logit_rows{Tensor::zeros({1, hw})};
    std::vector<Tensor> probs;
    std::vector<std::vector<double>> targets;
    for (const auto& p : model::cross_class_prompts(classes, points)) {
      const auto logits = model.decode(enc, {p.foreground, p.background});
      logit_rows.push_back(logits);
      probs.push_back(ad::sigmoid(logits));
      std::vector<double> t(hw);
      for (std::size_t i = 0; i < hw; ++i) t[i] = sample.mask.pixels[i] == p.class_id ? 1.0 : 0.0;
      targets.push_back(std::move(t));
    }
    std::vector<int> labels(hw, 0);
    for (std::size_t i = 0; i < hw; ++i) {
      const auto it = std::find(classes.begin(), classes.end(), static_cast<int>(sample.mask.pixels[i]));
      if (it != classes.end()) labels[i] = static_cast<int>(it - classes.begin()) + 1;
    }
    terms.ce = loss::cross_entropy(ad::transpose(ad::concat_rows(logit_rows)), labels);
    terms.dice = loss::dice_loss(probs, targets);
  }
  const auto total = loss::total_loss(terms, cfg);
  if (parts) {
    auto val = [](const Tensor& t) { return t.defined() ? t.item() : 0.0; };
    *parts = {total.item(), val(terms.ce), val(terms.dice), val(terms.asl),
              val(terms.heuristic.correctness), val(terms.heuristic.sharpness), val(terms.heuristic.diversity)};
  }
  return total;
}

namespace {

void add_into(StepLosses& acc, const StepLosses& s) {
  acc.total += s.total;
  acc.ce += s.ce;
  acc.dice += s.dice;
  acc.asl += s.asl;
  acc.pc += s.pc;
  acc.ps += s.ps;
  acc.pd += s.pd;
}

json losses_json(const StepLosses& s, double n) {
  return {{"loss", s.total / n}, {"ce", s.ce / n}, {"dice", s.dice / n}, {"asl", s.asl / n},
          {"pc", s.pc / n},      {"ps", s.ps / n}, {"pd", s.pd / n}};
}

}  // namespace

TrainResult train(const img::DatasetIndex& index, const TrainConfig& cfg_in, const std::string& out_path,
                  const std::string& log_path) {
  TrainConfig cfg = cfg_in;
  cfg.model.num_classes = index.num_classes;
  cfg.validate();
  if (index.entries.empty()) throw TrainingError("train: dataset is empty");

  std::vector<img::SegSample> samples;
  Sha256 data_hash;
  for (const auto& e : index.entries) {
    samples.push_back(img::load_sample(index, e));
    data_hash.update(img::write_ppm(samples.back().image));
    data_hash.update(img::write_pgm(samples.back().mask));
  }
  const std::string dataset_hash = data_hash.hex();
  const auto split = split_dataset(index);
  const auto& train_ids = split.train.empty() ? split.test : split.train;

  model::Model model(cfg.model);
  auto& params = model.params().all();
  AdamState adam;
  Rng rng(derive_seed(cfg.seed, 2));

  const long batch = cfg.batch_size;
  const long steps_per_epoch = (static_cast<long>(train_ids.size()) + batch - 1) / batch;
  const long total_steps = steps_per_epoch * cfg.total_epochs;
  const long warmup_steps = steps_per_epoch * cfg.warmup_epochs;

  std::ofstream log_file;
  if (!log_path.empty()) {
    log_file.open(log_path, std::ios::binary | std::ios::trunc);
    if (!log_file) throw TrainingError("train: cannot write log " + log_path);
  }

  TrainResult result;
  long step = 0;
  bool stop = false;
  for (int epoch = 0; epoch < cfg.total_epochs && !stop; ++epoch) {
    auto order = train_ids;
    rng.shuffle(order);
    StepLosses epoch_sum;
    double seen = 0, lr = 0;
    for (std::size_t start = 0; start < order.size() && !stop; start += static_cast<std::size_t>(batch)) {
      const auto end = std::min(order.size(), start + static_cast<std::size_t>(batch));
      const double inv = 1.0 / static_cast<double>(end - start);
      for (std::size_t i = start; i < end; ++i) {
        const auto& base = samples[order[i]];
        const int dx = cfg.max_shift ? rng.uniform_int(-cfg.max_shift, cfg.max_shift) : 0;
        const int dy = cfg.max_shift ? rng.uniform_int(-cfg.max_shift, cfg.max_shift) : 0;
        const auto sample = translate_sample(base, dx, dy);
        StepLosses parts;
        try {
          ad::Graph graph;
          const auto loss = sample_loss(model, sample, cfg.loss, cfg.prompter_seg_grad, &parts);
          graph.backward(ad::scale(loss, inv));
        } catch (const ad::NonFiniteError& e) {
          json dump = {{"error", e.what()}, {"epoch", epoch}, {"step", step}, {"sample", base.id},
                       {"shift", {dx, dy}}, {"lr", lr}, {"last_epoch", result.log.empty() ? json() : result.log.back()}};
          const auto dump_path = out_path + ".nan.json";
          try {
            img::write_file(dump_path, dump.dump(2));
          } catch (...) {
          }
          throw TrainingError("train: non-finite value at epoch " + std::to_string(epoch) + " step " +
                              std::to_string(step) + " sample " + base.id + " (" + e.what() + "); dump: " + dump_path);
        }
        add_into(epoch_sum, parts);
        seen += 1;
      }
      clip_grad_norm(params, cfg.clip_norm);
      lr = cosine_lr(step, total_steps, warmup_steps, cfg);
      adamw_step(params, adam, lr, cfg);
      model.params().zero_grad();
      ++step;
      if (cfg.max_steps > 0 && step >= cfg.max_steps) stop = true;
    }
    json entry = losses_json(epoch_sum, std::max(seen, 1.0));
    entry["epoch"] = epoch + 1;
    entry["step"] = step;
    entry["lr"] = lr;
    if (cfg.eval_each_epoch && !split.test.empty()) entry["test_dice"] = evaluate(model, index, split.test).mean_dice;
    result.log.push_back(entry);
    if (log_file) {
      log_file << entry.dump() << '\n';
      log_file.flush();
    }
  }

  json meta = {{"global_step", step},
               {"seed", cfg.seed},
               {"dataset_hash", dataset_hash},
               {"train", cfg},
               {"epochs_completed", result.log.size()}};
  result.checkpoint = make_checkpoint(model, meta);
  if (!out_path.empty()) save_checkpoint(out_path, result.checkpoint);
  return result;
}

double dice_score(const img::GrayImage& pred, const img::GrayImage& gt, int class_id) {
  if (pred.width != gt.width || pred.height != gt.height) throw std::invalid_argument("dice_score: size mismatch");
  std::size_t a = 0, b = 0, both = 0;
  for (std::size_t i = 0; i < gt.pixels.size(); ++i) {
    const bool p = pred.pixels[i] == class_id, g = gt.pixels[i] == class_id;
    a += p;
    b += g;
    both += p && g;
  }
  if (a + b == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(a + b);
}

void to_json(json& j, const EvalReport& r) {
  json per = json::object();
  for (std::size_t k = 0; k < r.per_class.size(); ++k) {
    per[std::to_string(k + 1)] = std::isnan(r.per_class[k]) ? json() : json(r.per_class[k]);
  }
  j = {{"mean_dice", r.mean_dice}, {"per_class", per}, {"samples", r.samples}};
}

EvalReport evaluate(const img::DatasetIndex& index, std::span<const std::size_t> entries, int num_classes,
                    const Predictor& predict) {
  EvalReport r;
  const auto fg = static_cast<std::size_t>(std::max(0, num_classes - 1));
  std::vector<double> sum(fg, 0.0);
  std::vector<std::size_t> count(fg, 0);
  double total = 0;
  for (auto i : entries) {
    const auto sample = img::load_sample(index, index.entries.at(i));
    const auto pred = predict(sample);
    if (sample.present_classes.empty()) continue;
    double s = 0;
    for (int c : sample.present_classes) {
      const double d = dice_score(pred, sample.mask, c);
      s += d;
      sum[static_cast<std::size_t>(c - 1)] += d;
      ++count[static_cast<std::size_t>(c - 1)];
    }
    total += s / static_cast<double>(sample.present_classes.size());
    ++r.samples;
  }
  r.per_class.resize(fg);
  for (std::size_t k = 0; k < fg; ++k) {
    r.per_class[k] = count[k] ? sum[k] / static_cast<double>(count[k]) : std::numeric_limits<double>::quiet_NaN();
  }
  r.mean_dice = r.samples ? total / static_cast<double>(r.samples) : 0.0;
  return r;
}

EvalReport evaluate(const model::Model& model, const img::DatasetIndex& index, std::span<const std::size_t> entries,
                    const model::SegmentOptions& options) {
  return evaluate(index, entries, model.config().num_classes,
                  [&](const img::SegSample& s) { return model::segment_auto(model, s.image, options).labels; });
}

}  // namespace aisam::train
