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

#include "training/grad_suite.hpp"

#include <algorithm>
#include <cmath>

#include "imaging/rng.hpp"
#include "losses/losses.hpp"
#include "model/model.hpp"
#include "training/trainer.hpp"

namespace aisam::train {

using ad::Tensor;

namespace {

Tensor random_leaf(Rng& rng, ad::Shape shape, double scale = 1.0) {
  std::vector<double> v(ad::numel_of(shape));
  for (auto& x : v) x = scale * rng.normal();
  return Tensor::from(std::move(shape), std::move(v), true);
}

// Indicator over `cells` with at least one set and one clear entry.
std::vector<double> random_indicator(Rng& rng, std::size_t cells) {
  std::vector<double> v(cells);
  for (auto& x : v) x = rng.uniform() < 0.4 ? 1.0 : 0.0;
  v[0] = 1.0;
  v[cells - 1] = 0.0;
  return v;
}

std::vector<double> random_binary(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform() < 0.5 ? 1.0 : 0.0;
  return v;
}

img::SegSample miniature_sample(Rng& rng, int size) {
  img::SegSample s;
  s.id = "mini";
  s.image = img::RgbImage(size, size);
  s.mask = img::GrayImage(size, size);
  for (auto& p : s.image.pixels) p = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
  const int a = rng.uniform_int(1, 4), b = rng.uniform_int(9, 12);
  for (int y = a; y < a + 5; ++y)
    for (int x = a; x < a + 6; ++x) s.mask.at(x, y) = 1;
  for (int y = b - 4; y <= b; ++y)
    for (int x = b - 5; x <= b; ++x) s.mask.at(x, y) = 2;
  s.present_classes = img::classes_in(s.mask);
  return s;
}

}  // namespace

std::vector<GradCase> run_grad_suite(std::uint64_t seed, double eps) {
  Rng rng(derive_seed(seed, 11));
  const loss::LossConfig cfg;
  const std::size_t n = 3, cells = 9, d = 6;
  std::vector<GradCase> out;
  auto check = [&](std::string name, const ad::ScalarFn& f, std::vector<Tensor> inputs) {
    out.push_back({std::move(name), ad::grad_check(f, std::move(inputs), eps)});
  };

  {
    const auto logits = random_leaf(rng, {n, cells});
    const auto ind = random_indicator(rng, cells);
    check("point_correctness",
          [ind, &cfg](const std::vector<Tensor>& in) {
            return loss::point_correctness(ad::softmax_lastdim(in[0]), ind, cfg.gamma);
          },
          {logits});
    check("point_sharpness",
          [ind, &cfg](const std::vector<Tensor>& in) {
            return loss::point_sharpness(ad::softmax_lastdim(in[0]), ind, cfg.gamma);
          },
          {logits});
  }
  {
    const auto f = random_leaf(rng, {n, d});
    check("diversity_in", [&cfg](const std::vector<Tensor>& in) { return loss::diversity_in(in[0], cfg.tau); }, {f});
  }
  {
    std::vector<Tensor> per_class{random_leaf(rng, {n, d}), random_leaf(rng, {n, d}), random_leaf(rng, {n, d})};
    check("diversity_out", [&cfg](const std::vector<Tensor>& in) { return loss::diversity_out(in, cfg.tau); }, per_class);
    check("diversity", [&cfg](const std::vector<Tensor>& in) { return loss::diversity(in, cfg); }, per_class);
  }
  {
    std::vector<Tensor> inputs;
    std::vector<std::vector<double>> inds;
    for (int c = 0; c < 2; ++c) {
      inputs.push_back(random_leaf(rng, {n, cells}));
      inds.push_back(random_indicator(rng, cells));
    }
    const auto pos = random_leaf(rng, {cells, d});
    const auto feat = random_leaf(rng, {cells, d});
    inputs.push_back(pos);
    inputs.push_back(feat);
    check("prompt_heuristic",
          [inds, &cfg](const std::vector<Tensor>& in) {
            std::vector<Tensor> w, f;
            for (std::size_t c = 0; c < 2; ++c) {
              w.push_back(ad::softmax_lastdim(in[c]));
              f.push_back(ad::matmul(w.back(), ad::add(in[2], in[3])));
            }
            return loss::prompt_heuristic(w, inds, f, cfg).total;
          },
          inputs);
  }
  {
    const std::size_t px = 12;
    std::vector<Tensor> logits{random_leaf(rng, {1, px}), random_leaf(rng, {1, px})};
    const std::vector<std::vector<double>> targets{random_binary(rng, px), random_binary(rng, px)};
    check("dice",
          [targets](const std::vector<Tensor>& in) {
            return loss::dice_loss({ad::sigmoid(in[0]), ad::sigmoid(in[1])}, targets);
          },
          logits);
  }
  {
    const auto logits = random_leaf(rng, {10, 4});
    std::vector<int> labels(10);
    for (auto& l : labels) l = rng.uniform_int(0, 3);
    check("cross_entropy", [labels](const std::vector<Tensor>& in) { return loss::cross_entropy(in[0], labels); },
          {logits});
  }
  {
    const auto logits = random_leaf(rng, {5});
    const auto targets = random_binary(rng, 5);
    check("asl", [targets, &cfg](const std::vector<Tensor>& in) { return loss::asl_loss(ad::sigmoid(in[0]), targets, cfg); },
          {logits});
  }
  {
    model::ModelConfig mc;
    mc.image_size = 16;
    mc.grid = 4;
    mc.dim = 8;
    mc.heads = 2;
    mc.encoder_blocks = mc.prompter_blocks = mc.decoder_blocks = 1;
    mc.num_classes = 3;
    mc.points_per_class = 2;
    mc.init_seed = derive_seed(seed, 12);
    const model::Model m(mc);
    const auto sample = miniature_sample(rng, mc.image_size);
    std::vector<Tensor> params;
    for (const auto& p : m.params().all()) params.push_back(p.tensor);
    // Probe one unit direction inside each parameter group, then whole-model
    // directions.
    std::vector<ad::Direction> directions;
    auto direction = [&](const std::string& prefix) {
      ad::Direction v;
      double sq = 0;
      for (const auto& p : m.params().all()) {
        const bool on = p.name.starts_with(prefix);
        std::vector<double> part(p.tensor.numel(), 0.0);
        if (on)
          for (auto& x : part) {
            x = rng.normal();
            sq += x * x;
          }
        v.push_back(std::move(part));
      }
      for (auto& part : v)
        for (auto& x : part) x /= std::sqrt(sq);
      directions.push_back(std::move(v));
    };
    for (const char* group : {"encoder.", "prompter.", "decoder.", "classifier."}) direction(group);
    for (int i = 0; i < 4; ++i) direction("");
    out.push_back({"full_model",
                   ad::grad_check_directions([&m, sample, &cfg](const std::vector<Tensor>&) { return sample_loss(m, sample, cfg, true); },
                                             params, directions, eps)});
  }
  return out;
}

nlohmann::json grad_suite_json(const std::vector<GradCase>& cases) {
  auto arr = nlohmann::json::array();
  for (const auto& c : cases) {
    arr.push_back({{"name", c.name},
                   {"max_rel_error", c.report.max_rel_error},
                   {"coordinates", c.report.coordinates},
                   {"worst_analytic", c.report.worst_analytic},
                   {"worst_numeric", c.report.worst_numeric}});
  }
  return arr;
}

}  // namespace aisam::train
