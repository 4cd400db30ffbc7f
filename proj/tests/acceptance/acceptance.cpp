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

// Acceptance run: prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails. Usage: acceptance [WORK_DIR]

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <tuple>

#include "autodiff/ops.hpp"
#include "imaging/dataset.hpp"
#include "imaging/netpbm.hpp"
#include "imaging/rng.hpp"
#include "interactive/interactive.hpp"
#include "losses/losses.hpp"
#include "model/segment.hpp"
#include "prompt/analysis.hpp"
#include "prompt/confusion.hpp"
#include "support.hpp"
#include "training/checkpoint.hpp"
#include "training/grad_suite.hpp"
#include "training/trainer.hpp"

namespace ad = aisam::ad;
namespace fs = std::filesystem;
namespace ia = aisam::interactive;
namespace img = aisam::img;
namespace loss = aisam::loss;
namespace model = aisam::model;
namespace prompt = aisam::prompt;
namespace train = aisam::train;
using ad::Tensor;
using aisam::testing::random_values;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
};

int failures = 0;

void report(const std::string& label, Outcome& o) {
  std::cout << label << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail.str() << std::endl;
  failures += !o.pass;
}

double cpu_seconds() { return static_cast<double>(std::clock()) / CLOCKS_PER_SEC; }

double wall_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const fs::path& p) { return img::read_file(p.string()); }

// Mean over the sample's gt classes of the label-map DICE.
double sample_dice(const img::GrayImage& labels, const img::SegSample& s) {
  double sum = 0;
  for (int c : s.present_classes) sum += train::dice_score(labels, s.mask, c);
  return s.present_classes.empty() ? 1.0 : sum / static_cast<double>(s.present_classes.size());
}

std::vector<img::SegSample> load_all(const img::DatasetIndex& idx, const std::vector<std::size_t>& entries) {
  std::vector<img::SegSample> out;
  for (auto i : entries) out.push_back(img::load_sample(idx, idx.entries[i]));
  return out;
}

// ---------------------------------------------------------------------------

void criterion_gradients() {
  Outcome o;
  const double c0 = cpu_seconds();
  double worst = 0;
  std::string worst_name;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    for (const auto& c : train::run_grad_suite(seed)) {
      if (c.report.max_rel_error > worst) {
        worst = c.report.max_rel_error;
        worst_name = c.name + " seed " + std::to_string(seed);
      }
    }
  }
  const double secs = cpu_seconds() - c0;
  o.pass = worst < 1e-5 && secs < 120;
  o.detail << "max rel err " << worst << " (" << worst_name << "), " << secs << " s CPU";
  report("criterion 1 gradient correctness", o);
}

void criterion_loss_oracles() {
  Outcome o;
  int checked = 0, bad = 0;
  auto expect = [&](const std::string& name, double got, double want) {
    ++checked;
    if (!(std::abs(got - want) <= 1e-6)) {
      ++bad;
      o.detail << name << " got " << got << " want " << want << "; ";
    }
  };
  auto row = [](std::vector<double> v) {
    const auto n = v.size();
    return Tensor::from({1, n}, std::move(v));
  };
  auto feats = [](const std::vector<std::vector<double>>& rows) {
    std::vector<double> flat;
    for (const auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
    return Tensor::from({rows.size(), rows[0].size()}, flat);
  };
  const std::vector<double> first_two = {1, 1, 0, 0};
  expect("pc ideal", loss::point_correctness(row({0.5, 0.5, 0, 0}), first_two, 0.1).item(), 0.0);
  expect("pc uniform", loss::point_correctness(row({0.25, 0.25, 0.25, 0.25}), first_two, 0.1).item(), 0.454545);
  expect("pc wrong", loss::point_correctness(row({0, 0, 0.5, 0.5}), first_two, 0.1).item(), 0.909091);
  expect("ps peak", loss::point_sharpness(row({1, 0, 0, 0}), first_two, 0.1).item(), 0.0);
  expect("ps split", loss::point_sharpness(row({0.5, 0.5, 0, 0}), first_two, 0.1).item(), 0.454545);
  expect("ps uniform", loss::point_sharpness(row({0.25, 0.25, 0.25, 0.25}), first_two, 0.1).item(), 0.416667);
  expect("in single", loss::diversity_in(feats({{0.3, -2, 1}}), 7).item(), 0.0);
  expect("in identical", loss::diversity_in(feats({{1, 0}, {1, 0}}), 7).item(), 0.693147);
  expect("in orthogonal", loss::diversity_in(feats({{1, 0}, {0, 1}}), 7).item(), 0.624268);
  expect("out single class", loss::diversity_out({feats({{1, 2}, {3, 1}})}, 7).item(), 0.0);
  expect("out identical", loss::diversity_out({feats({{1, 0}}), feats({{1, 0}})}, 7).item(), 0.693147);
  expect("out orthogonal", loss::diversity_out({feats({{1, 0}}), feats({{0, 1}})}, 7).item(), 0.624268);
  const loss::LossConfig cfg;
  expect("div two classes", loss::diversity({feats({{1, 0}}), feats({{0, 1}})}, cfg).item(), 0.312134);
  expect("div identical pair", loss::diversity({feats({{1, 0}, {1, 0}})}, cfg).item(), 0.138629);
  expect("dice match", loss::soft_dice(Tensor::from({4}, {1, 1, 0, 0}), first_two).item(), 0.0);
  expect("dice disjoint", loss::soft_dice(Tensor::from({4}, {0, 0, 1, 1}), first_two).item(), 1.0);
  expect("dice half", loss::soft_dice(Tensor::from({4}, {1, 0, 1, 0}), first_two).item(), 0.5);
  expect("dice mean", loss::dice_loss({Tensor::from({4}, {1, 1, 0, 0}), Tensor::from({4}, {1, 0, 1, 0})}, {first_two, first_two}).item(), 0.25);
  expect("ce uniform", loss::cross_entropy(Tensor::zeros({3, 4}), std::vector<int>{0, 3, 2}).item(), 1.386294);
  expect("asl confident pos", loss::asl_loss(Tensor::from({1}, {1 - 1e-12}), std::vector<double>{1}, cfg).item(), 0.0);
  expect("asl confident neg", loss::asl_loss(Tensor::from({1}, {1e-12}), std::vector<double>{0}, cfg).item(), 0.0);
  expect("asl half neg", loss::asl_loss(Tensor::from({1}, {0.5}), std::vector<double>{0}, cfg).item(), 0.173287);
  o.pass = bad == 0;
  o.detail << checked - bad << "/" << checked << " examples within 1e-6";
  report("criterion 2 loss oracles", o);
}

// Blocky 16x16 masks so every class owns whole 4x4 patches.
img::GrayImage blocky_mask(std::uint64_t seed, int classes) {
  aisam::Rng rng(seed);
  img::GrayImage m(16, 16);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) {
      const auto v = static_cast<std::uint8_t>(rng.uniform_int(0, classes - 1));
      for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) m.at(4 * c + x, 4 * r + y) = v;
    }
  return m;
}

void criterion_added_prompt() {
  Outcome o;
  const double c0 = cpu_seconds();
  auto grid = [](std::uint64_t seed) {
    prompt::FeatureGrid f;
    f.geom = aisam::GridGeometry{16, 16, 4, 4};
    f.dim = 4;
    f.values = random_values(64, seed);
    return f;
  };
  auto prompts = [](std::uint64_t seed, int per_class) {
    std::vector<prompt::PromptFeatures> p(3);
    for (int c = 0; c < 3; ++c)
      for (int k = 0; k < per_class; ++k) p[static_cast<std::size_t>(c)].push_back(random_values(4, seed * 100 + c * 10 + k));
    return p;
  };
  int violations = 0;
  double worst_drop = 0;
  for (std::uint64_t t = 0; t < 1000; ++t) {
    const auto f = grid(t);
    const auto mask = blocky_mask(t, 3);
    const int cls = static_cast<int>(t % 3);
    const auto extra = random_values(4, t + 5000, -3, 3);
    const auto r = prompt::check_added_prompt(f, mask, cls, prompts(t, 1 + static_cast<int>(t % 4)), extra);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (r.before.defined(i, j)) worst_drop = std::max(worst_drop, r.before.at(i, j) - r.after.at(i, j));
    violations += !r.nondecreasing || worst_drop > 1e-12;
  }
  const prompt::SimilarityReduce mean = [](std::span<const double> s) {
    double t = 0;
    for (double v : s) t += v;
    return t / static_cast<double>(s.size());
  };
  int caught = 0;
  for (std::uint64_t t = 0; t < 1000; ++t) {
    const auto r = prompt::check_added_prompt(grid(t), blocky_mask(t, 3), static_cast<int>(t % 3), prompts(t, 2),
                                              random_values(4, t + 9000, -3, 3), mean);
    caught += !r.nondecreasing;
  }
  const double secs = cpu_seconds() - c0;
  o.pass = violations == 0 && caught > 0 && secs < 60;
  o.detail << violations << "/1000 trials decreased (largest drop " << worst_drop << "); fault-injected control flagged "
           << caught << "/1000; " << secs << " s CPU";
  report("criterion 3 added prompts never lower the PCM", o);
}

// ---------------------------------------------------------------------------

struct Run {
  std::string ckpt;
  train::TrainResult result;
  double cpu = 0, wall = 0;
};

Run train_run(const img::DatasetIndex& idx, const train::TrainConfig& cfg, const fs::path& out) {
  Run r;
  r.ckpt = out.string();
  const double c0 = cpu_seconds();
  const auto t0 = std::chrono::steady_clock::now();
  r.result = train::train(idx, cfg, r.ckpt, r.ckpt + ".log");
  r.cpu = cpu_seconds() - c0;
  r.wall = wall_since(t0);
  std::cout << "  trained " << out.filename().string() << " in " << r.cpu << " s CPU, final test dice "
            << r.result.log.back().value("test_dice", -1.0) << std::endl;
  return r;
}

struct ModelStats {
  double auto_dice = 0, one_hot_dice = 0;
  double inside = 0;
};

ModelStats model_stats(const model::Model& m, const img::DatasetIndex& idx, const std::vector<std::size_t>& test,
                       const std::vector<img::SegSample>& samples) {
  ModelStats st;
  st.auto_dice = train::evaluate(m, idx, test).mean_dice;
  model::SegmentOptions oh;
  oh.one_hot = true;
  st.one_hot_dice = train::evaluate(m, idx, test, oh).mean_dice;
  const auto geom = m.config().geometry();
  long in = 0, total = 0;
  for (const auto& s : samples) {
    const auto enc = m.encode(s.image);
    const std::vector<int> cls(s.present_classes.begin(), s.present_classes.end());
    const auto w = m.prompt_weights(enc.features, cls);
    for (std::size_t k = 0; k < cls.size(); ++k)
      for (int cell : model::argmax_cells(w[k])) {
        const auto [x, y] = geom.cell_center_pixel(cell);
        in += s.mask.at(x, y) == cls[k];
        ++total;
      }
  }
  st.inside = total ? static_cast<double>(in) / static_cast<double>(total) : 0;
  return st;
}

void criterion_box(const model::Model& m, const std::vector<img::SegSample>& samples) {
  Outcome o;
  const auto geom = m.config().geometry();
  double sum_auto = 0, sum_box = 0, worst = 0;
  int lowered = 0, raised = 0, exact_fail = 0;
  for (const auto& s : samples) {
    const auto enc = m.encode(s.image);
    const double d_auto = sample_dice(model::segment_auto(m, enc).labels, s);
    std::vector<ia::UserEdit> edits;
    std::map<int, aisam::PixelBox> boxes;
    for (int c : s.present_classes) {
      ia::UserEdit e;
      e.kind = ia::EditKind::box;
      e.class_id = c;
      e.box = prompt::tightest_box(s.mask, c).box;
      boxes[c] = e.box;
      edits.push_back(e);
    }
    const auto state = ia::build_state(edits, s.image.width, s.image.height, m.config().num_classes);
    const auto r = ia::refine(m, enc, state);
    const double d_box = sample_dice(r.labels, s);
    sum_auto += d_auto;
    sum_box += d_box;
    if (d_box < d_auto) {
      ++lowered;
      worst = std::max(worst, d_auto - d_box);
    }
    raised += d_box > d_auto;
    // Exactness: boxed classes carry zero mass outside the box, unit rows, and in-box points.
    for (std::size_t k = 0; k < r.classes.size(); ++k) {
      const auto it = boxes.find(r.classes[k]);
      if (it == boxes.end()) continue;
      const auto& w = r.weights[k];
      const auto cells = static_cast<std::size_t>(geom.cells());
      for (std::size_t row = 0; row < w.numel() / cells; ++row) {
        double sum = 0;
        for (std::size_t c = 0; c < cells; ++c) {
          const double v = w.at(row * cells + c);
          if (!geom.center_in_box(static_cast<int>(c), it->second) && v != 0.0) ++exact_fail;
          sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-12) ++exact_fail;
      }
    }
    for (const auto& p : r.points) {
      const auto it = boxes.find(p.class_id);
      if (p.user || it == boxes.end()) continue;
      const auto& b = it->second;
      if (p.x < b.x0 || p.x > b.x1 || p.y < b.y0 || p.y > b.y1) ++exact_fail;
    }
  }
  const double n = static_cast<double>(samples.size());
  o.pass = lowered == 0 && sum_box > sum_auto && exact_fail == 0;
  o.detail << "auto " << sum_auto / n << " box " << sum_box / n << "; lowered on " << lowered << "/" << samples.size()
           << " samples (largest drop " << worst << "), raised on " << raised << "; exactness violations " << exact_fail;
  report("criterion 8 gt boxes never lower and on average raise DICE", o);
}

// A positive click on a missed pixel raises the class's mean probability near the click.
void click_check(const model::Model& m, const std::vector<img::SegSample>& samples) {
  Outcome o;
  int cases = 0, raised = 0;
  for (std::size_t i = 0; i < samples.size() && cases < 50; ++i) {
    const auto& s = samples[i];
    const auto enc = m.encode(s.image);
    model::SegmentOptions opts;
    opts.classes = std::vector<int>(s.present_classes.begin(), s.present_classes.end());
    const auto before = model::segment_auto(m, enc, opts);
    aisam::Rng rng(1000 + i);
    for (std::size_t k = 0; k < before.outputs.size() && cases < 50; ++k) {
      const auto& out = before.outputs[k];
      std::vector<int> missed;
      for (std::size_t p = 0; p < s.mask.pixels.size(); ++p)
        if (s.mask.pixels[p] == out.class_id && !out.mask.pixels[p]) missed.push_back(static_cast<int>(p));
      if (missed.empty()) continue;
      const int pix = missed[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(missed.size()) - 1))];
      const int cx = pix % s.mask.width, cy = pix / s.mask.width;
      ia::UserEdit e;
      e.class_id = out.class_id;
      e.x = cx;
      e.y = cy;
      const auto after = ia::refine(m, enc, ia::build_state({e}, s.mask.width, s.mask.height, m.config().num_classes), opts);
      auto disk_mean = [&](const std::vector<double>& prob) {
        double sum = 0;
        int cnt = 0;
        for (int y = std::max(0, cy - 5); y <= std::min(s.mask.height - 1, cy + 5); ++y)
          for (int x = std::max(0, cx - 5); x <= std::min(s.mask.width - 1, cx + 5); ++x)
            if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= 25) {
              sum += prob[static_cast<std::size_t>(y * s.mask.width + x)];
              ++cnt;
            }
        return sum / cnt;
      };
      ++cases;
      raised += disk_mean(after.outputs[k].probability) > disk_mean(out.probability);
    }
  }
  o.pass = cases == 50 && raised == cases;
  o.detail << raised << "/" << cases << " clicks on missed pixels raised the 5 px neighbourhood probability";
  report("check positive click on a missed region", o);
}

bool same_tree(const fs::path& a, const fs::path& b, std::string& why) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file()) files.push_back(fs::relative(e.path(), a));
  for (const auto& e : fs::recursive_directory_iterator(b))
    if (e.is_regular_file() && !fs::exists(a / fs::relative(e.path(), b))) {
      why = "extra file " + e.path().string();
      return false;
    }
  for (const auto& f : files) {
    if (!fs::exists(b / f) || slurp(a / f) != slurp(b / f)) {
      why = "differs: " + f.string();
      return false;
    }
  }
  return true;
}

void criterion_formats(const img::DatasetIndex& idx, const fs::path& work, const std::string& ckpt) {
  Outcome o;
  std::string why;
  // Dataset: regeneration is byte-identical and every file survives parse -> write.
  const auto again = img::generate_dataset(work / "data_again", static_cast<int>(idx.entries.size()), 64, idx.num_classes, 0);
  if (!same_tree(idx.root, again.root, why)) {
    o.pass = false;
    o.detail << "dataset regeneration " << why << "; ";
  }
  int codec_bad = 0;
  for (const auto& e : idx.entries) {
    const auto s = img::load_sample(idx, e);
    codec_bad += img::write_ppm(s.image) != slurp(idx.root / e.image);
    codec_bad += img::write_pgm(s.mask) != slurp(idx.root / e.mask);
  }
  if (codec_bad) {
    o.pass = false;
    o.detail << codec_bad << " image/mask files changed on round trip; ";
  }
  // Checkpoint: load -> save -> load -> save.
  const auto loaded = train::load_checkpoint(ckpt);
  const auto resaved = (work / "resaved.ckpt").string();
  train::save_checkpoint(resaved, loaded);
  const bool ckpt_ok = slurp(ckpt) == slurp(resaved) &&
                       train::serialize_checkpoint(train::load_checkpoint(resaved)) == slurp(ckpt);
  if (!ckpt_ok) {
    o.pass = false;
    o.detail << "checkpoint round trip changed bytes; ";
  }
  // Golden replay.
  const fs::path golden = fs::path(AISAM_TEST_DATA) / "golden";
  const auto gidx = img::read_index(golden / "data");
  const auto gm = train::model_from_checkpoint(train::load_checkpoint((golden / "model.ckpt").string()));
  std::vector<std::size_t> all(gidx.entries.size());
  std::iota(all.begin(), all.end(), 0);
  const bool auto_ok = json(train::evaluate(*gm, gidx, all)) == json::parse(slurp(golden / "eval.json"));
  const bool gt_ok = json(train::evaluate(gidx, all, gidx.num_classes, [&](const img::SegSample& s) {
                       model::SegmentOptions opt;
                       opt.classes = std::vector<int>(s.present_classes.begin(), s.present_classes.end());
                       return model::segment_auto(*gm, s.image, opt).labels;
                     })) == json::parse(slurp(golden / "eval_gt.json"));
  if (!auto_ok || !gt_ok) {
    o.pass = false;
    o.detail << "golden replay differs; ";
  }
  o.detail << idx.entries.size() << " samples regenerated and re-encoded, checkpoint "
           << (ckpt_ok ? "stable" : "unstable") << ", golden replay " << (auto_ok && gt_ok ? "identical" : "different");
  report("criterion 9 format stability", o);
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "aisam_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);
  std::cout << std::setprecision(6);
  const auto t_start = std::chrono::steady_clock::now();

  criterion_gradients();
  criterion_loss_oracles();
  criterion_added_prompt();

  std::cout << "generating 500 samples and training (this takes a while)" << std::endl;
  const auto idx = img::generate_dataset(work / "data", 500, 64, 4, 0);
  train::TrainConfig cfg;
  cfg.base_lr = 1e-3;
  cfg.total_epochs = 20;
  cfg.warmup_epochs = 2;
  cfg.batch_size = 8;
  cfg.seed = 0;
  const auto main_run = train_run(idx, cfg, work / "main.ckpt");
  const auto rerun = train_run(idx, cfg, work / "rerun.ckpt");
  auto ablated_cfg = cfg;
  ablated_cfg.loss = cfg.loss.without_heuristic();
  const auto ablated_run = train_run(idx, ablated_cfg, work / "ablated.ckpt");

  const auto split = train::split_dataset(idx);
  const auto test_samples = load_all(idx, split.test);
  const auto full = train::model_from_checkpoint(train::load_checkpoint(main_run.ckpt));
  const auto ablated = train::model_from_checkpoint(train::load_checkpoint(ablated_run.ckpt));
  const auto fs_full = model_stats(*full, idx, split.test, test_samples);
  const auto fs_abl = model_stats(*ablated, idx, split.test, test_samples);

  {
    Outcome o;
    const bool identical = slurp(main_run.ckpt) == slurp(rerun.ckpt);
    const double first = main_run.result.log.front()["loss"], last = main_run.result.log.back()["loss"];
    o.pass = fs_full.auto_dice >= 0.85 && main_run.cpu <= 900 && identical && last < first;
    o.detail << "test DICE " << fs_full.auto_dice << ", " << main_run.cpu << " s CPU, re-run "
             << (identical ? "bit-identical" : "DIFFERENT") << ", loss epoch 1 " << first << " -> epoch "
             << main_run.result.log.size() << " " << last;
    report("criterion 4 toy training", o);
  }
  {
    Outcome o;
    const double gap_full = std::abs(fs_full.auto_dice - fs_full.one_hot_dice);
    const double gap_abl = std::abs(fs_abl.auto_dice - fs_abl.one_hot_dice);
    o.pass = gap_full <= 0.02 && gap_abl >= 5 * gap_full;
    o.detail << "full: generalized " << fs_full.auto_dice << " one-hot " << fs_full.one_hot_dice << " gap " << gap_full
             << "; ablated: generalized " << fs_abl.auto_dice << " one-hot " << fs_abl.one_hot_dice << " gap " << gap_abl
             << " (" << (gap_full > 0 ? gap_abl / gap_full : INFINITY) << "x)";
    report("criterion 5 one-hot versus generalized points", o);
  }
  {
    Outcome o;
    o.pass = fs_full.inside >= 0.90 && fs_full.inside - fs_abl.inside >= 0.20;
    o.detail << "points inside their class: full " << 100 * fs_full.inside << "%, ablated " << 100 * fs_abl.inside << "%";
    report("criterion 6 point placement", o);
  }
  {
    Outcome o;
    prompt::AnalysisOptions opt;
    opt.kind = prompt::PromptKind::point;
    opt.points = 1;
    const auto dc = prompt::dataset_confusion(*full, idx, split.test, opt);
    o.pass = dc.correlation > 0.3;
    o.detail << "Pearson " << dc.correlation << " over " << dc.pcm_entries.size() << " paired entries from " << dc.samples
             << " samples (one point per class)";
    for (const auto& [kind, pts, name] : {std::tuple{prompt::PromptKind::point, 4, "4 points"},
                                          std::tuple{prompt::PromptKind::box, 1, "box"}}) {
      prompt::AnalysisOptions other;
      other.kind = kind;
      other.points = pts;
      o.detail << "; " << name << " " << prompt::dataset_confusion(*full, idx, split.test, other).correlation;
    }
    report("criterion 7 PCM correlates with OCM", o);
  }
  criterion_box(*full, test_samples);
  click_check(*full, test_samples);
  criterion_formats(idx, work, main_run.ckpt);

  std::cout << "total " << wall_since(t_start) << " s; " << (failures ? std::to_string(failures) + " failed" : "all passed")
            << std::endl;
  return failures ? 1 : 0;
}
