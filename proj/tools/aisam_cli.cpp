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

// Command-line front end. Links only against the public C API.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "aisam/aisam.h"

namespace {

using nlohmann::json;

constexpr int kRuntimeError = 1;
constexpr int kUsageError = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Owns a string returned by the library.
struct Owned {
  char* p = nullptr;
  ~Owned() { aisam_free(p); }
  std::string str() const { return p ? p : ""; }
};

int report(aisam_status s) {
  if (s == AISAM_OK) return 0;
  std::cerr << "error: " << aisam_last_error() << "\n";
  return kRuntimeError;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<int> parse_ints(const std::string& text, char sep) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(item, &used);
    } catch (const std::exception&) {
      used = std::string::npos;
    }
    if (used != item.size()) throw UsageError("not an integer: '" + item + "'");
    out.push_back(v);
  }
  return out;
}

// C:x0,y0,x1,y1
json parse_box(const std::string& text) {
  static const std::regex re(R"((\d+):(-?\d+),(-?\d+),(-?\d+),(-?\d+))");
  std::smatch m;
  if (!std::regex_match(text, m, re)) throw UsageError("--box expects C:x0,y0,x1,y1, got '" + text + "'");
  return {{"kind", "box"},           {"class_id", std::stoi(m[1])}, {"x0", std::stoi(m[2])},
          {"y0", std::stoi(m[3])},   {"x1", std::stoi(m[4])},       {"y1", std::stoi(m[5])}};
}

// C:x,y,+ or C:x,y,-
json parse_point(const std::string& text) {
  static const std::regex re(R"((\d+):(-?\d+),(-?\d+),([+-]))");
  std::smatch m;
  if (!std::regex_match(text, m, re)) throw UsageError("--point expects C:x,y,+ or C:x,y,-, got '" + text + "'");
  return {{"kind", "point"}, {"class_id", std::stoi(m[1])}, {"x", std::stoi(m[2])},
          {"y", std::stoi(m[3])}, {"positive", m[4] == "+"}};
}

std::pair<std::string, int> parse_addr(const std::string& addr) {
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos || colon == 0) throw UsageError("--addr expects HOST:PORT, got '" + addr + "'");
  const auto port = parse_ints(addr.substr(colon + 1), ',');
  if (port.size() != 1 || port[0] < 0 || port[0] > 65535) throw UsageError("bad port in '" + addr + "'");
  return {addr.substr(0, colon), port[0]};
}

struct Service {
  aisam_service* p = nullptr;
  ~Service() { aisam_service_destroy(p); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"aisam: automatic and interactive segmentation toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(aisam_version()));

  // gen-data
  std::string gen_out;
  int gen_count = 500, gen_size = 64, gen_classes = 4;
  std::uint64_t gen_seed = 0;
  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic segmentation dataset");
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--count", gen_count, "Number of samples")->check(CLI::PositiveNumber);
  gen->add_option("--size", gen_size, "Image side in pixels")->check(CLI::PositiveNumber);
  gen->add_option("--classes", gen_classes, "Class count including background")->check(CLI::Range(2, 255));
  gen->add_option("--seed", gen_seed, "Generator seed");

  // train
  std::string tr_data, tr_out, tr_config, tr_log;
  int tr_epochs = 0;
  std::uint64_t tr_seed = 0;
  auto* tr = app.add_subcommand("train", "Train a model");
  tr->add_option("--data", tr_data, "Dataset directory")->required();
  tr->add_option("--out", tr_out, "Checkpoint path")->required();
  tr->add_option("--config", tr_config, "Training config JSON file")->check(CLI::ExistingFile);
  auto* tr_epochs_opt = tr->add_option("--epochs", tr_epochs, "Total epochs")->check(CLI::PositiveNumber);
  auto* tr_seed_opt = tr->add_option("--seed", tr_seed, "Training seed");
  tr->add_option("--log", tr_log, "Epoch log path (default: CKPT.log)");

  // eval
  std::string ev_data, ev_ckpt, ev_split = "test", ev_classes = "auto";
  bool ev_json = false, ev_one_hot = false;
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint");
  ev->add_option("--data", ev_data, "Dataset directory")->required();
  ev->add_option("--ckpt", ev_ckpt, "Checkpoint path")->required();
  ev->add_flag("--json", ev_json, "Print the report as JSON");
  ev->add_option("--split", ev_split, "test, train or all")->check(CLI::IsMember({"test", "train", "all"}));
  ev->add_option("--classes", ev_classes, "auto (classifier) or gt (ground-truth labels)")
      ->check(CLI::IsMember({"auto", "gt"}));
  ev->add_flag("--one-hot", ev_one_hot, "Decode with one-hot point weights");

  // pcm
  std::string pc_data, pc_ckpt, pc_prompt = "point", pc_out;
  int pc_points = 1;
  auto* pc = app.add_subcommand("pcm", "Prompt and output confusion matrices");
  pc->add_option("--data", pc_data, "Dataset directory")->required();
  pc->add_option("--ckpt", pc_ckpt, "Checkpoint path")->required();
  pc->add_option("--prompt", pc_prompt, "Prompt kind")->check(CLI::IsMember({"point", "box"}));
  pc->add_option("--points", pc_points, "Points per class")->check(CLI::PositiveNumber);
  pc->add_option("--out", pc_out, "CSV output path")->required();

  // infer
  std::string in_ckpt, in_image, in_prefix, in_classes;
  std::vector<std::string> in_boxes, in_points;
  bool in_one_hot = false;
  auto* inf = app.add_subcommand("infer", "Segment one image");
  inf->add_option("--ckpt", in_ckpt, "Checkpoint path")->required();
  inf->add_option("--image", in_image, "Input PPM")->required();
  inf->add_option("--out-prefix", in_prefix, "Output prefix")->required();
  inf->add_option("--classes", in_classes, "Comma-separated class ids (skips the classifier)");
  inf->add_option("--box", in_boxes, "Box prompt C:x0,y0,x1,y1 (repeatable)");
  inf->add_option("--point", in_points, "Point prompt C:x,y,+ or C:x,y,- (repeatable)");
  inf->add_flag("--one-hot", in_one_hot, "Decode with one-hot point weights");

  // serve
  std::string sv_ckpt, sv_addr = "127.0.0.1:8080";
  int sv_cache = 64;
  auto* sv = app.add_subcommand("serve", "Run the HTTP service");
  sv->add_option("--ckpt", sv_ckpt, "Checkpoint path")->required();
  sv->add_option("--addr", sv_addr, "HOST:PORT");
  sv->add_option("--cache-size", sv_cache, "Feature cache entries (0 disables)")->check(CLI::NonNegativeNumber);

  // grad-check
  std::uint64_t gc_seed = 0;
  bool gc_json = false;
  auto* gc = app.add_subcommand("grad-check", "Compare analytic and numeric gradients");
  gc->add_option("--seed", gc_seed, "Seed");
  gc->add_flag("--json", gc_json, "Print the per-case report as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (*gen) {
      const auto s = aisam_generate_dataset(gen_out.c_str(), gen_count, gen_size, gen_classes, gen_seed);
      if (s == AISAM_OK) std::cout << "wrote " << gen_count << " samples to " << gen_out << "\n";
      return report(s);
    }

    if (*tr) {
      json cfg = json::object();
      if (!tr_config.empty()) {
        try {
          cfg = json::parse(read_text(tr_config));
        } catch (const json::exception& e) {
          throw UsageError(tr_config + ": " + e.what());
        }
        if (!cfg.is_object()) throw UsageError(tr_config + ": expected a JSON object");
      }
      if (*tr_epochs_opt) {
        cfg["total_epochs"] = tr_epochs;
        if (!cfg.contains("warmup_epochs")) cfg["warmup_epochs"] = tr_epochs / 10;
      }
      if (*tr_seed_opt) cfg["seed"] = tr_seed;
      const std::string log = tr_log.empty() ? tr_out + ".log" : tr_log;
      Owned summary;
      const auto s = aisam_train(tr_data.c_str(), tr_out.c_str(), cfg.dump().c_str(), log.c_str(), &summary.p);
      if (s != AISAM_OK) return report(s);
      const auto epochs = json::parse(summary.str());
      for (const auto& e : epochs) std::cout << e.dump() << "\n";
      std::cout << "checkpoint " << tr_out << "\n";
      return 0;
    }

    if (*ev) {
      const json opts = {{"split", ev_split}, {"classes", ev_classes}, {"one_hot", ev_one_hot}};
      Owned out;
      const auto s = aisam_evaluate(ev_data.c_str(), ev_ckpt.c_str(), opts.dump().c_str(), &out.p);
      if (s != AISAM_OK) return report(s);
      const auto r = json::parse(out.str());
      if (ev_json) {
        std::cout << r.dump() << "\n";
      } else {
        std::printf("samples %d\nmean_dice %.6f\n", r.at("samples").get<int>(), r.at("mean_dice").get<double>());
        for (const auto& [c, v] : r.at("per_class").items()) {
          if (v.is_null()) std::printf("class%s n/a\n", c.c_str());
          else std::printf("class%s %.6f\n", c.c_str(), v.get<double>());
        }
      }
      return 0;
    }

    if (*pc) {
      Owned out;
      const auto s = aisam_pcm(pc_data.c_str(), pc_ckpt.c_str(), pc_prompt.c_str(), pc_points, pc_out.c_str(), &out.p);
      if (s != AISAM_OK) return report(s);
      const auto r = json::parse(out.str());
      std::cout << "samples " << r.at("samples") << "\ncorrelation " << r.at("correlation") << "\nwrote " << pc_out
                << "\n";
      return 0;
    }

    if (*inf) {
      json req = json::object();
      if (!in_classes.empty()) req["classes"] = parse_ints(in_classes, ',');
      if (in_one_hot) req["one_hot"] = true;
      json edits = json::array();
      for (const auto& b : in_boxes) edits.push_back(parse_box(b));
      for (const auto& p : in_points) edits.push_back(parse_point(p));
      if (!edits.empty()) req["edits"] = edits;
      Service svc;
      if (auto s = aisam_service_create(in_ckpt.c_str(), 0, &svc.p); s != AISAM_OK) return report(s);
      Owned out;
      const auto s = aisam_infer(svc.p, in_image.c_str(), req.dump().c_str(), in_prefix.c_str(), &out.p);
      if (s != AISAM_OK) return report(s);
      const auto r = json::parse(out.str());
      std::cout << "classes " << r.at("classes").dump() << "\nwrote " << in_prefix << ".json\n";
      return 0;
    }

    if (*sv) {
      const auto [host, port] = parse_addr(sv_addr);
      Service svc;
      if (auto s = aisam_service_create(sv_ckpt.c_str(), sv_cache, &svc.p); s != AISAM_OK) return report(s);
      std::cerr << "listening on " << host << ":" << port << "\n";
      return report(aisam_service_serve(svc.p, host.c_str(), port));
    }

    if (*gc) {
      const double threshold = 1e-5;
      double worst = 0;
      Owned out;
      const auto s = aisam_grad_check(gc_seed, threshold, &worst, &out.p);
      if (s != AISAM_OK && s != AISAM_ERR_CHECK_FAILED) return report(s);
      if (gc_json) {
        std::cout << out.str() << "\n";
      } else {
        for (const auto& c : json::parse(out.str()).at("cases")) {
          std::printf("%-18s %.3e\n", c.at("name").get<std::string>().c_str(), c.at("max_rel_error").get<double>());
        }
        std::printf("max_rel_error %.3e (threshold %.0e)\n", worst, threshold);
      }
      if (s == AISAM_ERR_CHECK_FAILED) {
        std::cerr << "FAILED: " << aisam_last_error() << "\n";
        return kRuntimeError;
      }
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kUsageError;
}
