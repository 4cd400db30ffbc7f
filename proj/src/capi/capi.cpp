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

#include "aisam/aisam.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <string>

#include <json.hpp>

#include "autodiff/tensor.hpp"
#include "imaging/dataset.hpp"
#include "imaging/netpbm.hpp"
#include "prompt/analysis.hpp"
#include "service/service.hpp"
#include "training/checkpoint.hpp"
#include "training/grad_suite.hpp"
#include "training/trainer.hpp"

struct aisam_service {
  aisam::service::Service impl;
  explicit aisam_service(std::size_t cache) : impl(cache) {}
};

namespace {

using nlohmann::json;
using namespace aisam;

thread_local std::string g_last_error;

class StatusError : public std::runtime_error {
 public:
  StatusError(aisam_status s, const std::string& msg) : std::runtime_error(msg), status(s) {}
  aisam_status status;
};

aisam_status fail(aisam_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

template <typename F>
aisam_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return AISAM_OK;
  } catch (const StatusError& e) {
    return fail(e.status, e.what());
  } catch (const img::NotFoundError& e) {
    return fail(AISAM_ERR_NOT_FOUND, e.what());
  } catch (const img::IoError& e) {
    return fail(AISAM_ERR_IO, e.what());
  } catch (const img::FormatError& e) {
    return fail(AISAM_ERR_FORMAT, e.what());
  } catch (const img::ValidationError& e) {
    return fail(AISAM_ERR_FORMAT, e.what());
  } catch (const train::CheckpointError& e) {
    return fail(AISAM_ERR_FORMAT, e.what());
  } catch (const json::exception& e) {
    return fail(AISAM_ERR_FORMAT, std::string("JSON: ") + e.what());
  } catch (const train::TrainingError& e) {
    return fail(AISAM_ERR_NUMERIC, e.what());
  } catch (const ad::NonFiniteError& e) {
    return fail(AISAM_ERR_NUMERIC, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(AISAM_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::out_of_range& e) {
    return fail(AISAM_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::exception& e) {
    return fail(AISAM_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(AISAM_ERR_INTERNAL, "unknown error");
  }
}

char* dup_string(const std::string& s) {
  auto* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size());
  out[s.size()] = '\0';
  return out;
}

void set_out(char** out, const std::string& s) {
  if (out) *out = dup_string(s);
}

void require(const void* p, const char* name) {
  if (!p) throw StatusError(AISAM_ERR_INVALID_ARGUMENT, std::string(name) + " must not be NULL");
}

json parse_object(const char* text, const char* what) {
  if (!text || !*text) return json::object();
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw StatusError(AISAM_ERR_FORMAT, std::string(what) + " is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw StatusError(AISAM_ERR_INVALID_ARGUMENT, std::string(what) + " must be a JSON object");
  return j;
}

std::vector<std::size_t> pick_split(const img::DatasetIndex& index, const std::string& split) {
  const auto s = train::split_dataset(index);
  std::vector<std::size_t> out;
  if (split == "test") out = s.test;
  else if (split == "train") out = s.train;
  else if (split == "all") {
    out.resize(index.entries.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = i;
  } else {
    throw StatusError(AISAM_ERR_INVALID_ARGUMENT, "split must be test, train or all, got '" + split + "'");
  }
  if (out.empty()) throw StatusError(AISAM_ERR_INVALID_ARGUMENT, "the " + split + " split of the dataset is empty");
  return out;
}

aisam_status status_for_http(int code) {
  switch (code) {
    case 404: return AISAM_ERR_NOT_FOUND;
    case 400: return AISAM_ERR_FORMAT;
    case 413:
    case 422: return AISAM_ERR_INVALID_ARGUMENT;
    default: return AISAM_ERR_INTERNAL;
  }
}

}  // namespace

extern "C" {

const char* aisam_last_error(void) { return g_last_error.c_str(); }

const char* aisam_version(void) { return "0.1.0"; }

void aisam_free(char* s) { std::free(s); }

aisam_status aisam_generate_dataset(const char* out_dir, int count, int size, int num_classes, uint64_t seed) {
  return guarded([&] {
    require(out_dir, "out_dir");
    img::generate_dataset(out_dir, count, size, num_classes, seed);
  });
}

aisam_status aisam_train(const char* data_dir, const char* out_ckpt, const char* config_json, const char* log_path,
                         char** summary_json) {
  return guarded([&] {
    require(data_dir, "data_dir");
    require(out_ckpt, "out_ckpt");
    const auto cfg = parse_object(config_json, "training config").get<train::TrainConfig>();
    const auto index = img::read_index(data_dir);
    const auto result = train::train(index, cfg, out_ckpt, log_path ? log_path : "");
    set_out(summary_json, json(result.log).dump());
  });
}

aisam_status aisam_evaluate(const char* data_dir, const char* ckpt_path, const char* options_json, char** report_json) {
  return guarded([&] {
    require(data_dir, "data_dir");
    require(ckpt_path, "ckpt_path");
    const auto opts = parse_object(options_json, "evaluation options");
    const auto index = img::read_index(data_dir);
    const auto model = train::model_from_checkpoint(train::load_checkpoint(ckpt_path));
    if (model->config().num_classes != index.num_classes) {
      throw StatusError(AISAM_ERR_INVALID_ARGUMENT, "checkpoint has " + std::to_string(model->config().num_classes) +
                                                        " classes, dataset has " + std::to_string(index.num_classes));
    }
    const auto entries = pick_split(index, opts.value("split", std::string("test")));
    model::SegmentOptions seg;
    seg.one_hot = opts.value("one_hot", false);
    const auto classes = opts.value("classes", std::string("auto"));
    if (classes != "auto" && classes != "gt") throw StatusError(AISAM_ERR_INVALID_ARGUMENT, "classes must be auto or gt");
    const auto report = train::evaluate(index, entries, model->config().num_classes, [&](const img::SegSample& s) {
      auto o = seg;
      if (classes == "gt") o.classes = std::vector<int>(s.present_classes.begin(), s.present_classes.end());
      return model::segment_auto(*model, s.image, o).labels;
    });
    set_out(report_json, json(report).dump());
  });
}

aisam_status aisam_pcm(const char* data_dir, const char* ckpt_path, const char* prompt_kind, int points,
                       const char* out_csv, char** summary_json) {
  return guarded([&] {
    require(data_dir, "data_dir");
    require(ckpt_path, "ckpt_path");
    require(prompt_kind, "prompt_kind");
    require(out_csv, "out_csv");
    prompt::AnalysisOptions opts;
    const std::string kind = prompt_kind;
    if (kind == "point") opts.kind = prompt::PromptKind::point;
    else if (kind == "box") opts.kind = prompt::PromptKind::box;
    else throw StatusError(AISAM_ERR_INVALID_ARGUMENT, "prompt must be point or box, got '" + kind + "'");
    if (points < 1) throw StatusError(AISAM_ERR_INVALID_ARGUMENT, "points must be positive");
    opts.points = points;
    const auto index = img::read_index(data_dir);
    const auto model = train::model_from_checkpoint(train::load_checkpoint(ckpt_path));
    const auto entries = pick_split(index, "test");
    const auto dc = prompt::dataset_confusion(*model, index, entries, opts);
    std::ofstream out(out_csv, std::ios::binary | std::ios::trunc);
    if (!out) throw img::IoError(std::string("cannot write ") + out_csv);
    prompt::write_confusion_csv(out, prompt::class_names(model->config().num_classes), dc.pcm, dc.ocm);
    if (!out) throw img::IoError(std::string("write failed for ") + out_csv);
    auto matrix = [](const prompt::ClassMatrix& m) {
      json rows = json::array();
      for (int i = 0; i < m.n; ++i) {
        json row = json::array();
        for (int j = 0; j < m.n; ++j) row.push_back(m.defined(i, j) ? json(m.at(i, j)) : json());
        rows.push_back(row);
      }
      return rows;
    };
    set_out(summary_json, json{{"samples", dc.samples},
                               {"pairs", dc.pcm_entries.size()},
                               {"correlation", dc.correlation},
                               {"pcm", matrix(dc.pcm)},
                               {"ocm", matrix(dc.ocm)}}
                              .dump());
  });
}

aisam_status aisam_grad_check(uint64_t seed, double threshold, double* max_rel_error, char** report_json) {
  double worst = 0;
  std::string report;
  auto s = guarded([&] {
    const auto cases = train::run_grad_suite(seed);
    for (const auto& c : cases) worst = std::max(worst, c.report.max_rel_error);
    report = json{{"seed", seed}, {"max_rel_error", worst}, {"cases", train::grad_suite_json(cases)}}.dump();
    set_out(report_json, report);
  });
  if (max_rel_error) *max_rel_error = s == AISAM_OK ? worst : std::numeric_limits<double>::quiet_NaN();
  if (s == AISAM_OK && !(worst < threshold)) {
    return fail(AISAM_ERR_CHECK_FAILED, "max relative error " + std::to_string(worst) + " exceeds " + std::to_string(threshold));
  }
  return s;
}

aisam_status aisam_service_create(const char* ckpt_path, int cache_size, aisam_service** out) {
  return guarded([&] {
    require(ckpt_path, "ckpt_path");
    require(out, "out");
    if (cache_size < 0) throw StatusError(AISAM_ERR_INVALID_ARGUMENT, "cache size must be non-negative");
    auto svc = std::make_unique<aisam_service>(static_cast<std::size_t>(cache_size));
    svc->impl.load_checkpoint(ckpt_path);
    *out = svc.release();
  });
}

void aisam_service_destroy(aisam_service* svc) { delete svc; }

aisam_status aisam_service_handle(aisam_service* svc, const char* method, const char* path, const char* body,
                                  size_t body_len, int* http_status, char** response_body) {
  return guarded([&] {
    require(svc, "svc");
    require(method, "method");
    require(path, "path");
    const auto r = svc->impl.handle(method, path, body ? std::string_view(body, body_len) : std::string_view());
    if (http_status) *http_status = r.status;
    set_out(response_body, r.body);
  });
}

aisam_status aisam_service_serve(aisam_service* svc, const char* host, int port) {
  return guarded([&] {
    require(svc, "svc");
    require(host, "host");
    service::HttpServer server(svc->impl);
    if (!server.listen(host, port)) {
      throw StatusError(AISAM_ERR_IO, "cannot listen on " + std::string(host) + ":" + std::to_string(port));
    }
  });
}

aisam_status aisam_infer(aisam_service* svc, const char* image_path, const char* request_json, const char* out_prefix,
                         char** response_json) {
  return guarded([&] {
    require(svc, "svc");
    require(image_path, "image_path");
    require(out_prefix, "out_prefix");
    auto req = parse_object(request_json, "request");
    req["image"] = service::base64_encode(img::read_file(image_path));
    const auto r = svc->impl.refine(req.dump());
    if (r.status != 200) {
      std::string msg = r.body;
      try {
        msg = json::parse(r.body).at("error").get<std::string>();
      } catch (const json::exception&) {
      }
      throw StatusError(status_for_http(r.status), msg);
    }
    const std::string prefix = out_prefix;
    img::write_file(prefix + ".json", r.body);
    const auto body = json::parse(r.body);
    img::write_file(prefix + "_labels.pgm", *service::base64_decode(body.at("labels").get<std::string>()));
    for (const auto& m : body.at("masks")) {
      img::write_file(prefix + "_class" + std::to_string(m.at("class_id").get<int>()) + ".pgm",
                      *service::base64_decode(m.at("pgm").get<std::string>()));
    }
    set_out(response_json, r.body);
  });
}

}  // extern "C"
