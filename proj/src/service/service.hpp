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

#include <memory>
#include <mutex>
#include <string>
#include <string_view>

#include <json.hpp>

#include "interactive/interactive.hpp"
#include "model/segment.hpp"
#include "service/cache.hpp"

namespace aisam::service {

struct Response {
  int status = 200;
  std::string body;
  bool cache_hit = false;
};

/// Request handlers over one immutable model. Handlers are safe to call
/// concurrently; the feature cache is the only shared mutable state.
class Service {
 public:
  explicit Service(std::size_t cache_capacity = 64) : cache_(cache_capacity) {}

  /// Loads a checkpoint; the model hash is the SHA-256 of the file bytes.
  void load_checkpoint(const std::string& path);
  void set_model(std::shared_ptr<const model::Model> model, std::string model_hash);
  bool ready() const;

  Response health() const;
  /// POST /segment: {"image": base64 PPM, "classes"?: [ids], "one_hot"?: bool}
  Response segment(std::string_view body);
  /// POST /refine: {"image_id" | "image", "classes"?, "one_hot"?, "edits": [...]}
  Response refine(std::string_view body);
  /// Routes by method and path; unknown routes give 404.
  Response handle(std::string_view method, std::string_view path, std::string_view body);

  SessionCache& cache() { return cache_; }

 private:
  struct Snapshot {
    std::shared_ptr<const model::Model> model;
    std::string hash;
  };
  Snapshot snapshot() const;
  Response run(std::string_view body, bool allow_edits);

  mutable std::mutex mu_;
  Snapshot current_;
  SessionCache cache_;
};

/// Serializes a segmentation result as the /segment response body.
nlohmann::json result_json(const model::SegmentationResult& result, const std::string& image_id);

/// Parses the "edits" array of a refine request. Throws std::invalid_argument
/// on malformed entries.
std::vector<interactive::UserEdit> parse_edits(const nlohmann::json& edits);

/// Blocking HTTP front end.
class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds and serves until stop(). Returns false if binding fails.
  bool listen(const std::string& host, int port);
  /// Binds to a free port and returns it, without serving yet; -1 on failure.
  int bind_any(const std::string& host);
  /// Serves on a socket bound by bind_any until stop().
  bool serve();
  void stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace aisam::service
