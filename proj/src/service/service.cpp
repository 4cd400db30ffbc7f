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

#include "service/service.hpp"

#include <httplib.h>

#include "imaging/netpbm.hpp"
#include "util/digest.hpp"
#include "training/checkpoint.hpp"

namespace aisam::service {

using nlohmann::json;

namespace {

struct HttpError {
  int status;
  std::string message;
};

Response error_response(int status, const std::string& message) {
  return {status, json{{"error", message}}.dump(), false};
}

img::GrayImage scaled_mask(const img::GrayImage& mask) {
  img::GrayImage out = mask;
  for (auto& p : out.pixels) p = p ? 255 : 0;
  return out;
}

std::vector<int> parse_class_list(const json& j) {
  if (!j.is_array()) throw HttpError{400, "'classes' must be an array of integers"};
  std::vector<int> out;
  for (const auto& v : j) {
    if (!v.is_number_integer()) throw HttpError{400, "'classes' must be an array of integers"};
    out.push_back(v.get<int>());
  }
  return out;
}

img::RgbImage decode_image(const json& j, int size) {
  if (!j.is_string()) throw HttpError{400, "'image' must be a base64 string"};
  const auto bytes = base64_decode(j.get<std::string>());
  if (!bytes) throw HttpError{400, "'image' is not valid base64"};
  img::RgbImage image;
  try {
    image = img::parse_ppm(*bytes);
  } catch (const img::FormatError& e) {
    throw HttpError{400, std::string("'image' is not a binary PPM: ") + e.what()};
  }
  if (image.width > size || image.height > size) {
    throw HttpError{413, "image is " + std::to_string(image.width) + "x" + std::to_string(image.height) +
                             ", larger than the " + std::to_string(size) + "x" + std::to_string(size) + " limit"};
  }
  if (image.width != size || image.height != size) {
    throw HttpError{422, "image must be exactly " + std::to_string(size) + "x" + std::to_string(size)};
  }
  return image;
}

int int_field(const json& e, const char* key) {
  if (!e.contains(key) || !e.at(key).is_number_integer()) {
    throw std::invalid_argument(std::string("edit field '") + key + "' must be an integer");
  }
  return e.at(key).get<int>();
}

}  // namespace

std::vector<interactive::UserEdit> parse_edits(const json& edits) {
  if (!edits.is_array()) throw std::invalid_argument("'edits' must be an array");
  std::vector<interactive::UserEdit> out;
  for (const auto& e : edits) {
    if (!e.is_object() || !e.contains("kind") || !e.at("kind").is_string()) {
      throw std::invalid_argument("each edit needs a string 'kind'");
    }
    interactive::UserEdit u;
    const auto kind = e.at("kind").get<std::string>();
    u.class_id = int_field(e, "class_id");
    if (kind == "point") {
      u.kind = interactive::EditKind::point;
      u.x = int_field(e, "x");
      u.y = int_field(e, "y");
      if (e.contains("positive")) {
        if (!e.at("positive").is_boolean()) throw std::invalid_argument("edit field 'positive' must be a boolean");
        u.positive = e.at("positive").get<bool>();
      }
    } else if (kind == "box") {
      u.kind = interactive::EditKind::box;
      u.box = {int_field(e, "x0"), int_field(e, "y0"), int_field(e, "x1"), int_field(e, "y1")};
    } else if (kind == "class_toggle") {
      u.kind = interactive::EditKind::class_toggle;
    } else {
      throw std::invalid_argument("unknown edit kind '" + kind + "'");
    }
    out.push_back(u);
  }
  return out;
}

json result_json(const model::SegmentationResult& r, const std::string& image_id) {
  json masks = json::array();
  for (const auto& o : r.outputs) {
    masks.push_back({{"class_id", o.class_id}, {"pgm", base64_encode(img::write_pgm(scaled_mask(o.mask)))}});
  }
  json points = json::array();
  for (const auto& p : r.points) {
    points.push_back({{"class_id", p.class_id},
                      {"cell", p.cell},
                      {"x", p.x},
                      {"y", p.y},
                      {"positive", p.positive},
                      {"source", p.user ? "user" : "auto"}});
  }
  return {{"image_id", image_id},
          {"classes", r.classes},
          {"class_probs", r.class_probs},
          {"masks", masks},
          {"labels", base64_encode(img::write_pgm(r.labels))},
          {"points", points}};
}

void Service::load_checkpoint(const std::string& path) {
  const auto bytes = img::read_file(path);
  auto ckpt = train::parse_checkpoint(bytes);
  set_model(train::model_from_checkpoint(ckpt), sha256_hex(bytes));
}

void Service::set_model(std::shared_ptr<const model::Model> model, std::string model_hash) {
  std::lock_guard lock(mu_);
  current_ = {std::move(model), std::move(model_hash)};
}

Service::Snapshot Service::snapshot() const {
  std::lock_guard lock(mu_);
  return current_;
}

bool Service::ready() const { return snapshot().model != nullptr; }

Response Service::health() const {
  const auto s = snapshot();
  if (!s.model) return error_response(503, "model not loaded");
  return {200, json{{"status", "ok"}, {"model", s.hash}}.dump(), false};
}

Response Service::segment(std::string_view body) { return run(body, false); }

Response Service::refine(std::string_view body) { return run(body, true); }

Response Service::run(std::string_view body, bool allow_edits) {
  const auto snap = snapshot();
  if (!snap.model) return error_response(503, "model not loaded");
  const auto& model = *snap.model;
  try {
    json req;
    try {
      req = json::parse(body);
    } catch (const json::exception&) {
      throw HttpError{400, "request body is not valid JSON"};
    }
    if (!req.is_object()) throw HttpError{400, "request body must be a JSON object"};

    model::SegmentOptions options;
    if (req.contains("classes")) options.classes = parse_class_list(req.at("classes"));
    if (req.contains("one_hot")) {
      if (!req.at("one_hot").is_boolean()) throw HttpError{400, "'one_hot' must be a boolean"};
      options.one_hot = req.at("one_hot").get<bool>();
    }
    if (options.classes) {
      for (int c : *options.classes) {
        if (c < 1 || c >= model.config().num_classes) throw HttpError{422, "unknown class id " + std::to_string(c)};
      }
    }

    std::vector<interactive::UserEdit> edits;
    if (allow_edits && req.contains("edits")) {
      try {
        edits = parse_edits(req.at("edits"));
      } catch (const std::invalid_argument& e) {
        throw HttpError{400, e.what()};
      }
    }

    std::string image_id;
    SessionCache::Value enc;
    bool hit = false;
    if (req.contains("image")) {
      const auto image = decode_image(req.at("image"), model.config().image_size);
      image_id = sha256_hex(img::write_ppm(image));
      enc = cache_.get(image_id);
      hit = enc != nullptr;
      if (!enc) {
        enc = std::make_shared<const model::EncodedImage>(model.encode(image));
        cache_.put(image_id, enc);
      }
    } else if (allow_edits && req.contains("image_id")) {
      if (!req.at("image_id").is_string()) throw HttpError{400, "'image_id' must be a string"};
      image_id = req.at("image_id").get<std::string>();
      enc = cache_.get(image_id);
      if (!enc) throw HttpError{404, "unknown image_id " + image_id + "; resend the image inline"};
      hit = true;
    } else {
      throw HttpError{400, allow_edits ? "request needs 'image' or 'image_id'" : "request needs 'image'"};
    }

    const int s = model.config().image_size;
    interactive::PromptState state;
    try {
      state = interactive::build_state(edits, s, s, model.config().num_classes);
    } catch (const interactive::EditError& e) {
      throw HttpError{422, e.what()};
    }
    model::SegmentationResult result;
    try {
      result = interactive::refine(model, *enc, state, options);
    } catch (const interactive::EditError& e) {
      throw HttpError{422, e.what()};
    }
    return {200, result_json(result, image_id).dump(), hit};
  } catch (const HttpError& e) {
    return error_response(e.status, e.message);
  } catch (const std::exception& e) {
    return error_response(500, e.what());
  }
}

Response Service::handle(std::string_view method, std::string_view path, std::string_view body) {
  if (path == "/health") return method == "GET" ? health() : error_response(405, "use GET");
  if (path == "/segment") return method == "POST" ? segment(body) : error_response(405, "use POST");
  if (path == "/refine") return method == "POST" ? refine(body) : error_response(405, "use POST");
  return error_response(404, "no route " + std::string(path));
}

struct HttpServer::Impl {
  Service& service;
  httplib::Server server;

  explicit Impl(Service& s) : service(s) {
    server.set_payload_max_length(16 << 20);
    auto reply = [](httplib::Response& res, const Response& r) {
      res.status = r.status;
      res.set_header("X-Cache", r.cache_hit ? "hit" : "miss");
      res.set_content(r.body, "application/json");
    };
    server.Get("/health", [this, reply](const httplib::Request&, httplib::Response& res) { reply(res, service.health()); });
    server.Post("/segment", [this, reply](const httplib::Request& req, httplib::Response& res) {
      reply(res, service.segment(req.body));
    });
    server.Post("/refine", [this, reply](const httplib::Request& req, httplib::Response& res) {
      reply(res, service.refine(req.body));
    });
  }
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) {}
HttpServer::~HttpServer() { stop(); }

bool HttpServer::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }
int HttpServer::bind_any(const std::string& host) { return impl_->server.bind_to_any_port(host); }
bool HttpServer::serve() { return impl_->server.listen_after_bind(); }
void HttpServer::stop() { impl_->server.stop(); }
bool HttpServer::running() const { return impl_->server.is_running(); }

}  // namespace aisam::service
