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

#include "training/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "imaging/netpbm.hpp"

namespace aisam::train {

namespace {

constexpr std::string_view kMagic = "AISAM1";
constexpr std::uint8_t kVersion = 1;
constexpr std::uint8_t kDtypeF32 = 0;

template <typename T>
void put(std::string& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(std::string_view b) : bytes_(b) {}

  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }

  std::string_view take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t pos() const { return pos_; }

  [[noreturn]] void fail(const std::string& msg) const {
    throw CheckpointError("checkpoint: " + msg + " at offset " + std::to_string(pos_));
  }

 private:
  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw CheckpointError(std::string("checkpoint: truncated ") + what + " at offset " + std::to_string(pos_) +
                            " (need " + std::to_string(n) + " bytes, have " + std::to_string(bytes_.size() - pos_) + ")");
    }
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  std::string out(kMagic);
  put<std::uint8_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& t : ckpt.tensors) {
    if (t.name.size() > 0xffff) throw CheckpointError("checkpoint: tensor name too long: " + t.name);
    if (t.shape.size() > 0xff) throw CheckpointError("checkpoint: tensor rank too large: " + t.name);
    put<std::uint16_t>(out, static_cast<std::uint16_t>(t.name.size()));
    out += t.name;
    put<std::uint8_t>(out, kDtypeF32);
    put<std::uint8_t>(out, static_cast<std::uint8_t>(t.shape.size()));
    std::size_t n = 1;
    for (auto d : t.shape) {
      put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
      n *= d;
    }
    if (n != t.values.size()) throw CheckpointError("checkpoint: shape does not match values for " + t.name);
    for (float f : t.values) put<std::uint32_t>(out, std::bit_cast<std::uint32_t>(f));
  }
  const auto meta = ckpt.metadata.dump();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(meta.size()));
  out += meta;
  return out;
}

Checkpoint parse_checkpoint(std::string_view bytes) {
  Reader r(bytes);
  if (r.take(kMagic.size(), "magic") != kMagic) {
    throw CheckpointError("checkpoint: bad magic at offset 0");
  }
  const auto version = r.get<std::uint8_t>("version");
  if (version != kVersion) r.fail("unsupported version " + std::to_string(version));
  const auto count = r.get<std::uint32_t>("tensor count");
  Checkpoint ckpt;
  for (std::uint32_t i = 0; i < count; ++i) {
    StoredTensor t;
    const auto name_len = r.get<std::uint16_t>("tensor name length");
    t.name = std::string(r.take(name_len, "tensor name"));
    const auto dtype = r.get<std::uint8_t>("dtype");
    if (dtype != kDtypeF32) r.fail("unknown dtype " + std::to_string(dtype) + " for " + t.name);
    const auto rank = r.get<std::uint8_t>("rank");
    std::size_t n = 1;
    for (int d = 0; d < rank; ++d) {
      t.shape.push_back(r.get<std::uint32_t>("dims"));
      n *= t.shape.back();
    }
    if (n > bytes.size()) r.fail("tensor " + t.name + " larger than the file");
    const auto payload = r.take(n * 4, "tensor payload");
    t.values.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      std::uint32_t u = 0;
      for (int b = 0; b < 4; ++b) u |= static_cast<std::uint32_t>(static_cast<unsigned char>(payload[k * 4 + b])) << (8 * b);
      t.values[k] = std::bit_cast<float>(u);
    }
    ckpt.tensors.push_back(std::move(t));
  }
  const auto meta_len = r.get<std::uint32_t>("metadata length");
  const auto meta = r.take(meta_len, "metadata");
  if (r.pos() != bytes.size()) r.fail("trailing bytes after metadata");
  try {
    ckpt.metadata = nlohmann::json::parse(meta);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint: metadata is not valid JSON: ") + e.what());
  }
  return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) { img::write_file(path, serialize_checkpoint(ckpt)); }

Checkpoint load_checkpoint(const std::string& path) { return parse_checkpoint(img::read_file(path)); }

Checkpoint make_checkpoint(const model::Model& model, nlohmann::json metadata) {
  Checkpoint ckpt;
  for (const auto& p : model.params().all()) {
    StoredTensor t{p.name, p.tensor.shape(), {}};
    const auto v = p.tensor.data();
    t.values.reserve(v.size());
    for (double x : v) t.values.push_back(static_cast<float>(x));
    ckpt.tensors.push_back(std::move(t));
  }
  metadata["model"] = model.config();
  ckpt.metadata = std::move(metadata);
  return ckpt;
}

void restore_params(model::Model& model, const Checkpoint& ckpt) {
  auto& params = model.params().all();
  if (params.size() != ckpt.tensors.size()) {
    throw CheckpointError("checkpoint: expected " + std::to_string(params.size()) + " tensors, found " +
                          std::to_string(ckpt.tensors.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& t = ckpt.tensors[i];
    auto& p = params[i];
    if (t.name != p.name || t.shape != p.tensor.shape()) {
      throw CheckpointError("checkpoint: tensor " + std::to_string(i) + " is " + t.name + " " + ad::shape_str(t.shape) +
                            ", model expects " + p.name + " " + ad::shape_str(p.tensor.shape()));
    }
    auto dst = p.tensor.mutable_data();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = static_cast<double>(t.values[k]);
  }
}

std::unique_ptr<model::Model> model_from_checkpoint(const Checkpoint& ckpt) {
  if (!ckpt.metadata.contains("model")) throw CheckpointError("checkpoint: metadata has no model config");
  model::ModelConfig cfg;
  try {
    cfg = ckpt.metadata.at("model").get<model::ModelConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint: bad model config: ") + e.what());
  }
  auto m = std::make_unique<model::Model>(cfg);
  restore_params(*m, ckpt);
  return m;
}

}  // namespace aisam::train
