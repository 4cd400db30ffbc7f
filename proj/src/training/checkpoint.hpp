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
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "model/model.hpp"

namespace aisam::train {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StoredTensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<float> values;
};

// Byte layout (little-endian): "AISAM1", u8 version (1), u32 tensor count;
// per tensor u16 name length, name, u8 dtype (0 = f32), u8 rank, u32 dims,
// payload; then u32 metadata length and the metadata JSON.
struct Checkpoint {
  std::vector<StoredTensor> tensors;
  nlohmann::json metadata = nlohmann::json::object();
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
/// Throws CheckpointError naming the byte offset of the problem.
Checkpoint parse_checkpoint(std::string_view bytes);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

/// Snapshot of the model parameters (narrowed to f32). The model config is
/// stored under metadata["model"].
Checkpoint make_checkpoint(const model::Model& model, nlohmann::json metadata = nlohmann::json::object());
/// Builds a model from metadata["model"] and copies every tensor in.
std::unique_ptr<model::Model> model_from_checkpoint(const Checkpoint& ckpt);
/// Copies stored values into an existing model; names and shapes must match.
void restore_params(model::Model& model, const Checkpoint& ckpt);

}  // namespace aisam::train
