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

#include <cstddef>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>

#include "model/model.hpp"

namespace aisam::service {

std::string base64_encode(std::string_view bytes);
/// Strict decoding; std::nullopt on any malformed input.
std::optional<std::string> base64_decode(std::string_view text);

/// Bounded LRU map from image hash to encoded features. Capacity 0 disables
/// caching. Safe for concurrent use.
class SessionCache {
 public:
  using Value = std::shared_ptr<const model::EncodedImage>;

  explicit SessionCache(std::size_t capacity = 64) : capacity_(capacity) {}

  Value get(const std::string& key);
  void put(const std::string& key, Value value);
  std::size_t size() const;
  std::size_t capacity() const { return capacity_; }
  std::size_t hits() const;
  std::size_t misses() const;

 private:
  using Order = std::list<std::string>;
  struct Slot {
    Value value;
    Order::iterator pos;
  };

  std::size_t capacity_;
  mutable std::mutex mu_;
  Order order_;  // most recent first
  std::unordered_map<std::string, Slot> map_;
  std::size_t hits_ = 0, misses_ = 0;
};

}  // namespace aisam::service
