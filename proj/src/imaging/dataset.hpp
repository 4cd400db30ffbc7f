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

#include <cstdint>
#include <filesystem>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "imaging/netpbm.hpp"

namespace aisam::img {

class NotFoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SegSample {
  std::string id;
  RgbImage image;
  GrayImage mask;  // class id per pixel, 0 = background
  std::set<int> present_classes;
};

struct IndexEntry {
  std::string id;
  std::string image;  // relative to the dataset root
  std::string mask;
  std::vector<int> classes;
};

struct DatasetIndex {
  std::filesystem::path root;
  std::vector<IndexEntry> entries;
  int num_classes = 0;  // including background
};

/// Nonzero class ids occurring in a mask.
std::set<int> classes_in(const GrayImage& mask);

/// Checks the SegSample invariants against a class count.
void validate_sample(const SegSample& sample, int num_classes);

/// Deterministic synthetic sample `index` of a dataset with the given seed.
SegSample generate_sample(int index, int size, int num_classes, std::uint64_t seed);

/// Writes `<out>/index.jsonl`, `<out>/images/<id>.ppm`, `<out>/masks/<id>.pgm`
/// and `<out>/dataset.json` (generation parameters).
DatasetIndex generate_dataset(const std::filesystem::path& out_dir, int count, int size, int num_classes,
                              std::uint64_t seed);

/// Reads index.jsonl and checks that ids are unique and files exist. The class
/// count comes from dataset.json when present, otherwise 1 + the largest id.
DatasetIndex read_index(const std::filesystem::path& root);

SegSample load_sample(const DatasetIndex& index, const std::string& id);
SegSample load_sample(const DatasetIndex& index, const IndexEntry& entry);

}  // namespace aisam::img
