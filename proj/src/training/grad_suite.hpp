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
#include <string>
#include <vector>

#include <json.hpp>

#include "autodiff/grad_check.hpp"

namespace aisam::train {

struct GradCase {
  std::string name;
  ad::GradCheckReport report;
};

/// Central-difference check of every loss and of the full
/// encoder→prompter→decoder loss on a 16×16 image / 4×4 grid model, with
/// inputs drawn from `seed`.
std::vector<GradCase> run_grad_suite(std::uint64_t seed, double eps = 1e-5);

nlohmann::json grad_suite_json(const std::vector<GradCase>& cases);

}  // namespace aisam::train
