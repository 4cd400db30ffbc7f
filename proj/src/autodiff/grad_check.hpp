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
#include <functional>
#include <vector>

#include "autodiff/tensor.hpp"

namespace aisam::ad {

using ScalarFn = std::function<Tensor(const std::vector<Tensor>& inputs)>;

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t coordinates = 0;
  // Location of the worst coordinate.
  std::size_t worst_input = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

/// Compares reverse-mode gradients of `f` against central differences
///   |analytic - numeric| / max(1e-12, |analytic| + |numeric|)
/// over every coordinate of every input. Inputs must be leaves that require
/// gradients; their values are restored afterwards and their accumulated
/// gradients are overwritten. Throws NonFiniteError if f yields NaN/Inf.
GradCheckReport grad_check(const ScalarFn& f, std::vector<Tensor> inputs, double eps = 1e-5);

/// One probe direction: a vector per input, shaped like that input.
using Direction = std::vector<std::vector<double>>;

/// Same comparison along whole directions instead of single coordinates:
/// <grad f, v> against (f(x + eps v) - f(x - eps v)) / (2 eps). Each
/// direction counts as one coordinate of the report (worst_index is the
/// direction number).
GradCheckReport grad_check_directions(const ScalarFn& f, std::vector<Tensor> inputs,
                                      const std::vector<Direction>& directions, double eps = 1e-5);

/// Relative error used by grad_check.
double grad_rel_error(double analytic, double numeric);

}  // namespace aisam::ad
