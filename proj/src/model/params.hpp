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
#include <utility>
#include <vector>

#include "autodiff/tensor.hpp"
#include "imaging/rng.hpp"

namespace aisam::model {

struct NamedTensor {
  std::string name;
  ad::Tensor tensor;
};

/// Ordered collection of trainable leaves. Registration order is the
/// checkpoint order and the optimizer order.
class ParamStore {
 public:
  explicit ParamStore(std::uint64_t seed = 0) : rng_(seed) {}

  ad::Tensor normal(const std::string& name, ad::Shape shape, double stddev);
  ad::Tensor constant(const std::string& name, ad::Shape shape, double value);

  std::vector<NamedTensor>& all() { return params_; }
  const std::vector<NamedTensor>& all() const { return params_; }
  const ad::Tensor& get(const std::string& name) const;
  std::size_t scalar_count() const;
  void zero_grad();

 private:
  ad::Tensor add(const std::string& name, ad::Tensor t);

  std::vector<NamedTensor> params_;
  Rng rng_;
};

}  // namespace aisam::model
