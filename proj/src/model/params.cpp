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

#include "model/params.hpp"

#include <stdexcept>

namespace aisam::model {

ad::Tensor ParamStore::add(const std::string& name, ad::Tensor t) {
  for (const auto& p : params_) {
    if (p.name == name) throw std::logic_error("duplicate parameter " + name);
  }
  params_.push_back({name, t});
  return t;
}

ad::Tensor ParamStore::normal(const std::string& name, ad::Shape shape, double stddev) {
  std::vector<double> v(ad::numel_of(shape));
  for (auto& x : v) x = stddev * rng_.normal();
  return add(name, ad::Tensor::from(std::move(shape), std::move(v), true));
}

ad::Tensor ParamStore::constant(const std::string& name, ad::Shape shape, double value) {
  return add(name, ad::Tensor::filled(std::move(shape), value, true));
}

const ad::Tensor& ParamStore::get(const std::string& name) const {
  for (const auto& p : params_) {
    if (p.name == name) return p.tensor;
  }
  throw std::out_of_range("no parameter named " + name);
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.tensor.numel();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

}  // namespace aisam::model
