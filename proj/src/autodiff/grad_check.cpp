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

#include "autodiff/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace aisam::ad {

double grad_rel_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1e-12, std::abs(analytic) + std::abs(numeric));
}

namespace {

double evaluate(const ScalarFn& f, const std::vector<Tensor>& inputs) {
  NoGradGuard no_grad;
  const double v = f(inputs).item();
  if (!std::isfinite(v)) throw NonFiniteError("grad_check: function returned a non-finite value");
  return v;
}

}  // namespace

GradCheckReport grad_check(const ScalarFn& f, std::vector<Tensor> inputs, double eps) {
  for (auto& t : inputs) {
    if (!t.requires_grad()) throw std::invalid_argument("grad_check: inputs must require gradients");
    t.zero_grad();
  }
  {
    Graph graph;
    graph.backward(f(inputs));
  }
  GradCheckReport report;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    auto& t = inputs[k];
    const std::vector<double> analytic = t.grad().empty() ? std::vector<double>(t.numel(), 0.0)
                                                          : std::vector<double>(t.grad().begin(), t.grad().end());
    auto values = t.mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + eps;
      const double up = evaluate(f, inputs);
      values[i] = saved - eps;
      const double down = evaluate(f, inputs);
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double err = grad_rel_error(analytic[i], numeric);
      ++report.coordinates;
      if (err > report.max_rel_error || report.coordinates == 1) {
        report.max_rel_error = err;
        report.worst_input = k;
        report.worst_index = i;
        report.worst_analytic = analytic[i];
        report.worst_numeric = numeric;
      }
    }
  }
  return report;
}

GradCheckReport grad_check_directions(const ScalarFn& f, std::vector<Tensor> inputs,
                                      const std::vector<Direction>& directions, double eps) {
  for (auto& t : inputs) {
    if (!t.requires_grad()) throw std::invalid_argument("grad_check: inputs must require gradients");
    t.zero_grad();
  }
  {
    Graph graph;
    graph.backward(f(inputs));
  }
  std::vector<std::vector<double>> saved;
  for (const auto& t : inputs) saved.emplace_back(t.data().begin(), t.data().end());
  auto shift = [&](const Direction& v, double step) {
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      auto values = inputs[k].mutable_data();
      for (std::size_t i = 0; i < values.size(); ++i) values[i] = saved[k][i] + step * v[k][i];
    }
  };
  GradCheckReport report;
  for (std::size_t d = 0; d < directions.size(); ++d) {
    const auto& v = directions[d];
    if (v.size() != inputs.size()) throw std::invalid_argument("grad_check_directions: direction/input count mismatch");
    double analytic = 0.0;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      if (v[k].size() != inputs[k].numel()) throw ShapeError("grad_check_directions: direction size mismatch");
      const auto g = inputs[k].grad();
      if (g.empty()) continue;
      for (std::size_t i = 0; i < g.size(); ++i) analytic += g[i] * v[k][i];
    }
    shift(v, eps);
    const double up = evaluate(f, inputs);
    shift(v, -eps);
    const double down = evaluate(f, inputs);
    shift(v, 0.0);
    const double numeric = (up - down) / (2.0 * eps);
    const double err = grad_rel_error(analytic, numeric);
    ++report.coordinates;
    if (err > report.max_rel_error || report.coordinates == 1) {
      report.max_rel_error = err;
      report.worst_index = d;
      report.worst_analytic = analytic;
      report.worst_numeric = numeric;
    }
  }
  return report;
}

}  // namespace aisam::ad
