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

#include "autodiff/tensor.hpp"

#include <cmath>
#include <sstream>

namespace aisam::ad {

namespace {
thread_local Graph* g_active = nullptr;
std::uint64_t next_sweep() {
  static thread_local std::uint64_t counter = 0;
  return ++counter;
}
}  // namespace

std::size_t numel_of(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  if (numel_of(shape) != values.size()) {
    throw ShapeError("tensor shape " + shape_str(shape) + " does not match " +
                     std::to_string(values.size()) + " values");
  }
  for (auto d : shape) {
    if (d == 0) throw ShapeError("tensor dimensions must be positive: " + shape_str(shape));
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return filled(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::filled(Shape shape, double v, bool requires_grad) {
  auto n = numel_of(shape);
  return from(std::move(shape), std::vector<double>(n, v), requires_grad);
}

Tensor Tensor::scalar(double v, bool requires_grad) { return from({1}, {v}, requires_grad); }

double Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape_str(shape()));
  return node_->value[0];
}

void Tensor::zero_grad() { std::fill(node_->accum.begin(), node_->accum.end(), 0.0); }

Tensor Tensor::detach() const { return from(shape(), node_->value, false); }

Graph::Graph() : previous_(g_active) { g_active = this; }

Graph::~Graph() {
  g_active = previous_;
  // Break closure-held references eagerly so long tapes free promptly.
  for (auto& n : tape_) {
    n->backward_fn = nullptr;
    n->graph = nullptr;
  }
}

Graph* Graph::active() { return g_active; }

void Graph::record(const std::shared_ptr<Node>& node) {
  node->graph = this;
  node->tape_index = tape_.size();
  node->is_leaf = false;
  tape_.push_back(node);
}

void Graph::backward(const Tensor& loss) {
  Node* root = loss.node();
  if (root == nullptr || root->graph != this) {
    throw std::invalid_argument("backward: loss was not recorded on this graph");
  }
  if (root->value.size() != 1) {
    throw ShapeError("backward: loss must be scalar, got " + shape_str(root->shape));
  }
  if (!std::isfinite(root->value[0])) throw NonFiniteError("backward: loss is not finite");

  const auto sweep = next_sweep();
  std::vector<Node*> leaves;
  for (std::size_t i = 0; i <= root->tape_index; ++i) {
    Node* n = tape_[i].get();
    n->grad.assign(n->value.size(), 0.0);
    for (auto& p : n->parents) {
      if (p->is_leaf && p->requires_grad && p->sweep != sweep) {
        p->sweep = sweep;
        p->grad.assign(p->value.size(), 0.0);
        leaves.push_back(p.get());
      }
    }
  }
  root->grad[0] = 1.0;
  for (std::size_t i = root->tape_index + 1; i-- > 0;) {
    Node* n = tape_[i].get();
    if (n->backward_fn) n->backward_fn(*n);
  }
  for (Node* leaf : leaves) {
    if (leaf->accum.size() != leaf->value.size()) leaf->accum.assign(leaf->value.size(), 0.0);
    for (std::size_t k = 0; k < leaf->grad.size(); ++k) leaf->accum[k] += leaf->grad[k];
    leaf->grad.clear();
  }
}

NoGradGuard::NoGradGuard() : saved_(g_active) { g_active = nullptr; }
NoGradGuard::~NoGradGuard() { g_active = saved_; }

namespace detail {

Tensor make_op(const char* op, Shape shape, std::vector<double> value, std::vector<Tensor> parents,
               BackwardFn backward) {
  for (double v : value) {
    if (!std::isfinite(v)) throw NonFiniteError(std::string("non-finite value produced by ") + op);
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->op = op;
  Graph* g = Graph::active();
  bool track = false;
  if (g != nullptr) {
    for (const auto& p : parents) track = track || p.requires_grad();
  }
  if (track) {
    node->requires_grad = true;
    for (auto& p : parents) node->parents.push_back(p.node_ptr());
    node->backward_fn = std::move(backward);
    g->record(node);
  }
  return Tensor(std::move(node));
}

}  // namespace detail

}  // namespace aisam::ad
