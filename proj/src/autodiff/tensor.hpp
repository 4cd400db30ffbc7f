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
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace aisam::ad {

using Shape = std::vector<std::size_t>;

std::size_t numel_of(const Shape& shape);
std::string shape_str(const Shape& shape);

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised as soon as an op produces NaN or Inf.
class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Graph;

/// One value in the differentiation graph. Leaves (parameters, inputs) own an
/// accumulated gradient; interior nodes only carry a per-backward adjoint.
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;   // adjoint for the current backward sweep
  std::vector<double> accum;  // accumulated gradient, leaves only
  bool requires_grad = false;
  bool is_leaf = true;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;
  Graph* graph = nullptr;
  std::size_t tape_index = 0;
  std::uint64_t sweep = 0;
};

/// Shared handle to a Node. Copying a Tensor aliases the same value.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor filled(Shape shape, double v, bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t numel() const { return node_->value.size(); }

  std::span<const double> data() const { return node_->value; }
  /// Direct write access, meant for leaves (optimizer updates, perturbation).
  std::span<double> mutable_data() { return node_->value; }
  double item() const;
  double at(std::size_t flat) const { return node_->value.at(flat); }

  bool requires_grad() const { return node_->requires_grad; }
  /// Accumulated gradient of a leaf; empty until a backward pass reaches it.
  std::span<const double> grad() const { return node_->accum; }
  std::span<double> mutable_grad() { return node_->accum; }
  void zero_grad();

  /// Copy of the value as a constant leaf that does not track gradients.
  Tensor detach() const;

  Node* node() const { return node_.get(); }
  const std::shared_ptr<Node>& node_ptr() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

/// Append-only tape. Constructing a Graph makes it the active tape of the
/// calling thread until it is destroyed; ops whose inputs require gradients
/// are recorded on it. Without an active Graph ops run in inference mode.
class Graph {
 public:
  Graph();
  ~Graph();
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Reverse sweep from a scalar loss. Leaf gradients accumulate additively
  /// across calls; each sweep's contribution is summed separately first so
  /// repeating a sweep adds exactly the same amount.
  void backward(const Tensor& loss);

  std::size_t size() const { return tape_.size(); }

  static Graph* active();

  // Used by op construction.
  void record(const std::shared_ptr<Node>& node);

 private:
  std::vector<std::shared_ptr<Node>> tape_;
  Graph* previous_ = nullptr;
};

/// Suspends recording on this thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  Graph* saved_;
};

namespace detail {

using BackwardFn = std::function<void(Node& out)>;

/// Creates an op result, checks finiteness, and records it when any parent
/// requires gradients and a Graph is active.
Tensor make_op(const char* op, Shape shape, std::vector<double> value,
               std::vector<Tensor> parents, BackwardFn backward);

/// Adds `g` into a parent's adjoint if it participates in differentiation.
inline bool wants_grad(const Node* p) { return p->requires_grad && !p->grad.empty(); }

}  // namespace detail

}  // namespace aisam::ad
