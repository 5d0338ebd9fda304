/* Copyright 2026 The tsadv Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

// Define-by-run reverse-mode autodiff over small dense tensors.
//
// A Graph is a tape: every op appends a node whose inputs were appended
// earlier, so insertion order is a topological order. Nodes record shapes at
// build time (shape errors surface immediately); values are computed by
// forward(), which may be re-run with new bindings for named inputs.
//
// A Graph is single-owner. Build a fresh one per optimizer step.

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "tsadv/diffkit/tensor.hpp"

namespace tsadv::diffkit {

class Graph;

enum class OpKind : std::uint8_t {
  kParameter,
  kConstant,
  kInput,
  kAdd,
  kSub,
  kMul,
  kMatMul,
  kTanh,
  kSigmoid,
  kSoftplus,
  kExp,
  kLog,
  kSqrt,
  kSquare,
  kScale,
  kShift,
  kClamp,
  kProbit,
  kSum,
  kMean,
  kSumAxis,
  kBroadcast,
  kSlice,
  kConcat,
  kTranspose,
  kReshape,
  kGatherRows,
  kLowRankLogPdf,
};

std::string_view op_name(OpKind kind);

// Handle to a node. Cheap to copy; valid while its Graph lives.
class Var {
 public:
  Var() = default;

  Graph& graph() const { return *graph_; }
  std::size_t id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }
  const Shape& shape() const;
  std::size_t size() const { return element_count(shape()); }

 private:
  friend class Graph;
  Var(Graph* graph, std::size_t id) : graph_(graph), id_(id) {}

  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

class Gradients {
 public:
  // Gradient of the root with respect to a leaf; zeros when the root does not
  // depend on it.
  const Tensor& operator[](Var leaf) const;
  bool contains(Var leaf) const;

 private:
  friend class Graph;
  std::map<std::size_t, Tensor> grads_;
};

// Static attributes of an op (constants, axes, slice bounds, gather indices).
struct OpAux {
  double a = 0.0;
  double b = 0.0;
  std::size_t axis = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
  std::vector<std::size_t> indices;
};

class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Leaf whose gradient is reported by backward().
  Var parameter(Tensor value);
  // Leaf excluded from differentiation.
  Var constant(Tensor value);
  // Named leaf bound at forward() time.
  Var input(std::string name, Shape shape, bool requires_grad = true);

  // Evaluates every node in insertion order. Throws ShapeError when a binding
  // has the wrong shape, std::invalid_argument when a named input is unbound,
  // NonFiniteError when any intermediate is NaN/Inf.
  void forward(const std::map<std::string, Tensor>& inputs = {});

  // Convenience: forward() then the value of `root`.
  const Tensor& evaluate(Var root, const std::map<std::string, Tensor>& inputs = {});

  bool evaluated() const { return evaluated_; }
  const Tensor& value(Var v) const;

  // Gradients of a scalar root with respect to every differentiable leaf.
  Gradients backward(Var root);

  std::size_t size() const { return nodes_.size(); }
  const Shape& shape_of(std::size_t id) const { return nodes_.at(id).shape; }

  using Aux = OpAux;

  // Used by the op builders in ops.hpp.
  Var append(OpKind kind, std::vector<std::size_t> inputs, Shape shape, Aux aux = {});

 private:
  struct Node {
    OpKind kind;
    std::vector<std::size_t> inputs;
    Shape shape;
    Aux aux;
    Tensor value;
    bool requires_grad = false;
    std::string name;
  };

  void compute(Node& node);
  void propagate(const Node& node, const Tensor& grad, std::vector<Tensor>& grads);
  Tensor& grad_slot(std::vector<Tensor>& grads, std::size_t id);

  std::vector<Node> nodes_;
  bool evaluated_ = false;
};

}  // namespace tsadv::diffkit
