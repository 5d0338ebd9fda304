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

#include "tsadv/diffkit/ops.hpp"

#include <string>

#include "tsadv/common/errors.hpp"

namespace tsadv::diffkit {
namespace {

Graph& same_graph(Var a, Var b) {
  if (!a.valid() || !b.valid() || &a.graph() != &b.graph()) {
    throw std::invalid_argument("op operands belong to different graphs");
  }
  return a.graph();
}

Var elementwise_binary(OpKind kind, Var a, Var b) {
  Graph& g = same_graph(a, b);
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op_name(kind)) + ": shape mismatch " + shape_string(a.shape()) +
                     " vs " + shape_string(b.shape()));
  }
  return g.append(kind, {a.id(), b.id()}, a.shape());
}

Var unary(OpKind kind, Var x, Graph::Aux aux = {}) {
  return x.graph().append(kind, {x.id()}, x.shape(), std::move(aux));
}

void require_rank2(Var x, std::string_view what) {
  if (x.shape().size() != 2) {
    throw ShapeError(std::string(what) + " expects a rank-2 tensor, got " +
                     shape_string(x.shape()));
  }
}

}  // namespace

Var add(Var a, Var b) { return elementwise_binary(OpKind::kAdd, a, b); }
Var sub(Var a, Var b) { return elementwise_binary(OpKind::kSub, a, b); }
Var mul(Var a, Var b) { return elementwise_binary(OpKind::kMul, a, b); }

Var matmul(Var a, Var b) {
  Graph& g = same_graph(a, b);
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  if (a.shape()[1] != b.shape()[0]) {
    throw ShapeError("matmul: inner dimensions differ " + shape_string(a.shape()) + " x " +
                     shape_string(b.shape()));
  }
  return g.append(OpKind::kMatMul, {a.id(), b.id()}, Shape{a.shape()[0], b.shape()[1]});
}

Var tanh(Var x) { return unary(OpKind::kTanh, x); }
Var sigmoid(Var x) { return unary(OpKind::kSigmoid, x); }
Var softplus(Var x) { return unary(OpKind::kSoftplus, x); }
Var exp(Var x) { return unary(OpKind::kExp, x); }
Var log(Var x) { return unary(OpKind::kLog, x); }
Var sqrt(Var x) { return unary(OpKind::kSqrt, x); }
Var square(Var x) { return unary(OpKind::kSquare, x); }

Var scale(Var x, double factor) {
  Graph::Aux aux;
  aux.a = factor;
  return unary(OpKind::kScale, x, aux);
}

Var shift(Var x, double offset) {
  Graph::Aux aux;
  aux.a = offset;
  return unary(OpKind::kShift, x, aux);
}

Var clamp(Var x, double lo, double hi) {
  if (!(lo <= hi)) throw std::invalid_argument("clamp: lo must not exceed hi");
  Graph::Aux aux;
  aux.a = lo;
  aux.b = hi;
  return unary(OpKind::kClamp, x, aux);
}

Var probit(Var x) { return unary(OpKind::kProbit, x); }

Var sum(Var x) { return x.graph().append(OpKind::kSum, {x.id()}, Shape{}); }
Var mean(Var x) {
  if (x.size() == 0) throw ShapeError("mean of an empty tensor");
  return x.graph().append(OpKind::kMean, {x.id()}, Shape{});
}

Var sum_axis(Var x, std::size_t axis) {
  require_rank2(x, "sum_axis");
  if (axis > 1) throw ShapeError("sum_axis: axis must be 0 or 1");
  Graph::Aux aux;
  aux.axis = axis;
  const Shape out = axis == 0 ? Shape{1, x.shape()[1]} : Shape{x.shape()[0], 1};
  return x.graph().append(OpKind::kSumAxis, {x.id()}, out, aux);
}

Var broadcast(Var x, Shape shape) {
  const Shape& s = x.shape();
  const bool one = element_count(s) == 1;
  const bool row = s.size() == 2 && s[0] == 1 && shape.size() == 2 && s[1] == shape[1];
  if (!one && !row) {
    throw ShapeError("broadcast: cannot replicate " + shape_string(s) + " to " +
                     shape_string(shape));
  }
  return x.graph().append(OpKind::kBroadcast, {x.id()}, std::move(shape));
}

Var slice(Var x, std::size_t axis, std::size_t begin, std::size_t end) {
  require_rank2(x, "slice");
  if (axis > 1 || begin > end || end > x.shape()[axis]) {
    throw ShapeError("slice [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") out of range on axis " + std::to_string(axis) + " of " +
                     shape_string(x.shape()));
  }
  Graph::Aux aux;
  aux.axis = axis;
  aux.begin = begin;
  aux.end = end;
  Shape out = x.shape();
  out[axis] = end - begin;
  return x.graph().append(OpKind::kSlice, {x.id()}, std::move(out), aux);
}

Var concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat of zero tensors");
  if (axis > 1) throw ShapeError("concat: axis must be 0 or 1");
  Graph& g = parts.front().graph();
  Shape out = parts.front().shape();
  require_rank2(parts.front(), "concat");
  std::vector<std::size_t> ids{parts.front().id()};
  for (std::size_t i = 1; i < parts.size(); ++i) {
    same_graph(parts.front(), parts[i]);
    require_rank2(parts[i], "concat");
    const Shape& s = parts[i].shape();
    if (s[1 - axis] != out[1 - axis]) {
      throw ShapeError("concat: incompatible " + shape_string(out) + " and " + shape_string(s));
    }
    out[axis] += s[axis];
    ids.push_back(parts[i].id());
  }
  Graph::Aux aux;
  aux.axis = axis;
  return g.append(OpKind::kConcat, std::move(ids), std::move(out), aux);
}

Var concat(std::initializer_list<Var> parts, std::size_t axis) {
  return concat(std::span<const Var>(parts.begin(), parts.size()), axis);
}

Var transpose(Var x) {
  require_rank2(x, "transpose");
  return x.graph().append(OpKind::kTranspose, {x.id()}, Shape{x.shape()[1], x.shape()[0]});
}

Var reshape(Var x, Shape shape) {
  if (element_count(shape) != x.size()) {
    throw ShapeError("reshape: " + shape_string(x.shape()) + " to " + shape_string(shape));
  }
  return x.graph().append(OpKind::kReshape, {x.id()}, std::move(shape));
}

Var gather_rows(Var x, std::vector<std::size_t> indices) {
  require_rank2(x, "gather_rows");
  for (std::size_t i : indices) {
    if (i >= x.shape()[0]) throw ShapeError("gather_rows: index out of range");
  }
  Graph::Aux aux;
  Shape out{indices.size(), x.shape()[1]};
  aux.indices = std::move(indices);
  return x.graph().append(OpKind::kGatherRows, {x.id()}, std::move(out), std::move(aux));
}

Var lowrank_gaussian_logpdf(Var y, Var mean, Var diag, Var factor, std::size_t rank) {
  Graph& g = same_graph(y, mean);
  same_graph(y, diag);
  same_graph(y, factor);
  require_rank2(y, "lowrank_gaussian_logpdf");
  if (mean.shape() != y.shape() || diag.shape() != y.shape()) {
    throw ShapeError("lowrank_gaussian_logpdf: y, mean, diag must share a shape");
  }
  const std::size_t rows = y.shape()[0];
  const std::size_t d = y.shape()[1];
  if (factor.shape() != Shape{rows, d * rank}) {
    throw ShapeError("lowrank_gaussian_logpdf: factor must be " +
                     shape_string(Shape{rows, d * rank}) + ", got " +
                     shape_string(factor.shape()));
  }
  Graph::Aux aux;
  aux.axis = rank;
  return g.append(OpKind::kLowRankLogPdf, {y.id(), mean.id(), diag.id(), factor.id()},
                  Shape{rows, 1}, aux);
}

}  // namespace tsadv::diffkit
