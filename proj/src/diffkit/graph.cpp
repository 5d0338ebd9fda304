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

#include "tsadv/diffkit/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

#include "tsadv/common/errors.hpp"
#include "tsadv/diffkit/lowrank_gaussian.hpp"
#include "tsadv/kernels/kernels.hpp"

namespace tsadv::diffkit {
namespace {

double stable_sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double stable_softplus(double z) {
  if (z > 0.0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

double inverse_normal_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) return p <= 0.0 ? -HUGE_VAL : HUGE_VAL;
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

}  // namespace

std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kParameter: return "parameter";
    case OpKind::kConstant: return "constant";
    case OpKind::kInput: return "input";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kMatMul: return "matmul";
    case OpKind::kTanh: return "tanh";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kSoftplus: return "softplus";
    case OpKind::kExp: return "exp";
    case OpKind::kLog: return "log";
    case OpKind::kSqrt: return "sqrt";
    case OpKind::kSquare: return "square";
    case OpKind::kScale: return "scale";
    case OpKind::kShift: return "shift";
    case OpKind::kClamp: return "clamp";
    case OpKind::kProbit: return "probit";
    case OpKind::kSum: return "sum";
    case OpKind::kMean: return "mean";
    case OpKind::kSumAxis: return "sum_axis";
    case OpKind::kBroadcast: return "broadcast";
    case OpKind::kSlice: return "slice";
    case OpKind::kConcat: return "concat";
    case OpKind::kTranspose: return "transpose";
    case OpKind::kReshape: return "reshape";
    case OpKind::kGatherRows: return "gather_rows";
    case OpKind::kLowRankLogPdf: return "lowrank_gaussian_logpdf";
  }
  return "unknown";
}

const Shape& Var::shape() const { return graph_->shape_of(id_); }

const Tensor& Gradients::operator[](Var leaf) const {
  const auto it = grads_.find(leaf.id());
  if (it == grads_.end()) {
    throw std::invalid_argument("no gradient recorded for node " + std::to_string(leaf.id()) +
                                " (not a differentiable leaf)");
  }
  return it->second;
}

bool Gradients::contains(Var leaf) const { return grads_.count(leaf.id()) != 0; }

Var Graph::parameter(Tensor value) {
  Node n{OpKind::kParameter, {}, value.shape(), {}, std::move(value), true, {}};
  nodes_.push_back(std::move(n));
  evaluated_ = false;
  return Var(this, nodes_.size() - 1);
}

Var Graph::constant(Tensor value) {
  Node n{OpKind::kConstant, {}, value.shape(), {}, std::move(value), false, {}};
  nodes_.push_back(std::move(n));
  evaluated_ = false;
  return Var(this, nodes_.size() - 1);
}

Var Graph::input(std::string name, Shape shape, bool requires_grad) {
  Node n{OpKind::kInput, {}, std::move(shape), {}, {}, requires_grad, std::move(name)};
  nodes_.push_back(std::move(n));
  evaluated_ = false;
  return Var(this, nodes_.size() - 1);
}

Var Graph::append(OpKind kind, std::vector<std::size_t> inputs, Shape shape, Aux aux) {
  bool requires_grad = false;
  for (std::size_t in : inputs) {
    if (in >= nodes_.size()) throw std::invalid_argument("op input refers to a later node");
    requires_grad = requires_grad || nodes_[in].requires_grad;
  }
  nodes_.push_back(Node{kind, std::move(inputs), std::move(shape), std::move(aux), {},
                        requires_grad, {}});
  evaluated_ = false;
  return Var(this, nodes_.size() - 1);
}

void Graph::forward(const std::map<std::string, Tensor>& inputs) {
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    Node& node = nodes_[id];
    if (node.kind == OpKind::kInput) {
      const auto it = inputs.find(node.name);
      if (it == inputs.end()) throw std::invalid_argument("unbound graph input '" + node.name + "'");
      if (it->second.shape() != node.shape) {
        throw ShapeError("input '" + node.name + "' expects " + shape_string(node.shape) +
                         ", got " + shape_string(it->second.shape()));
      }
      node.value = it->second;
    } else if (node.kind != OpKind::kParameter && node.kind != OpKind::kConstant) {
      compute(node);
    }
    if (!node.value.all_finite()) {
      throw NonFiniteError("non-finite value produced by node " + std::to_string(id) + " (" +
                           std::string(op_name(node.kind)) + ")");
    }
  }
  evaluated_ = true;
}

const Tensor& Graph::evaluate(Var root, const std::map<std::string, Tensor>& inputs) {
  forward(inputs);
  return value(root);
}

const Tensor& Graph::value(Var v) const {
  if (!evaluated_) throw std::logic_error("graph value requested before forward()");
  return nodes_.at(v.id()).value;
}

void Graph::compute(Node& node) {
  const auto& k = kernels::active();
  auto in = [&](std::size_t i) -> const Tensor& { return nodes_[node.inputs[i]].value; };
  Tensor out(node.shape);
  auto o = out.data();
  const std::size_t n = out.size();

  switch (node.kind) {
    case OpKind::kAdd:
      k.add(in(0).data().data(), in(1).data().data(), o.data(), n);
      break;
    case OpKind::kSub:
      k.sub(in(0).data().data(), in(1).data().data(), o.data(), n);
      break;
    case OpKind::kMul:
      k.mul(in(0).data().data(), in(1).data().data(), o.data(), n);
      break;
    case OpKind::kMatMul: {
      const Tensor& a = in(0);
      const Tensor& b = in(1);
      k.matmul_acc(a.data().data(), b.data().data(), o.data(), a.rows(), a.cols(), b.cols());
      break;
    }
    case OpKind::kTanh:
      for (std::size_t i = 0; i < n; ++i) o[i] = std::tanh(in(0)[i]);
      break;
    case OpKind::kSigmoid:
      for (std::size_t i = 0; i < n; ++i) o[i] = stable_sigmoid(in(0)[i]);
      break;
    case OpKind::kSoftplus:
      for (std::size_t i = 0; i < n; ++i) o[i] = stable_softplus(in(0)[i]);
      break;
    case OpKind::kExp:
      for (std::size_t i = 0; i < n; ++i) o[i] = std::exp(in(0)[i]);
      break;
    case OpKind::kLog:
      for (std::size_t i = 0; i < n; ++i) o[i] = std::log(in(0)[i]);
      break;
    case OpKind::kSqrt:
      for (std::size_t i = 0; i < n; ++i) o[i] = std::sqrt(in(0)[i]);
      break;
    case OpKind::kSquare:
      k.mul(in(0).data().data(), in(0).data().data(), o.data(), n);
      break;
    case OpKind::kScale:
      for (std::size_t i = 0; i < n; ++i) o[i] = node.aux.a * in(0)[i];
      break;
    case OpKind::kShift:
      for (std::size_t i = 0; i < n; ++i) o[i] = in(0)[i] + node.aux.a;
      break;
    case OpKind::kClamp:
      std::copy(in(0).data().begin(), in(0).data().end(), o.begin());
      k.clip(o.data(), n, node.aux.a, node.aux.b);
      break;
    case OpKind::kProbit:
      for (std::size_t i = 0; i < n; ++i) o[i] = inverse_normal_cdf(in(0)[i]);
      break;
    case OpKind::kSum: {
      double s = 0.0;
      for (double v : in(0).data()) s += v;
      o[0] = s;
      break;
    }
    case OpKind::kMean: {
      double s = 0.0;
      for (double v : in(0).data()) s += v;
      o[0] = s / static_cast<double>(in(0).size());
      break;
    }
    case OpKind::kSumAxis: {
      const Tensor& x = in(0);
      const std::size_t r = x.rows();
      const std::size_t c = x.cols();
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) o[node.aux.axis == 0 ? j : i] += x.at(i, j);
      }
      break;
    }
    case OpKind::kBroadcast: {
      const Tensor& x = in(0);
      const std::size_t m = x.size();
      for (std::size_t i = 0; i < n; ++i) o[i] = x[i % m];
      break;
    }
    case OpKind::kSlice: {
      const Tensor& x = in(0);
      const std::size_t oc = out.cols();
      if (node.aux.axis == 0) {
        std::copy_n(x.data().begin() + node.aux.begin * x.cols(), n, o.begin());
      } else {
        for (std::size_t i = 0; i < x.rows(); ++i) {
          std::copy_n(x.data().begin() + i * x.cols() + node.aux.begin, oc, o.begin() + i * oc);
        }
      }
      break;
    }
    case OpKind::kConcat: {
      const std::size_t oc = out.cols();
      std::size_t offset = 0;
      for (std::size_t p = 0; p < node.inputs.size(); ++p) {
        const Tensor& x = in(p);
        if (node.aux.axis == 0) {
          std::copy(x.data().begin(), x.data().end(), o.begin() + offset);
          offset += x.size();
        } else {
          const std::size_t xc = x.cols();
          for (std::size_t i = 0; i < x.rows(); ++i) {
            std::copy_n(x.data().begin() + i * xc, xc, o.begin() + i * oc + offset);
          }
          offset += xc;
        }
      }
      break;
    }
    case OpKind::kTranspose:
      out = in(0).transposed();
      break;
    case OpKind::kReshape:
      std::copy(in(0).data().begin(), in(0).data().end(), o.begin());
      break;
    case OpKind::kGatherRows: {
      const Tensor& x = in(0);
      const std::size_t c = x.cols();
      for (std::size_t i = 0; i < node.aux.indices.size(); ++i) {
        std::copy_n(x.data().begin() + node.aux.indices[i] * c, c, o.begin() + i * c);
      }
      break;
    }
    case OpKind::kLowRankLogPdf: {
      const std::size_t rows = in(0).rows();
      const std::size_t d = in(0).cols();
      const std::size_t r = node.aux.axis;
      for (std::size_t i = 0; i < rows; ++i) {
        o[i] = lowrank::logpdf(in(0).data().subspan(i * d, d), in(1).data().subspan(i * d, d),
                               in(2).data().subspan(i * d, d),
                               in(3).data().subspan(i * d * r, d * r), r);
      }
      break;
    }
    case OpKind::kParameter:
    case OpKind::kConstant:
    case OpKind::kInput:
      break;
  }
  node.value = std::move(out);
}

Tensor& Graph::grad_slot(std::vector<Tensor>& grads, std::size_t id) {
  Tensor& g = grads[id];
  if (g.shape() != nodes_[id].shape || g.size() != element_count(nodes_[id].shape)) {
    g = Tensor(nodes_[id].shape);
  }
  return g;
}

Gradients Graph::backward(Var root) {
  if (!evaluated_) throw std::logic_error("backward() called before forward()");
  if (root.id() >= nodes_.size()) throw std::invalid_argument("root is not part of this graph");
  if (element_count(nodes_[root.id()].shape) != 1) {
    throw ShapeError("backward() requires a scalar root, got shape " +
                     shape_string(nodes_[root.id()].shape));
  }
  std::vector<Tensor> grads(nodes_.size());
  std::vector<bool> live(nodes_.size(), false);
  grad_slot(grads, root.id())[0] = 1.0;
  live[root.id()] = true;

  for (std::size_t id = root.id() + 1; id-- > 0;) {
    if (!live[id]) continue;
    const Node& node = nodes_[id];
    if (!node.requires_grad) continue;
    for (std::size_t in : node.inputs) {
      if (nodes_[in].requires_grad) {
        grad_slot(grads, in);
        live[in] = true;
      }
    }
    propagate(node, grads[id], grads);
    if (!node.inputs.empty()) grads[id] = Tensor();  // release intermediates
  }

  Gradients out;
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    const Node& node = nodes_[id];
    const bool leaf = node.kind == OpKind::kParameter || node.kind == OpKind::kInput;
    if (!leaf || !node.requires_grad) continue;
    if (live[id]) {
      out.grads_.emplace(id, std::move(grads[id]));
    } else {
      out.grads_.emplace(id, Tensor(node.shape));
    }
  }
  return out;
}

void Graph::propagate(const Node& node, const Tensor& g, std::vector<Tensor>& grads) {
  const auto& k = kernels::active();
  auto in = [&](std::size_t i) -> const Tensor& { return nodes_[node.inputs[i]].value; };
  auto wants = [&](std::size_t i) { return nodes_[node.inputs[i]].requires_grad; };
  auto slot = [&](std::size_t i) -> Tensor& { return grads[node.inputs[i]]; };
  const std::size_t n = g.size();
  const Tensor& y = node.value;

  // Elementwise chain rule helper: slot(0) += g * f(i)
  auto unary = [&](auto&& deriv) {
    if (!wants(0)) return;
    auto gx = slot(0).data();
    for (std::size_t i = 0; i < n; ++i) gx[i] += g[i] * deriv(i);
  };

  switch (node.kind) {
    case OpKind::kAdd:
      if (wants(0)) k.axpy(1.0, g.data().data(), slot(0).data().data(), n);
      if (wants(1)) k.axpy(1.0, g.data().data(), slot(1).data().data(), n);
      break;
    case OpKind::kSub:
      if (wants(0)) k.axpy(1.0, g.data().data(), slot(0).data().data(), n);
      if (wants(1)) k.axpy(-1.0, g.data().data(), slot(1).data().data(), n);
      break;
    case OpKind::kMul:
      if (wants(0)) k.mul_acc(g.data().data(), in(1).data().data(), slot(0).data().data(), n);
      if (wants(1)) k.mul_acc(g.data().data(), in(0).data().data(), slot(1).data().data(), n);
      break;
    case OpKind::kMatMul: {
      const Tensor& a = in(0);
      const Tensor& b = in(1);
      const std::size_t m = a.rows(), kk = a.cols(), nn = b.cols();
      if (wants(0)) k.matmul_nt_acc(g.data().data(), b.data().data(), slot(0).data().data(), m, nn, kk);
      if (wants(1)) k.matmul_tn_acc(a.data().data(), g.data().data(), slot(1).data().data(), m, kk, nn);
      break;
    }
    case OpKind::kTanh:
      unary([&](std::size_t i) { return 1.0 - y[i] * y[i]; });
      break;
    case OpKind::kSigmoid:
      unary([&](std::size_t i) { return y[i] * (1.0 - y[i]); });
      break;
    case OpKind::kSoftplus:
      unary([&](std::size_t i) { return stable_sigmoid(in(0)[i]); });
      break;
    case OpKind::kExp:
      unary([&](std::size_t i) { return y[i]; });
      break;
    case OpKind::kLog:
      unary([&](std::size_t i) { return 1.0 / in(0)[i]; });
      break;
    case OpKind::kSqrt:
      unary([&](std::size_t i) { return 0.5 / y[i]; });
      break;
    case OpKind::kSquare:
      unary([&](std::size_t i) { return 2.0 * in(0)[i]; });
      break;
    case OpKind::kScale:
      if (wants(0)) k.axpy(node.aux.a, g.data().data(), slot(0).data().data(), n);
      break;
    case OpKind::kShift:
      if (wants(0)) k.axpy(1.0, g.data().data(), slot(0).data().data(), n);
      break;
    case OpKind::kClamp:
      unary([&](std::size_t i) {
        const double x = in(0)[i];
        return (x >= node.aux.a && x <= node.aux.b) ? 1.0 : 0.0;
      });
      break;
    case OpKind::kProbit: {
      // d/dp Phi^{-1}(p) = 1 / phi(Phi^{-1}(p))
      const double sqrt2pi = std::sqrt(2.0 * std::numbers::pi);
      unary([&](std::size_t i) { return sqrt2pi * std::exp(0.5 * y[i] * y[i]); });
      break;
    }
    case OpKind::kSum:
      if (wants(0)) {
        for (double& v : slot(0).data()) v += g[0];
      }
      break;
    case OpKind::kMean:
      if (wants(0)) {
        const double s = g[0] / static_cast<double>(in(0).size());
        for (double& v : slot(0).data()) v += s;
      }
      break;
    case OpKind::kSumAxis:
      if (wants(0)) {
        Tensor& gx = slot(0);
        const std::size_t r = gx.rows(), c = gx.cols();
        for (std::size_t i = 0; i < r; ++i) {
          for (std::size_t j = 0; j < c; ++j) gx.at(i, j) += g[node.aux.axis == 0 ? j : i];
        }
      }
      break;
    case OpKind::kBroadcast:
      if (wants(0)) {
        auto gx = slot(0).data();
        const std::size_t m = gx.size();
        for (std::size_t i = 0; i < n; ++i) gx[i % m] += g[i];
      }
      break;
    case OpKind::kSlice:
      if (wants(0)) {
        Tensor& gx = slot(0);
        const std::size_t xc = gx.cols();
        const std::size_t oc = g.cols();
        if (node.aux.axis == 0) {
          k.axpy(1.0, g.data().data(), gx.data().data() + node.aux.begin * xc, n);
        } else {
          for (std::size_t i = 0; i < gx.rows(); ++i) {
            k.axpy(1.0, g.data().data() + i * oc, gx.data().data() + i * xc + node.aux.begin, oc);
          }
        }
      }
      break;
    case OpKind::kConcat: {
      const std::size_t oc = g.cols();
      std::size_t offset = 0;
      for (std::size_t p = 0; p < node.inputs.size(); ++p) {
        const Shape& xs = nodes_[node.inputs[p]].shape;
        const std::size_t xn = element_count(xs);
        if (node.aux.axis == 0) {
          if (wants(p)) k.axpy(1.0, g.data().data() + offset, slot(p).data().data(), xn);
          offset += xn;
        } else {
          const std::size_t xc = xs[1];
          if (wants(p)) {
            for (std::size_t i = 0; i < xs[0]; ++i) {
              k.axpy(1.0, g.data().data() + i * oc + offset, slot(p).data().data() + i * xc, xc);
            }
          }
          offset += xc;
        }
      }
      break;
    }
    case OpKind::kTranspose:
      if (wants(0)) {
        const Tensor gt = g.transposed();
        k.axpy(1.0, gt.data().data(), slot(0).data().data(), n);
      }
      break;
    case OpKind::kReshape:
      if (wants(0)) k.axpy(1.0, g.data().data(), slot(0).data().data(), n);
      break;
    case OpKind::kGatherRows:
      if (wants(0)) {
        Tensor& gx = slot(0);
        const std::size_t c = gx.cols();
        for (std::size_t i = 0; i < node.aux.indices.size(); ++i) {
          k.axpy(1.0, g.data().data() + i * c, gx.data().data() + node.aux.indices[i] * c, c);
        }
      }
      break;
    case OpKind::kLowRankLogPdf: {
      const std::size_t rows = in(0).rows();
      const std::size_t d = in(0).cols();
      const std::size_t r = node.aux.axis;
      auto part = [&](std::size_t input, std::size_t row, std::size_t width) -> std::span<double> {
        if (!wants(input)) return {};
        return slot(input).data().subspan(row * width, width);
      };
      for (std::size_t i = 0; i < rows; ++i) {
        lowrank::logpdf_grad(in(0).data().subspan(i * d, d), in(1).data().subspan(i * d, d),
                             in(2).data().subspan(i * d, d),
                             in(3).data().subspan(i * d * r, d * r), r, g[i], part(0, i, d),
                             part(1, i, d), part(2, i, d), part(3, i, d * r));
      }
      break;
    }
    case OpKind::kParameter:
    case OpKind::kConstant:
    case OpKind::kInput:
      break;
  }
}

}  // namespace tsadv::diffkit
