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

// Central finite-difference checks for diffkit ops. Test-only: the reference
// derivative is computed from forward values alone, never from backward().

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "tsadv/common/rng.hpp"
#include "tsadv/diffkit/graph.hpp"
#include "tsadv/diffkit/ops.hpp"

namespace tsadv::testing {

using diffkit::Graph;
using diffkit::Shape;
using diffkit::Tensor;
using diffkit::Var;

struct OpCase {
  std::string name;
  std::function<std::vector<Tensor>(Rng&)> make_inputs;
  std::function<Var(std::vector<Var>&)> build;
};

inline std::size_t random_dim(Rng& rng) {
  return 1 + static_cast<std::size_t>(rng.uniform() * 5.0) % 5;
}

inline Tensor uniform_tensor(Rng& rng, Shape shape, double lo, double hi) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = lo + (hi - lo) * rng.uniform();
  return t;
}

// Entries in [-1, 1] but kept at least `gap` away from +-edge, for clamp.
inline Tensor away_from(Rng& rng, Shape shape, double edge, double gap) {
  Tensor t = uniform_tensor(rng, std::move(shape), -1.0, 1.0);
  for (double& v : t.data()) {
    if (std::abs(std::abs(v) - edge) < gap) v = v > 0 ? edge + 2 * gap : -(edge + 2 * gap);
  }
  return t;
}

// Sum of op output weighted by fixed random coefficients, so every output
// element contributes a distinct partial.
inline double weighted_root(Graph& g, Var out, const Tensor& weights, Var* root) {
  Var w = g.constant(weights.reshaped(out.shape()));
  *root = diffkit::sum(diffkit::mul(out, w));
  g.forward();
  return g.value(*root).item();
}

struct GradCheckResult {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
};

inline GradCheckResult gradient_check(const OpCase& op, Rng& rng, double h = 1e-5) {
  const std::vector<Tensor> inputs = op.make_inputs(rng);

  auto evaluate = [&](const std::vector<Tensor>& xs, const Tensor* weights, Tensor* weights_out,
                      std::vector<Tensor>* grads) {
    Graph g;
    std::vector<Var> vars;
    for (const Tensor& x : xs) vars.push_back(g.parameter(x));
    Var out = op.build(vars);
    Tensor w;
    if (weights) {
      w = *weights;
    } else {
      w = uniform_tensor(rng, Shape{out.size()}, -1.0, 1.0);
    }
    if (weights_out) *weights_out = w;
    Var root;
    const double value = weighted_root(g, out, w, &root);
    if (grads) {
      const auto gr = g.backward(root);
      for (Var v : vars) grads->push_back(gr[v]);
    }
    return value;
  };

  Tensor weights;
  std::vector<Tensor> analytic;
  evaluate(inputs, nullptr, &weights, &analytic);

  GradCheckResult result;
  for (std::size_t p = 0; p < inputs.size(); ++p) {
    double num_scale = 0.0;
    double diff = 0.0;
    for (std::size_t i = 0; i < inputs[p].size(); ++i) {
      std::vector<Tensor> plus = inputs;
      std::vector<Tensor> minus = inputs;
      plus[p][i] += h;
      minus[p][i] -= h;
      const double fd = (evaluate(plus, &weights, nullptr, nullptr) -
                         evaluate(minus, &weights, nullptr, nullptr)) /
                        (2.0 * h);
      const double an = analytic[p][i];
      diff = std::max(diff, std::abs(fd - an));
      num_scale = std::max({num_scale, std::abs(fd), std::abs(an)});
    }
    result.max_abs_error = std::max(result.max_abs_error, diff);
    if (num_scale > 0.0) result.max_rel_error = std::max(result.max_rel_error, diff / num_scale);
  }
  return result;
}

inline std::vector<OpCase> op_catalog() {
  namespace dk = tsadv::diffkit;
  std::vector<OpCase> cases;
  auto two_same = [](double lo, double hi) {
    return [lo, hi](Rng& rng) {
      Shape s{random_dim(rng), random_dim(rng)};
      return std::vector<Tensor>{uniform_tensor(rng, s, lo, hi), uniform_tensor(rng, s, lo, hi)};
    };
  };
  auto one = [](double lo, double hi) {
    return [lo, hi](Rng& rng) {
      return std::vector<Tensor>{
          uniform_tensor(rng, Shape{random_dim(rng), random_dim(rng)}, lo, hi)};
    };
  };

  cases.push_back({"add", two_same(-1, 1), [](auto& v) { return dk::add(v[0], v[1]); }});
  cases.push_back({"sub", two_same(-1, 1), [](auto& v) { return dk::sub(v[0], v[1]); }});
  cases.push_back({"mul", two_same(-1, 1), [](auto& v) { return dk::mul(v[0], v[1]); }});
  cases.push_back({"matmul",
                   [](Rng& rng) {
                     const std::size_t m = random_dim(rng), k = random_dim(rng), n = random_dim(rng);
                     return std::vector<Tensor>{uniform_tensor(rng, {m, k}, -1, 1),
                                                uniform_tensor(rng, {k, n}, -1, 1)};
                   },
                   [](auto& v) { return dk::matmul(v[0], v[1]); }});
  cases.push_back({"tanh", one(-1, 1), [](auto& v) { return dk::tanh(v[0]); }});
  cases.push_back({"sigmoid", one(-1, 1), [](auto& v) { return dk::sigmoid(v[0]); }});
  cases.push_back({"softplus", one(-1, 1), [](auto& v) { return dk::softplus(v[0]); }});
  cases.push_back({"softplus_large", one(20, 40), [](auto& v) { return dk::softplus(v[0]); }});
  cases.push_back({"exp", one(-1, 1), [](auto& v) { return dk::exp(v[0]); }});
  cases.push_back({"log", one(0.2, 1.2), [](auto& v) { return dk::log(v[0]); }});
  cases.push_back({"sqrt", one(0.2, 1.2), [](auto& v) { return dk::sqrt(v[0]); }});
  cases.push_back({"square", one(-1, 1), [](auto& v) { return dk::square(v[0]); }});
  cases.push_back({"scale", one(-1, 1), [](auto& v) { return dk::scale(v[0], -1.7); }});
  cases.push_back({"shift", one(-1, 1), [](auto& v) { return dk::shift(v[0], 0.3); }});
  cases.push_back({"clamp",
                   [](Rng& rng) {
                     return std::vector<Tensor>{
                         away_from(rng, {random_dim(rng), random_dim(rng)}, 0.5, 1e-3)};
                   },
                   [](auto& v) { return dk::clamp(v[0], -0.5, 0.5); }});
  cases.push_back({"probit", one(0.05, 0.95), [](auto& v) { return dk::probit(v[0]); }});
  cases.push_back({"sum", one(-1, 1), [](auto& v) { return dk::sum(v[0]); }});
  cases.push_back({"mean", one(-1, 1), [](auto& v) { return dk::mean(v[0]); }});
  cases.push_back({"sum_axis0", one(-1, 1), [](auto& v) { return dk::sum_axis(v[0], 0); }});
  cases.push_back({"sum_axis1", one(-1, 1), [](auto& v) { return dk::sum_axis(v[0], 1); }});
  cases.push_back({"broadcast_row",
                   [](Rng& rng) {
                     return std::vector<Tensor>{uniform_tensor(rng, {1, random_dim(rng)}, -1, 1)};
                   },
                   [](auto& v) {
                     return dk::broadcast(v[0], Shape{4, v[0].shape()[1]});
                   }});
  cases.push_back({"broadcast_scalar",
                   [](Rng& rng) { return std::vector<Tensor>{uniform_tensor(rng, {}, -1, 1)}; },
                   [](auto& v) { return dk::broadcast(v[0], Shape{3, 2}); }});
  cases.push_back({"slice_rows",
                   [](Rng& rng) {
                     return std::vector<Tensor>{
                         uniform_tensor(rng, {random_dim(rng) + 1, random_dim(rng)}, -1, 1)};
                   },
                   [](auto& v) { return dk::slice(v[0], 0, 1, v[0].shape()[0]); }});
  cases.push_back({"slice_cols",
                   [](Rng& rng) {
                     return std::vector<Tensor>{
                         uniform_tensor(rng, {random_dim(rng), random_dim(rng) + 1}, -1, 1)};
                   },
                   [](auto& v) { return dk::slice(v[0], 1, 0, v[0].shape()[1] - 1); }});
  cases.push_back({"concat_rows",
                   [](Rng& rng) {
                     const std::size_t c = random_dim(rng);
                     return std::vector<Tensor>{uniform_tensor(rng, {random_dim(rng), c}, -1, 1),
                                                uniform_tensor(rng, {random_dim(rng), c}, -1, 1)};
                   },
                   [](auto& v) { return dk::concat({v[0], v[1]}, 0); }});
  cases.push_back({"concat_cols",
                   [](Rng& rng) {
                     const std::size_t r = random_dim(rng);
                     return std::vector<Tensor>{uniform_tensor(rng, {r, random_dim(rng)}, -1, 1),
                                                uniform_tensor(rng, {r, random_dim(rng)}, -1, 1)};
                   },
                   [](auto& v) { return dk::concat({v[0], v[1]}, 1); }});
  cases.push_back({"transpose", one(-1, 1), [](auto& v) { return dk::transpose(v[0]); }});
  cases.push_back({"reshape", one(-1, 1), [](auto& v) {
                     return dk::reshape(v[0], Shape{1, v[0].size()});
                   }});
  cases.push_back({"gather_rows", one(-1, 1), [](auto& v) {
                     const std::size_t r = v[0].shape()[0];
                     return dk::gather_rows(v[0], {r - 1, 0, r - 1});
                   }});
  cases.push_back({"lowrank_gaussian_logpdf",
                   [](Rng& rng) {
                     const std::size_t n = random_dim(rng), d = random_dim(rng);
                     const std::size_t r = 1 + static_cast<std::size_t>(rng.uniform() * d) % d;
                     return std::vector<Tensor>{
                         uniform_tensor(rng, {n, d}, -1, 1), uniform_tensor(rng, {n, d}, -1, 1),
                         uniform_tensor(rng, {n, d}, 0.5, 1.5),
                         uniform_tensor(rng, {n, d * r}, -1, 1)};
                   },
                   [](auto& v) {
                     const auto r = static_cast<std::size_t>(
                         v[3].shape()[1] / v[0].shape()[1]);
                     return dk::lowrank_gaussian_logpdf(v[0], v[1], v[2], v[3], r);
                   }});
  return cases;
}

}  // namespace tsadv::testing
