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

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "tsadv/attacks/attacks.hpp"
#include "tsadv/common/errors.hpp"
#include "tsadv/diffkit/ops.hpp"
#include "tsadv/diffkit/optim.hpp"

namespace tsadv::attacks {

namespace dk = tsadv::diffkit;
using dk::Graph;
using dk::Shape;
using dk::Var;

namespace {

constexpr double kProbFloor = 1e-6;

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }
double softplus_inverse(double y) { return y > 30.0 ? y : std::log(std::expm1(y)); }

double probit_or_inf(double r) {
  if (r <= 0.0) return -std::numeric_limits<double>::infinity();
  if (r >= 1.0) return std::numeric_limits<double>::infinity();
  return boost::math::quantile(boost::math::normal(), r);
}

// Row-wise mean-normalized history; rows of zeros stay zero.
Tensor normalized_rows(const Tensor& x) {
  Tensor out = x;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double m = 0.0;
    for (std::size_t t = 0; t < x.cols(); ++t) m += std::abs(x.at(i, t));
    m /= static_cast<double>(x.cols());
    const double s = m > 0.0 ? 1.0 / m : 1.0;
    for (std::size_t t = 0; t < x.cols(); ++t) out.at(i, t) *= s;
  }
  return out;
}

Tensor matmul_plain(const Tensor& a, const Tensor& b) {
  Tensor c(Shape{a.rows(), b.cols()});
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double v = a.at(i, k);
      if (v == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c.at(i, j) += v * b.at(k, j);
    }
  }
  return c;
}

Tensor row_keep_mask(std::size_t dim, std::size_t T, std::span<const std::size_t> zero_rows) {
  Tensor m(Shape{dim, T}, 1.0);
  for (std::size_t i : zero_rows) {
    if (i >= dim) throw std::invalid_argument("sparse layer: zeroed row out of range");
    for (std::size_t t = 0; t < T; ++t) m.at(i, t) = 0.0;
  }
  return m;
}

// Histories x(1 + delta_b) for a batch of time-major deltas, stacked for a
// batched rollout.
Var perturbed_batch(Graph& g, const Tensor& x, std::span<const Var> deltas) {
  Var xs = g.constant(models::time_major(x));
  std::vector<Var> rows;
  for (Var d : deltas) rows.push_back(xs + xs * d);
  return rows.size() == 1 ? rows.front() : dk::concat(rows, 0);
}

// || mean over paths of chi - t ||^2 averaged over the B histories of a
// batched rollout with n paths each.
Var mean_statistic_loss(std::span<const Var> steps, const Tensor& target, const AttackSpec& spec,
                        std::size_t batch, std::size_t n) {
  Graph& g = steps.front().graph();
  std::vector<Var> cols;
  for (std::size_t i : spec.targets) {
    for (std::size_t h : spec.horizons) cols.push_back(dk::slice(steps[h], 1, i, i + 1));
  }
  Var picked = cols.size() == 1 ? cols.front() : dk::concat(cols, 1);
  const Tensor s = statistic_matrix(spec);
  const std::size_t m = s.cols();
  Var chi = spec.statistic == Statistic::kPoint ? picked : dk::matmul(picked, g.constant(s));
  // (B*n) x m -> B x (n*m), then average the n blocks.
  Tensor avg(Shape{n * m, m});
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t j = 0; j < m; ++j) avg.at(p * m + j, j) = 1.0 / static_cast<double>(n);
  }
  Var means = dk::matmul(dk::reshape(chi, Shape{batch, n * m}), g.constant(avg));
  Var t = dk::broadcast(g.constant(target.reshaped(Shape{1, m})), Shape{batch, m});
  return dk::scale(dk::sum(dk::square(means - t)), 1.0 / static_cast<double>(batch));
}

}  // namespace

void SparseLayerParams::validate() const {
  const std::size_t d = gamma.size();
  const std::size_t T = w_mu.rows();
  if (d == 0 || T == 0) throw std::invalid_argument("sparse layer: empty parameters");
  if (w_mu.shape() != Shape{T, T} || w_sd.shape() != Shape{T, T} || b_mu.shape() != Shape{d, T} ||
      b_sd.shape() != Shape{d, T}) {
    throw std::invalid_argument("sparse layer: inconsistent parameter shapes");
  }
  for (double g : gamma.data()) {
    if (!(g > 0.0) || !std::isfinite(g)) {
      throw std::invalid_argument("sparse layer: gamma entries must be positive");
    }
  }
}

SparseLayerParams init_sparse_layer(std::size_t dim, std::size_t context, double eta) {
  SparseLayerParams p;
  p.w_mu = Tensor(Shape{context, context});
  p.w_sd = Tensor(Shape{context, context});
  p.b_mu = Tensor(Shape{dim, context});
  p.b_sd = Tensor(Shape{dim, context}, softplus_inverse(0.5 * eta));
  p.gamma = Tensor(Shape{dim}, 1.0);
  return p;
}

std::vector<double> keep_probabilities(const Tensor& gamma, std::size_t k) {
  const std::size_t d = gamma.size();
  double total = 0.0;
  for (double g : gamma.data()) {
    if (!(g > 0.0)) throw std::invalid_argument("gamma entries must be positive");
    total += g;
  }
  std::vector<double> r(d);
  const double c = static_cast<double>(k) / std::sqrt(static_cast<double>(d) * total);
  for (std::size_t i = 0; i < d; ++i) r[i] = std::clamp(c * std::sqrt(gamma[i]), 0.0, 1.0);
  return r;
}

double expected_sparsity(const Tensor& gamma, std::size_t k, std::size_t dim) {
  if (gamma.size() != dim) throw std::invalid_argument("gamma must have dim entries");
  const auto r = keep_probabilities(gamma, k);
  double s = 0.0;
  for (double v : r) s += std::min(1.0, v);
  return s;
}

LayerSample sparse_layer_sample(const SparseLayerParams& layer, const Tensor& x, std::size_t k,
                                std::uint64_t seed, std::span<const std::size_t> zero_rows) {
  layer.validate();
  const std::size_t d = layer.dim(), T = layer.context();
  if (x.rows() != d || x.cols() != T) throw ShapeError("sparse layer: history must be dim x T");
  const Tensor xn = normalized_rows(x);
  Tensor mu = matmul_plain(xn, layer.w_mu);
  Tensor pre = matmul_plain(xn, layer.w_sd);
  Rng rng(seed);
  const Tensor eps = rng.normal_tensor(Shape{d, T});
  std::vector<double> u(d);
  for (double& v : u) v = rng.normal();
  const auto r = keep_probabilities(layer.gamma, k);
  const Tensor keep = row_keep_mask(d, T, zero_rows);

  LayerSample out{Tensor(Shape{d, T}), std::vector<bool>(d)};
  for (std::size_t i = 0; i < d; ++i) {
    out.mask[i] = u[i] <= probit_or_inf(r[i]);
    if (!out.mask[i] || keep.at(i, 0) == 0.0) continue;
    for (std::size_t t = 0; t < T; ++t) {
      const double m = mu.at(i, t) + layer.b_mu.at(i, t);
      const double sd = softplus(pre.at(i, t) + layer.b_sd.at(i, t));
      out.delta.at(i, t) = m + sd * eps.at(i, t);
    }
  }
  return out;
}

LayerState LayerState::from(const SparseLayerParams& layer) {
  layer.validate();
  LayerState s{layer.w_mu, layer.b_mu, layer.w_sd, layer.b_sd, Tensor(Shape{layer.dim(), 1})};
  for (std::size_t i = 0; i < layer.dim(); ++i) s.log_gamma[i] = std::log(layer.gamma[i]);
  return s;
}

SparseLayerParams LayerState::params() const {
  SparseLayerParams p{w_mu, b_mu, w_sd, b_sd, Tensor(Shape{log_gamma.size()})};
  for (std::size_t i = 0; i < log_gamma.size(); ++i) p.gamma[i] = std::exp(log_gamma[i]);
  return p;
}

std::vector<Tensor*> LayerState::tensors() { return {&w_mu, &b_mu, &w_sd, &b_sd, &log_gamma}; }

LayerVars bind_layer(Graph& g, const LayerState& s) {
  return LayerVars{g.parameter(s.w_mu), g.parameter(s.b_mu), g.parameter(s.w_sd),
                   g.parameter(s.b_sd), g.parameter(s.log_gamma)};
}

Var relaxed_layer_delta(const LayerVars& vars, const Tensor& x, std::size_t k, double eta,
                        double temperature, Rng& rng, std::span<const std::size_t> zero_rows) {
  Graph& g = vars.w_mu.graph();
  const std::size_t d = x.rows(), T = x.cols();
  if (vars.b_mu.shape() != Shape{d, T}) throw ShapeError("sparse layer: history must be dim x T");
  Var xn = g.constant(normalized_rows(x));
  Var mu = dk::matmul(xn, vars.w_mu) + vars.b_mu;
  Var sd = dk::softplus(dk::matmul(xn, vars.w_sd) + vars.b_sd);
  Var raw = mu + sd * g.constant(rng.normal_tensor(Shape{d, T}));

  // r = c sqrt(gamma_i / sum gamma), in log space
  Var log_total = dk::broadcast(dk::log(dk::sum(dk::exp(vars.log_gamma))), Shape{d, 1});
  const double c = static_cast<double>(k) / std::sqrt(static_cast<double>(d));
  Var r = dk::clamp(dk::scale(dk::exp(dk::scale(vars.log_gamma - log_total, 0.5)), c), kProbFloor,
                    1.0 - kProbFloor);
  Var u = g.constant(rng.normal_tensor(Shape{d, 1}));
  Var gate = dk::sigmoid(dk::scale(dk::probit(r) - u, 1.0 / temperature));
  Var gate_rows = dk::matmul(gate, g.constant(Tensor(Shape{1, T}, 1.0)));
  Var delta = raw * gate_rows * g.constant(row_keep_mask(d, T, zero_rows));
  return dk::transpose(dk::clamp(delta, -eta, eta));
}

SparseLayerParams probabilistic_attack_train(const ForecasterParams& params, const Window& window,
                                             const AttackSpec& spec, const ProbTrainConfig& cfg,
                                             std::uint64_t seed) {
  spec.validate(params.dim, window.horizon());
  if (cfg.n_delta == 0) throw std::invalid_argument("probabilistic attack: n_delta must be >= 1");
  const Tensor target = draw_adversarial_target(params, window.x, window.horizon(), spec,
                                                derive_seed(seed, {kTargetStream}));
  const std::size_t T = window.context();
  const std::size_t steps_needed = rollout_length(spec);
  LayerState state = LayerState::from(init_sparse_layer(params.dim, T, spec.eta));
  dk::Adam adam(dk::AdamConfig{cfg.learning_rate});
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    Graph g;
    const models::BoundParams bp = models::bind(g, params, false);
    const LayerVars vars = bind_layer(g, state);
    Rng rng(derive_seed(seed, {kLayerStream, step}));
    std::vector<Var> deltas;
    for (std::size_t j = 0; j < cfg.n_delta; ++j) {
      deltas.push_back(relaxed_layer_delta(vars, window.x, spec.k, spec.eta, cfg.temperature, rng,
                                           spec.targets));
    }
    Var hist = perturbed_batch(g, window.x, deltas);
    const auto noise = models::draw_noise(rng, cfg.n_delta * spec.n_grad, params.dim,
                                          params.factor_rank(), steps_needed);
    const auto steps = models::rollout(
        bp, hist, models::RolloutSpec{cfg.n_delta, T, spec.n_grad, steps_needed}, noise);
    Var loss = mean_statistic_loss(steps, target, spec, cfg.n_delta, spec.n_grad);
    try {
      g.forward();
    } catch (const NonFiniteError& e) {
      throw DivergenceError("probabilistic attack diverged at step " + std::to_string(step) +
                            ": " + e.what());
    }
    const auto grads = g.backward(loss);
    std::vector<const Tensor*> gl;
    for (Var v : vars.list()) gl.push_back(&grads[v]);
    adam.step(state.tensors(), gl);
  }
  return state.params();
}

double probabilistic_objective(const ForecasterParams& params, const SparseLayerParams& layer,
                               const Tensor& x, const Tensor& target, const AttackSpec& spec,
                               std::size_t horizon, std::size_t n_delta, std::uint64_t seed) {
  spec.validate(params.dim, horizon);
  const std::size_t T = x.cols();
  const std::size_t steps_needed = rollout_length(spec);
  double total = 0.0;
  for (std::size_t j = 0; j < n_delta; ++j) {
    const LayerSample s =
        sparse_layer_sample(layer, x, spec.k, derive_seed(seed, {kLayerStream, j}), spec.targets);
    Graph g;
    const models::BoundParams bp = models::bind(g, params, false);
    Var d = g.constant(clip(s.delta, spec.eta).transposed());
    Var hist = perturbed_batch(g, x, std::span<const Var>(&d, 1));
    Rng rng(derive_seed(seed, {kAttackStream, j}));
    const auto noise =
        models::draw_noise(rng, spec.n_grad, params.dim, params.factor_rank(), steps_needed);
    const auto steps =
        models::rollout(bp, hist, models::RolloutSpec{1, T, spec.n_grad, steps_needed}, noise);
    total += g.evaluate(mean_statistic_loss(steps, target, spec, 1, spec.n_grad)).item();
  }
  return total / static_cast<double>(n_delta);
}

Perturbation sample_perturbation(const SparseLayerParams& layer, const Window& window,
                                 const AttackSpec& spec, std::uint64_t seed) {
  const LayerSample s = sparse_layer_sample(layer, window.x, spec.k,
                                            derive_seed(seed, {kLayerStream, 0xe0a1}), spec.targets);
  Perturbation p;
  p.delta = clip(s.delta, spec.eta);
  p.spec = spec;
  p.sparsity = row_sparsity(p.delta);
  p.max_norm = max_abs(p.delta);
  p.bound = BoundKind::kExpected;
  // Expected count over the rows that can be nonzero.
  const auto r = keep_probabilities(layer.gamma, spec.k);
  double e = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!spec.is_target(i)) e += r[i];
  }
  p.expected_sparsity = e;
  p.window_id = window.id;
  p.seed = seed;
  return p;
}

Perturbation probabilistic_attack(const ForecasterParams& params, const Window& window,
                                  const AttackSpec& spec, const ProbTrainConfig& cfg,
                                  std::uint64_t seed) {
  const SparseLayerParams layer = probabilistic_attack_train(params, window, spec, cfg, seed);
  return sample_perturbation(layer, window, spec, seed);
}

}  // namespace tsadv::attacks
