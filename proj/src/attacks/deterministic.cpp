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
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "tsadv/attacks/attacks.hpp"
#include "tsadv/common/errors.hpp"
#include "tsadv/diffkit/ops.hpp"

namespace tsadv::attacks {

namespace dk = tsadv::diffkit;
using dk::Graph;
using dk::Shape;
using dk::Var;

bool AttackSpec::is_target(std::size_t item) const {
  return std::find(targets.begin(), targets.end(), item) != targets.end();
}

void AttackSpec::validate(std::size_t dim, std::size_t horizon) const {
  if (targets.empty()) throw std::invalid_argument("attack: target set I is empty");
  if (horizons.empty()) throw std::invalid_argument("attack: horizon set H is empty");
  for (std::size_t i : targets) {
    if (i >= dim) throw std::invalid_argument("attack: target item " + std::to_string(i) +
                                              " out of range for dim " + std::to_string(dim));
  }
  for (std::size_t h : horizons) {
    if (h >= horizon) throw std::invalid_argument("attack: horizon offset " + std::to_string(h) +
                                                  " out of range for tau " + std::to_string(horizon));
  }
  std::vector<std::size_t> uniq(targets);
  std::sort(uniq.begin(), uniq.end());
  if (std::adjacent_find(uniq.begin(), uniq.end()) != uniq.end()) {
    throw std::invalid_argument("attack: duplicate target item");
  }
  if (k < 1 || k > dim - targets.size()) {
    throw std::invalid_argument("attack: k must be in [1, dim - |I|] = [1, " +
                                std::to_string(dim - targets.size()) + "], got " +
                                std::to_string(k));
  }
  if (!(eta > 0.0)) throw std::invalid_argument("attack: eta must be positive");
  if (!(c1 > 0.0) || c1 == 1.0) throw std::invalid_argument("attack: c1 must be positive and != 1");
  if (n_grad == 0) throw std::invalid_argument("attack: n_grad must be at least 1");
}

std::size_t row_sparsity(const Tensor& delta) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < delta.rows(); ++i) {
    for (std::size_t t = 0; t < delta.cols(); ++t) {
      if (delta.at(i, t) != 0.0) {
        ++count;
        break;
      }
    }
  }
  return count;
}

double max_abs(const Tensor& delta) {
  double m = 0.0;
  for (double v : delta.data()) m = std::max(m, std::abs(v));
  return m;
}

Tensor apply_perturbation(const Tensor& x, const Tensor& delta) {
  if (x.shape() != delta.shape()) throw ShapeError("perturbation shape differs from history");
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * (1.0 + delta[i]);
  return out;
}

Tensor statistic_matrix(const AttackSpec& spec) {
  const std::size_t ni = spec.targets.size(), nh = spec.horizons.size();
  switch (spec.statistic) {
    case Statistic::kPoint: {
      Tensor s(Shape{ni * nh, ni * nh});
      for (std::size_t j = 0; j < ni * nh; ++j) s.at(j, j) = 1.0;
      return s;
    }
    case Statistic::kMeanOverHorizon: {
      Tensor s(Shape{ni * nh, ni});
      for (std::size_t a = 0; a < ni; ++a) {
        for (std::size_t b = 0; b < nh; ++b) s.at(a * nh + b, a) = 1.0 / static_cast<double>(nh);
      }
      return s;
    }
    case Statistic::kSumOverItems: {
      Tensor s(Shape{ni * nh, nh});
      for (std::size_t a = 0; a < ni; ++a) {
        for (std::size_t b = 0; b < nh; ++b) s.at(a * nh + b, b) = 1.0;
      }
      return s;
    }
  }
  throw std::logic_error("unknown statistic");
}

Tensor adversarial_target(const PredictiveSamples& samples, const AttackSpec& spec) {
  const Tensor s = statistic_matrix(spec);
  Tensor t(Shape{1, s.cols()});
  std::size_t row = 0;
  for (std::size_t i : spec.targets) {
    for (std::size_t h : spec.horizons) {
      const double y = samples.at(0, i, h);
      for (std::size_t j = 0; j < s.cols(); ++j) t.at(0, j) += spec.c1 * y * s.at(row, j);
      ++row;
    }
  }
  return t;
}

Tensor draw_adversarial_target(const ForecasterParams& params, const Tensor& x,
                               std::size_t horizon, const AttackSpec& spec, std::uint64_t seed,
                               models::SampleOptions options) {
  options.zero_noise = false;
  return adversarial_target(models::sample_paths(params, x, 1, horizon, seed, options), spec);
}

Var statistic_loss(std::span<const Var> steps, const Tensor& target, const AttackSpec& spec) {
  if (steps.empty()) throw std::invalid_argument("statistic_loss: no rollout steps");
  Graph& g = steps.front().graph();
  const std::size_t n = steps.front().shape()[0];
  std::vector<Var> cols;
  for (std::size_t i : spec.targets) {
    for (std::size_t h : spec.horizons) cols.push_back(dk::slice(steps[h], 1, i, i + 1));
  }
  Var picked = cols.size() == 1 ? cols.front() : dk::concat(cols, 1);
  const Tensor s = statistic_matrix(spec);
  if (target.size() != s.cols()) throw ShapeError("statistic_loss: target has the wrong size");
  Var chi = spec.statistic == Statistic::kPoint ? picked : dk::matmul(picked, g.constant(s));
  Var t = dk::broadcast(g.constant(target.reshaped(Shape{1, s.cols()})), Shape{n, s.cols()});
  return dk::scale(dk::sum(dk::square(chi - t)), 1.0 / static_cast<double>(n));
}

std::size_t rollout_length(const AttackSpec& spec) {
  return *std::max_element(spec.horizons.begin(), spec.horizons.end()) + 1;
}

LossValue attack_loss(const ForecasterParams& params, const Tensor& x, const Tensor& delta,
                      const Tensor& target, const AttackSpec& spec, std::size_t horizon,
                      std::uint64_t seed, bool with_grad, models::SampleOptions options) {
  if (delta.shape() != x.shape()) throw ShapeError("attack_loss: delta must be dim x T");
  spec.validate(params.dim, horizon);
  const std::size_t T = x.cols();
  const std::size_t steps_needed = rollout_length(spec);

  Graph g;
  const models::BoundParams bp = models::bind(g, params, false);
  Var xs = g.constant(models::time_major(x));
  Var d = with_grad ? g.parameter(delta.transposed()) : g.constant(delta.transposed());
  Var hist = xs + xs * d;
  std::size_t histories = 1, paths = spec.n_grad;
  if (options.input_jitter > 0.0) {
    // Expectation over the smoothing noise: one jittered history per path.
    Rng jitter(derive_seed(seed, {models::kInputJitterStream}));
    hist = models::jitter_history(hist, spec.n_grad, options.input_jitter, jitter);
    histories = spec.n_grad;
    paths = 1;
  }
  models::RolloutNoise noise;
  if (options.zero_noise) {
    noise = models::zero_noise(spec.n_grad, params.dim, params.factor_rank(), steps_needed);
  } else {
    Rng rng(seed);
    noise = models::draw_noise(rng, spec.n_grad, params.dim, params.factor_rank(), steps_needed);
  }
  const auto steps =
      models::rollout(bp, hist, models::RolloutSpec{histories, T, paths, steps_needed}, noise);
  Var loss = statistic_loss(steps, target, spec);
  LossValue out;
  out.value = g.evaluate(loss).item();
  if (with_grad) out.grad = g.backward(loss)[d].transposed();
  return out;
}

Tensor clip(const Tensor& delta, double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("clip: eta must be positive");
  Tensor out = delta;
  for (double& v : out.data()) v = std::clamp(v, -eta, eta);
  return out;
}

Tensor pgd_step(const Tensor& delta, const Tensor& grad, double step_size, double eta) {
  if (delta.shape() != grad.shape()) throw ShapeError("pgd_step: delta and grad differ in shape");
  Tensor out = delta;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= step_size * grad[i];
  return clip(out, eta);
}

Perturbation sparsify_topk(const Tensor& delta, std::size_t k,
                           std::span<const std::size_t> targets, RowRanking ranking) {
  const std::size_t d = delta.rows(), T = delta.cols();
  std::vector<bool> is_target(d, false);
  for (std::size_t i : targets) {
    if (i >= d) throw std::invalid_argument("sparsify_topk: target row out of range");
    is_target[i] = true;
  }
  const std::size_t free_rows =
      static_cast<std::size_t>(std::count(is_target.begin(), is_target.end(), false));
  if (k > free_rows) {
    throw std::invalid_argument("sparsify_topk: k=" + std::to_string(k) + " exceeds dim - |I| = " +
                                std::to_string(free_rows));
  }
  std::vector<std::size_t> order;
  std::vector<double> key(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    if (is_target[i]) continue;
    order.push_back(i);
    for (std::size_t t = 0; t < T; ++t) {
      const double v = delta.at(i, t);
      key[i] += ranking == RowRanking::kSquaredL2 ? v * v : std::abs(v);
    }
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return key[a] > key[b]; });
  std::vector<bool> keep(d, false);
  for (std::size_t j = 0; j < k; ++j) keep[order[j]] = true;

  Perturbation p;
  p.delta = Tensor(delta.shape());
  for (std::size_t i = 0; i < d; ++i) {
    if (!keep[i]) continue;
    for (std::size_t t = 0; t < T; ++t) p.delta.at(i, t) = delta.at(i, t);
  }
  p.spec.targets.assign(targets.begin(), targets.end());
  p.spec.k = k;
  p.spec.ranking = ranking;
  p.sparsity = row_sparsity(p.delta);
  p.max_norm = max_abs(p.delta);
  p.bound = BoundKind::kHard;
  return p;
}

Perturbation deterministic_attack(const ForecasterParams& params, const Window& window,
                                  const AttackSpec& spec, std::uint64_t seed,
                                  models::SampleOptions options) {
  spec.validate(params.dim, window.horizon());
  if (window.dim() != params.dim) throw ShapeError("attack: window dim differs from the model");
  const Tensor target = draw_adversarial_target(params, window.x, window.horizon(), spec,
                                                derive_seed(seed, {kTargetStream}), options);
  Tensor delta(window.x.shape());
  const double step = spec.effective_step();
  for (std::size_t it = 0; it < spec.iterations; ++it) {
    LossValue lv = attack_loss(params, window.x, delta, target, spec, window.horizon(),
                               derive_seed(seed, {kAttackStream, it}), true, options);
    // Projection onto delta_I = 0, then a max-normalized descent step.
    for (std::size_t i : spec.targets) {
      for (std::size_t t = 0; t < lv.grad.cols(); ++t) lv.grad.at(i, t) = 0.0;
    }
    const double scale = max_abs(lv.grad);
    if (scale == 0.0) break;
    for (double& v : lv.grad.data()) v /= scale;
    delta = pgd_step(delta, lv.grad, step, spec.eta);
  }
  Perturbation p = sparsify_topk(delta, spec.k, spec.targets, spec.ranking);
  p.spec = spec;
  p.window_id = window.id;
  p.seed = seed;
  return p;
}

}  // namespace tsadv::attacks
