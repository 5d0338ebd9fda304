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

#include "tsadv/defenses/defenses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "tsadv/diffkit/ops.hpp"
#include "tsadv/diffkit/optim.hpp"

namespace tsadv::defenses {

namespace dk = tsadv::diffkit;
using dk::Graph;
using dk::Shape;
using dk::Var;
using nlohmann::json;

std::string_view defense_name(DefenseKind kind) {
  switch (kind) {
    case DefenseKind::kNone: return "none";
    case DefenseKind::kAugmentation: return "augmentation";
    case DefenseKind::kSmoothing: return "smoothing";
    case DefenseKind::kMinimax: return "minimax";
  }
  throw std::logic_error("unknown defense kind");
}

DefenseKind parse_defense(std::string_view name) {
  for (DefenseKind k : {DefenseKind::kNone, DefenseKind::kAugmentation, DefenseKind::kSmoothing,
                        DefenseKind::kMinimax}) {
    if (defense_name(k) == name) return k;
  }
  throw std::invalid_argument("unknown defense '" + std::string(name) + "'");
}

Window augment(const Window& window, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("augment: sigma must be >= 0");
  Window out = window;
  if (sigma == 0.0) return out;
  Rng rng(derive_seed(seed, {kAugmentStream}));
  for (double& v : out.x.data()) v *= 1.0 + sigma * rng.normal();
  return out;
}

void AugmentConfig::validate() const {
  if (!(sigma >= 0.0)) throw std::invalid_argument("augmentation: sigma must be >= 0");
  if (copies == 0) throw std::invalid_argument("augmentation: copies must be >= 1");
}

models::FitResult fit_augmented(std::span<const Window> windows, const models::FitConfig& fit,
                                const AugmentConfig& cfg) {
  cfg.validate();
  models::check_dataset(windows);
  std::vector<Window> noisy;
  noisy.reserve(windows.size() * cfg.copies);
  for (std::size_t c = 0; c < cfg.copies; ++c) {
    for (std::size_t n = 0; n < windows.size(); ++n) {
      noisy.push_back(augment(windows[n], cfg.sigma, derive_seed(cfg.seed, {c, n})));
    }
  }
  return models::fit(noisy, fit);
}

void SmoothingConfig::validate() const {
  if (!(sigma >= 0.0)) throw std::invalid_argument("smoothing: sigma must be >= 0");
  if (n == 0) throw std::invalid_argument("smoothing: n must be >= 1");
}

PredictiveSamples smoothed_sample_paths(const ForecasterParams& params, const Tensor& x,
                                        std::size_t horizon, const SmoothingConfig& cfg) {
  cfg.validate();
  return models::sample_paths(params, x, cfg.n, horizon, cfg.seed, cfg.options());
}

void MinimaxConfig::validate(std::size_t dim) const {
  const std::size_t kk = effective_k(dim);
  if (kk < 1 || kk > dim) {
    throw std::invalid_argument("minimax: k must be in [1, " + std::to_string(dim) + "]");
  }
  if (epochs == 0) throw std::invalid_argument("minimax: epochs must be >= 1");
  if (n_delta == 0 || n_paths == 0 || batch_size == 0) {
    throw std::invalid_argument("minimax: n_delta, n_paths and batch_size must be >= 1");
  }
  if (!(eta > 0.0)) throw std::invalid_argument("minimax: eta must be positive");
  if (!(temperature > 0.0)) throw std::invalid_argument("minimax: temperature must be positive");
  if (!(attacker_lr >= 0.0) || !(model_lr >= 0.0)) {
    throw std::invalid_argument("minimax: learning rates must be >= 0");
  }
}

namespace {

// Uniform minibatch without replacement, deterministic in `seed`.
std::vector<std::size_t> draw_batch(std::size_t n, std::size_t size, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng.engine());
  idx.resize(std::min(n, size));
  return idx;
}

// Sequences (history then future, time-major) for every (window, draw) pair,
// each history multiplied by (1 + delta) of its draw.
Tensor corrupted_sequences(const attacks::SparseLayerParams& layer, std::span<const Window> windows,
                           std::span<const std::size_t> batch, const MinimaxConfig& cfg,
                           std::uint64_t seed) {
  const Window& first = windows[batch[0]];
  const std::size_t d = first.dim(), T = first.context(), tau = first.horizon();
  const std::size_t len = T + tau;
  const std::size_t k = cfg.effective_k(d);
  Tensor out(Shape{batch.size() * cfg.n_delta * len, d});
  std::size_t seq = 0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Window& w = windows[batch[b]];
    for (std::size_t r = 0; r < cfg.n_delta; ++r, ++seq) {
      Tensor delta(w.x.shape());
      if (!cfg.freeze_layer) {
        delta = attacks::clip(
            attacks::sparse_layer_sample(layer, w.x, k, derive_seed(seed, {batch[b], r})).delta,
            cfg.eta);
      }
      for (std::size_t t = 0; t < len; ++t) {
        for (std::size_t i = 0; i < d; ++i) {
          out.at(seq * len + t, i) =
              t < T ? w.x.at(i, t) * (1.0 + delta.at(i, t)) : w.y_true.at(i, t - T);
        }
      }
    }
  }
  return out;
}

// Negative mean l2 deviation (mean-scaled units) of the forecast mean under
// relaxed layer draws from the truth.
Var attacker_objective(Graph& g, const models::BoundParams& bp, const attacks::LayerVars& vars,
                       std::span<const Window> windows, std::span<const std::size_t> batch,
                       const MinimaxConfig& cfg, Rng& rng) {
  const ForecasterParams& params = *bp.params;
  const Window& first = windows[batch[0]];
  const std::size_t d = first.dim(), T = first.context(), tau = first.horizon();
  const std::size_t k = cfg.effective_k(d);
  const std::size_t histories = batch.size() * cfg.n_delta;

  std::vector<Var> deltas;
  Tensor xs(Shape{histories * T, d});
  std::size_t h = 0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Window& w = windows[batch[b]];
    for (std::size_t r = 0; r < cfg.n_delta; ++r, ++h) {
      deltas.push_back(
          attacks::relaxed_layer_delta(vars, w.x, k, cfg.eta, cfg.temperature, rng, {}));
      for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t i = 0; i < d; ++i) xs.at(h * T + t, i) = w.x.at(i, t);
      }
    }
  }
  Var x = g.constant(std::move(xs));
  Var delta = deltas.size() == 1 ? deltas.front() : dk::concat(deltas, 0);
  Var hist = x + x * delta;

  const bool exact_mean = params.kind == models::ModelKind::kLinearVar;
  const std::size_t paths = exact_mean ? 1 : cfg.n_paths;
  const models::RolloutNoise noise =
      exact_mean ? models::zero_noise(histories, d, params.factor_rank(), tau)
                 : models::draw_noise(rng, histories * paths, d, params.factor_rank(), tau);
  const auto steps = models::rollout(bp, hist, models::RolloutSpec{histories, T, paths, tau}, noise);

  Var average;
  if (paths > 1) {
    Tensor m(Shape{histories, histories * paths});
    for (std::size_t a = 0; a < histories; ++a) {
      for (std::size_t p = 0; p < paths; ++p) m.at(a, a * paths + p) = 1.0 / static_cast<double>(paths);
    }
    average = g.constant(std::move(m));
  }
  Tensor inv_scale(Shape{histories, d});
  for (std::size_t a = 0; a < histories; ++a) {
    for (std::size_t i = 0; i < d; ++i) inv_scale.at(a, i) = 1.0 / params.scale[i];
  }
  Var inv = g.constant(std::move(inv_scale));
  Var total;
  for (std::size_t j = 0; j < tau; ++j) {
    Tensor truth(Shape{histories, d});
    h = 0;
    for (std::size_t b = 0; b < batch.size(); ++b) {
      for (std::size_t r = 0; r < cfg.n_delta; ++r, ++h) {
        for (std::size_t i = 0; i < d; ++i) truth.at(h, i) = windows[batch[b]].y_true.at(i, j);
      }
    }
    Var mean = paths > 1 ? dk::matmul(average, steps[j]) : steps[j];
    Var dev = (mean - g.constant(std::move(truth))) * inv;
    Var sq = dk::sum_axis(dk::square(dev), 1);
    total = j == 0 ? sq : total + sq;
  }
  return -dk::mean(dk::sqrt(dk::shift(total, 1e-12)));
}

}  // namespace

double corrupted_nll(const ForecasterParams& params, const attacks::SparseLayerParams& layer,
                     std::span<const Window> windows, const MinimaxConfig& cfg,
                     std::uint64_t seed) {
  models::check_dataset(windows);
  cfg.validate(params.dim);
  std::vector<std::size_t> all(windows.size());
  std::iota(all.begin(), all.end(), 0);
  const Window& first = windows.front();
  const std::size_t len = first.context() + first.horizon();
  Graph g;
  const models::BoundParams bp = models::bind(g, params, false);
  Var series = g.constant(corrupted_sequences(layer, windows, all, cfg, seed));
  return g
      .evaluate(models::sequence_nll(bp, series, windows.size() * cfg.n_delta, len,
                                     first.horizon()))
      .item();
}

MinimaxResult minimax_train(std::span<const Window> windows, const models::FitConfig& fit,
                            const MinimaxConfig& cfg) {
  models::check_dataset(windows);
  const std::size_t d = windows.front().dim();
  const std::size_t T = windows.front().context();
  const std::size_t tau = windows.front().horizon();
  cfg.validate(d);

  MinimaxResult result;
  result.params = models::fit(windows, fit).params;
  ForecasterParams& params = result.params;
  attacks::LayerState layer = attacks::LayerState::from(attacks::init_sparse_layer(d, T, cfg.eta));
  dk::Adam attacker(dk::AdamConfig{cfg.attacker_lr});
  dk::Adam model(dk::AdamConfig{cfg.model_lr, 0.9, 0.999, 1e-8, cfg.clip_norm});
  ForecasterParams last_stable = params;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto diverged = [&](const char* phase, const std::exception& e) {
      return MinimaxDivergence(std::string("minimax: non-finite ") + phase + " objective in epoch " +
                                   std::to_string(epoch) + ": " + e.what(),
                               last_stable, epoch);
    };
    // (a) the defender's sparse layer moves the forecast away from the truth.
    double attacker_sum = 0.0;
    const std::size_t a_steps = cfg.freeze_layer ? 0 : cfg.attacker_steps;
    for (std::size_t s = 0; s < a_steps; ++s) {
      const auto batch = draw_batch(windows.size(), cfg.batch_size,
                                    derive_seed(cfg.seed, {kMinimaxStream, epoch, 0, s}));
      Graph g;
      const models::BoundParams bp = models::bind(g, params, false);
      const attacks::LayerVars vars = attacks::bind_layer(g, layer);
      Rng rng(derive_seed(cfg.seed, {kMinimaxStream, epoch, 1, s}));
      Var loss = attacker_objective(g, bp, vars, windows, batch, cfg, rng);
      try {
        attacker_sum += g.evaluate(loss).item();
      } catch (const NonFiniteError& e) {
        throw diverged("attacker", e);
      }
      const auto grads = g.backward(loss);
      std::vector<const Tensor*> gl;
      for (Var v : vars.list()) gl.push_back(&grads[v]);
      attacker.step(layer.tensors(), gl);
    }
    result.attacker_loss.push_back(a_steps > 0 ? attacker_sum / static_cast<double>(a_steps) : 0.0);

    // (b) the forecaster maximizes the likelihood of the truth given x(1 + delta).
    const attacks::SparseLayerParams frozen = layer.params();
    double nll_sum = 0.0;
    for (std::size_t s = 0; s < cfg.model_steps; ++s) {
      const auto batch = draw_batch(windows.size(), cfg.batch_size,
                                    derive_seed(cfg.seed, {kMinimaxStream, epoch, 2, s}));
      const Tensor series = corrupted_sequences(frozen, windows, batch, cfg,
                                                derive_seed(cfg.seed, {kMinimaxStream, epoch, 3, s}));
      Graph g;
      const models::BoundParams bp = models::bind(g, params, true);
      Var loss = models::sequence_nll(bp, g.constant(series), batch.size() * cfg.n_delta, T + tau,
                                      tau);
      try {
        nll_sum += g.evaluate(loss).item();
      } catch (const NonFiniteError& e) {
        throw diverged("model", e);
      }
      const auto grads = g.backward(loss);
      std::vector<Tensor*> targets;
      std::vector<const Tensor*> gl;
      for (auto& [name, t] : params.tensors) {
        targets.push_back(&t);
        gl.push_back(&grads[bp[name]]);
      }
      model.step(targets, gl);
    }
    const double epoch_nll =
        cfg.model_steps > 0 ? nll_sum / static_cast<double>(cfg.model_steps) : 0.0;
    bool finite = std::isfinite(epoch_nll);
    for (const auto& [name, t] : params.tensors) {
      for (double v : t.data()) finite = finite && std::isfinite(v);
    }
    if (!finite) {
      throw MinimaxDivergence("minimax: parameters became non-finite in epoch " +
                                  std::to_string(epoch),
                              last_stable, epoch);
    }
    result.model_nll.push_back(epoch_nll);
    last_stable = params;
  }
  result.layer = layer.params();
  return result;
}

json to_json(const AugmentConfig& cfg) {
  return json{{"sigma", cfg.sigma}, {"copies", cfg.copies}, {"seed", cfg.seed}};
}

json to_json(const SmoothingConfig& cfg) {
  return json{{"sigma", cfg.sigma}, {"n", cfg.n}, {"seed", cfg.seed}};
}

json to_json(const MinimaxConfig& cfg) {
  return json{{"k", cfg.k},
              {"epochs", cfg.epochs},
              {"attacker_steps", cfg.attacker_steps},
              {"model_steps", cfg.model_steps},
              {"attacker_lr", cfg.attacker_lr},
              {"model_lr", cfg.model_lr},
              {"clip_norm", cfg.clip_norm},
              {"n_delta", cfg.n_delta},
              {"n_paths", cfg.n_paths},
              {"batch_size", cfg.batch_size},
              {"eta", cfg.eta},
              {"temperature", cfg.temperature},
              {"seed", cfg.seed}};
}

AugmentConfig augment_config_from_json(const json& doc) {
  AugmentConfig c;
  c.sigma = doc.value("sigma", c.sigma);
  c.copies = doc.value("copies", c.copies);
  c.seed = doc.value("seed", c.seed);
  c.validate();
  return c;
}

SmoothingConfig smoothing_config_from_json(const json& doc) {
  SmoothingConfig c;
  c.sigma = doc.value("sigma", c.sigma);
  c.n = doc.value("n", c.n);
  c.seed = doc.value("seed", c.seed);
  c.validate();
  return c;
}

MinimaxConfig minimax_config_from_json(const json& doc) {
  MinimaxConfig c;
  c.k = doc.value("k", c.k);
  c.epochs = doc.value("epochs", c.epochs);
  c.attacker_steps = doc.value("attacker_steps", c.attacker_steps);
  c.model_steps = doc.value("model_steps", c.model_steps);
  c.attacker_lr = doc.value("attacker_lr", c.attacker_lr);
  c.model_lr = doc.value("model_lr", c.model_lr);
  c.clip_norm = doc.value("clip_norm", c.clip_norm);
  c.n_delta = doc.value("n_delta", c.n_delta);
  c.n_paths = doc.value("n_paths", c.n_paths);
  c.batch_size = doc.value("batch_size", c.batch_size);
  c.eta = doc.value("eta", c.eta);
  c.temperature = doc.value("temperature", c.temperature);
  c.seed = doc.value("seed", c.seed);
  return c;
}

json defense_metadata(DefenseKind kind, const json& config) {
  json out = config.is_object() ? config : json::object();
  out["kind"] = std::string(defense_name(kind));
  return out;
}

}  // namespace tsadv::defenses
