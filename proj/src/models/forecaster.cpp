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

#include "tsadv/models/forecaster.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "tsadv/common/errors.hpp"
#include "tsadv/diffkit/lowrank_gaussian.hpp"
#include "tsadv/diffkit/ops.hpp"

namespace tsadv::models {

namespace dk = tsadv::diffkit;

namespace {

constexpr double kDiagFloor = 1e-6;

// Per-row-count cache of broadcast constants, so a rollout does not rebuild
// the same replicated scale rows at every step.
class RowBroadcasts {
 public:
  explicit RowBroadcasts(Var row) : row_(row) {}
  Var get(std::size_t rows) {
    auto it = cache_.find(rows);
    if (it != cache_.end()) return it->second;
    Var v = dk::broadcast(row_, Shape{rows, row_.shape()[1]});
    cache_.emplace(rows, v);
    return v;
  }

 private:
  Var row_;
  std::map<std::size_t, Var> cache_;
};

struct Scaling {
  Var scale_row;
  Var inv_scale_row;
};

Scaling scaling_constants(Graph& g, const ForecasterParams& params) {
  std::vector<double> inv(params.scale.size());
  for (std::size_t i = 0; i < inv.size(); ++i) inv[i] = 1.0 / params.scale[i];
  return Scaling{g.constant(Tensor::matrix(1, params.dim, params.scale)),
                 g.constant(Tensor::matrix(1, params.dim, std::move(inv)))};
}

// Gated recurrent cell. `xp` holds the precomputed input projection for the
// batch rows (rows x 3H), `h` the previous state (rows x H).
Var gru_step(const BoundParams& p, Var xp, Var h) {
  const std::size_t hid = p.params->hidden;
  Var hzr = dk::matmul(h, p["w_rec_zr"]);
  Var z = dk::sigmoid(dk::slice(xp, 1, 0, hid) + dk::slice(hzr, 1, 0, hid));
  Var r = dk::sigmoid(dk::slice(xp, 1, hid, 2 * hid) + dk::slice(hzr, 1, hid, 2 * hid));
  Var cand = dk::tanh(dk::slice(xp, 1, 2 * hid, 3 * hid) + dk::matmul(r * h, p["w_rec_h"]));
  return h + z * (cand - h);
}

struct Emission {
  Var mean;    // rows x dim (scaled units)
  Var diag;    // rows x dim
  Var factor;  // rows x dim*rank (recurrent only)
};

class EmissionHeads {
 public:
  explicit EmissionHeads(const BoundParams& p) : p_(p) {
    const ForecasterParams& fp = *p.params;
    if (fp.kind == ModelKind::kLinearVar) {
      Var sd = dk::softplus(p["noise"]);
      lin_var_ = std::make_unique<RowBroadcasts>(dk::square(sd));
      lin_sd_ = std::make_unique<RowBroadcasts>(sd);
      intercept_ = std::make_unique<RowBroadcasts>(p["intercept"]);
    } else {
      b_mu_ = std::make_unique<RowBroadcasts>(p["b_mu"]);
      b_diag_ = std::make_unique<RowBroadcasts>(p["b_diag"]);
      b_factor_ = std::make_unique<RowBroadcasts>(p["b_factor"]);
    }
  }

  // features: rows x dim*L; h: rows x H (recurrent only)
  Emission emit(Var features, Var h) {
    const std::size_t rows = features.shape()[0];
    if (p_.params->kind == ModelKind::kLinearVar) {
      return Emission{dk::matmul(features, p_["coef"]) + intercept_->get(rows),
                      lin_var_->get(rows), Var{}};
    }
    Var mean = dk::matmul(h, p_["w_mu"]) + dk::matmul(features, p_["w_skip"]) + b_mu_->get(rows);
    Var diag = dk::softplus(dk::matmul(h, p_["w_diag"]) + b_diag_->get(rows)) + kDiagFloor;
    Var factor = dk::matmul(h, p_["w_factor"]) + b_factor_->get(rows);
    return Emission{mean, diag, factor};
  }

  Var linear_sd(std::size_t rows) { return lin_sd_->get(rows); }

 private:
  const BoundParams& p_;
  std::unique_ptr<RowBroadcasts> lin_var_, lin_sd_, intercept_, b_mu_, b_diag_, b_factor_;
};

// V eps for each row: factor (rows x dim*r) times tiled eps, summed per item.
Var factor_times_noise(Var factor, Var tiled_eps, std::size_t dim, std::size_t rank) {
  const std::size_t rows = factor.shape()[0];
  Var prod = dk::reshape(factor * tiled_eps, Shape{rows * dim, rank});
  return dk::reshape(dk::sum_axis(prod, 1), Shape{rows, dim});
}

std::vector<std::size_t> lag_rows(std::size_t batch, std::size_t length, std::size_t repeat,
                                  std::size_t t) {
  std::vector<std::size_t> idx;
  idx.reserve(batch * repeat);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t p = 0; p < repeat; ++p) idx.push_back(b * length + t);
  }
  return idx;
}

// Lag features for steps [first, last) of each sequence, stacked step-major:
// row s*B + b holds the features of sequence b at step first + s.
Var stacked_features(Var scaled, const ForecasterParams& fp, std::size_t batch,
                     std::size_t length, std::size_t first, std::size_t last) {
  std::vector<Var> parts;
  for (std::size_t l : fp.lags) {
    std::vector<std::size_t> idx;
    idx.reserve((last - first) * batch);
    for (std::size_t t = first; t < last; ++t) {
      for (std::size_t b = 0; b < batch; ++b) idx.push_back(b * length + t - l);
    }
    parts.push_back(dk::gather_rows(scaled, std::move(idx)));
  }
  return parts.size() == 1 ? parts.front() : dk::concat(parts, 1);
}

void check_history(const ForecasterParams& fp, Var history, std::size_t batch,
                   std::size_t length) {
  if (history.shape() != Shape{batch * length, fp.dim}) {
    throw ShapeError("history must be " + dk::shape_string(Shape{batch * length, fp.dim}) +
                     ", got " + dk::shape_string(history.shape()));
  }
  if (length < fp.max_lag()) {
    throw std::invalid_argument("history length " + std::to_string(length) +
                                " is shorter than the model's largest lag " +
                                std::to_string(fp.max_lag()));
  }
}

}  // namespace

BoundParams bind(Graph& g, const ForecasterParams& params, bool trainable) {
  params.validate();
  BoundParams out;
  out.params = &params;
  for (const auto& [name, t] : params.tensors) {
    out.vars.emplace(name, trainable ? g.parameter(t) : g.constant(t));
  }
  return out;
}

RolloutNoise draw_noise(Rng& rng, std::size_t rows, std::size_t dim, std::size_t rank,
                        std::size_t horizon) {
  RolloutNoise noise;
  for (std::size_t s = 0; s < horizon; ++s) {
    noise.diag.push_back(rng.normal_tensor(Shape{rows, dim}));
    if (rank > 0) {
      Tensor tiled(Shape{rows, dim * rank});
      for (std::size_t r = 0; r < rows; ++r) {
        std::vector<double> eps(rank);
        for (double& e : eps) e = rng.normal();
        for (std::size_t i = 0; i < dim; ++i) {
          for (std::size_t j = 0; j < rank; ++j) tiled.at(r, i * rank + j) = eps[j];
        }
      }
      noise.factor.push_back(std::move(tiled));
    }
  }
  return noise;
}

RolloutNoise zero_noise(std::size_t rows, std::size_t dim, std::size_t rank, std::size_t horizon) {
  RolloutNoise noise;
  for (std::size_t s = 0; s < horizon; ++s) {
    noise.diag.emplace_back(Shape{rows, dim});
    if (rank > 0) noise.factor.emplace_back(Shape{rows, dim * rank});
  }
  return noise;
}

std::vector<Var> rollout(const BoundParams& p, Var history, const RolloutSpec& spec,
                         const RolloutNoise& noise) {
  const ForecasterParams& fp = *p.params;
  Graph& g = history.graph();
  const std::size_t B = spec.batch, T = spec.length, n = spec.paths_per_history;
  const std::size_t rows = B * n;
  check_history(fp, history, B, T);
  if (noise.diag.size() < spec.horizon) throw std::invalid_argument("rollout: not enough noise");

  const Scaling sc = scaling_constants(g, fp);
  RowBroadcasts inv_scale(sc.inv_scale_row);
  RowBroadcasts scale(sc.scale_row);
  Var scaled = history * inv_scale.get(B * T);
  EmissionHeads heads(p);
  const bool recurrent = fp.kind == ModelKind::kRecurrentLowRank;
  const std::size_t L = fp.max_lag();
  const std::size_t rank = fp.factor_rank();

  Var h;
  std::unique_ptr<RowBroadcasts> b_in;
  if (recurrent) {
    b_in = std::make_unique<RowBroadcasts>(p["b_in"]);
    h = g.constant(Tensor(Shape{B, fp.hidden}));
    if (T > L) {
      Var feats = stacked_features(scaled, fp, B, T, L, T);
      Var proj = dk::matmul(feats, p["w_in"]) + b_in->get((T - L) * B);
      for (std::size_t s = 0; s < T - L; ++s) {
        h = gru_step(p, dk::slice(proj, 0, s * B, (s + 1) * B), h);
      }
    }
    if (n > 1) h = dk::gather_rows(h, lag_rows(B, 1, n, 0));
  }

  std::vector<Var> generated;  // scaled units
  std::vector<Var> outputs;    // raw units
  for (std::size_t j = 0; j < spec.horizon; ++j) {
    const std::size_t t = T + j;
    std::vector<Var> parts;
    for (std::size_t l : fp.lags) {
      if (t - l < T) {
        parts.push_back(dk::gather_rows(scaled, lag_rows(B, T, n, t - l)));
      } else {
        parts.push_back(generated[j - l]);
      }
    }
    Var feats = parts.size() == 1 ? parts.front() : dk::concat(parts, 1);
    if (recurrent) h = gru_step(p, dk::matmul(feats, p["w_in"]) + b_in->get(rows), h);
    const Emission e = heads.emit(feats, h);

    Var y = e.mean;
    if (recurrent) {
      y = y + dk::sqrt(e.diag) * g.constant(noise.diag[j]);
      if (rank > 0) {
        y = y + factor_times_noise(e.factor, g.constant(noise.factor[j]), fp.dim, rank);
      }
    } else {
      y = y + heads.linear_sd(rows) * g.constant(noise.diag[j]);
    }
    generated.push_back(y);
    outputs.push_back(y * scale.get(rows));
  }
  return outputs;
}

Var teacher_forced_loglik(const BoundParams& p, Var series, std::size_t batch,
                          std::size_t length, std::size_t horizon) {
  const ForecasterParams& fp = *p.params;
  Graph& g = series.graph();
  check_history(fp, series, batch, length);
  const std::size_t L = fp.max_lag();
  if (horizon == 0 || length < horizon || length - horizon < L) {
    throw std::invalid_argument("teacher_forced_loglik: need at least max-lag steps of context");
  }
  const std::size_t first_target = length - horizon;
  const Scaling sc = scaling_constants(g, fp);
  RowBroadcasts inv_scale(sc.inv_scale_row);
  Var scaled = series * inv_scale.get(batch * length);
  EmissionHeads heads(p);

  // Targets stacked step-major to match stacked_features().
  std::vector<std::size_t> target_idx;
  for (std::size_t t = first_target; t < length; ++t) {
    for (std::size_t b = 0; b < batch; ++b) target_idx.push_back(b * length + t);
  }
  Var targets = dk::gather_rows(scaled, target_idx);
  const std::size_t rows = horizon * batch;

  Var loglik;
  if (fp.kind == ModelKind::kLinearVar) {
    Var feats = stacked_features(scaled, fp, batch, length, first_target, length);
    const Emission e = heads.emit(feats, Var{});
    Var empty = g.constant(Tensor(Shape{rows, 0}));
    loglik = dk::sum(dk::lowrank_gaussian_logpdf(targets, e.mean, e.diag, empty, 0));
  } else {
    RowBroadcasts b_in(p["b_in"]);
    Var feats = stacked_features(scaled, fp, batch, length, L, length);
    Var proj = dk::matmul(feats, p["w_in"]) + b_in.get((length - L) * batch);
    Var h = g.constant(Tensor(Shape{batch, fp.hidden}));
    std::vector<Var> hs;
    for (std::size_t t = L; t < length; ++t) {
      const std::size_t s = t - L;
      h = gru_step(p, dk::slice(proj, 0, s * batch, (s + 1) * batch), h);
      if (t >= first_target) hs.push_back(h);
    }
    Var h_all = hs.size() == 1 ? hs.front() : dk::concat(hs, 0);
    Var target_feats = dk::slice(feats, 0, (first_target - L) * batch, (length - L) * batch);
    const Emission e = heads.emit(target_feats, h_all);
    loglik = dk::sum(dk::lowrank_gaussian_logpdf(targets, e.mean, e.diag, e.factor, fp.rank));
  }
  double log_scale = 0.0;
  for (double s : fp.scale) log_scale += std::log(s);
  return loglik - static_cast<double>(rows) * log_scale;
}

double log_likelihood(const Tensor& y, const Tensor& mean, const Tensor& diag,
                      const Tensor& factor) {
  const std::size_t d = y.size();
  if (mean.size() != d || diag.size() != d) {
    throw ShapeError("log_likelihood: y, mean, diag must have the same length");
  }
  std::size_t rank = 0;
  if (factor.size() > 0) {
    if (factor.rank() != 2 || factor.rows() != d) {
      throw ShapeError("log_likelihood: factor must be dim x r");
    }
    rank = factor.cols();
  }
  return diffkit::lowrank::logpdf(y.data(), mean.data(), diag.data(), factor.data(), rank);
}

Tensor time_major(const Tensor& x) { return x.transposed(); }

Var jitter_history(Var history, std::size_t n, double sigma, Rng& rng) {
  if (n == 0) throw std::invalid_argument("jitter_history: n must be at least 1");
  if (!(sigma >= 0.0)) throw std::invalid_argument("jitter_history: sigma must be >= 0");
  const Shape one = history.shape();
  Tensor factor(Shape{n * one[0], one[1]});
  for (double& v : factor.data()) v = 1.0 + sigma * rng.normal();
  Var tiled = n == 1 ? history : diffkit::concat(std::vector<Var>(n, history), 0);
  return tiled * history.graph().constant(std::move(factor));
}

PredictiveSamples sample_paths(const ForecasterParams& params, const Tensor& x, std::size_t n,
                               std::size_t horizon, std::uint64_t seed, SampleOptions options) {
  if (n == 0) throw std::invalid_argument("sample_paths: n must be at least 1");
  if (x.rank() != 2 || x.rows() != params.dim) {
    throw ShapeError("sample_paths: history must be dim x T");
  }
  const std::size_t T = x.cols();
  Graph g;
  const BoundParams p = bind(g, params, false);
  Var history = g.constant(time_major(x));
  const std::size_t rank = params.factor_rank();
  RolloutNoise noise;
  if (options.zero_noise) {
    noise = zero_noise(n, params.dim, rank, horizon);
  } else {
    Rng rng(derive_seed(seed, {kPathNoiseStream}));
    noise = draw_noise(rng, n, params.dim, rank, horizon);
  }
  RolloutSpec spec{1, T, n, horizon};
  if (options.input_jitter > 0.0) {
    Rng jitter(derive_seed(seed, {kInputJitterStream}));
    history = jitter_history(history, n, options.input_jitter, jitter);
    spec = RolloutSpec{n, T, 1, horizon};
  }
  const auto steps = rollout(p, history, spec, noise);
  g.forward();

  PredictiveSamples out;
  out.seed = seed;
  out.paths = Tensor(Shape{n, params.dim, horizon});
  for (std::size_t j = 0; j < horizon; ++j) {
    const Tensor& v = g.value(steps[j]);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t i = 0; i < params.dim; ++i) {
        out.paths[(r * params.dim + i) * horizon + j] = v.at(r, i);
      }
    }
  }
  return out;
}

Tensor predictive_mean_closed_form(const ForecasterParams& params, const Tensor& x,
                                   std::size_t h) {
  if (params.kind != ModelKind::kLinearVar) {
    throw std::invalid_argument("closed-form predictive mean requires a linear-VAR model");
  }
  params.validate();
  if (h == 0) throw std::invalid_argument("horizon must be at least 1");
  const std::size_t d = params.dim;
  const std::size_t T = x.cols();
  if (x.rows() != d || T < params.max_lag()) throw ShapeError("history must be dim x T, T >= p");

  // Scaled trajectory, history followed by predicted means.
  std::vector<std::vector<double>> traj(T);
  for (std::size_t t = 0; t < T; ++t) {
    traj[t].resize(d);
    for (std::size_t i = 0; i < d; ++i) traj[t][i] = x.at(i, t) / params.scale[i];
  }
  const Tensor& coef = params.tensor("coef");
  const Tensor& intercept = params.tensor("intercept");
  for (std::size_t s = 0; s < h; ++s) {
    const std::size_t t = T + s;
    std::vector<double> next(intercept.values());
    for (std::size_t li = 0; li < params.lags.size(); ++li) {
      const std::vector<double>& lagged = traj[t - params.lags[li]];
      for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) next[j] += lagged[i] * coef.at(li * d + i, j);
      }
    }
    traj.push_back(std::move(next));
  }
  Tensor out(Shape{d});
  for (std::size_t i = 0; i < d; ++i) out[i] = traj.back()[i] * params.scale[i];
  return out;
}

std::vector<double> mean_scaling(std::span<const Window> windows) {
  if (windows.empty()) throw std::invalid_argument("mean_scaling: no windows");
  const std::size_t d = windows.front().dim();
  std::vector<double> sum(d, 0.0);
  std::vector<double> count(d, 0.0);
  for (const Window& w : windows) {
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t t = 0; t < w.context(); ++t) {
        sum[i] += std::abs(w.x.at(i, t));
        count[i] += 1.0;
      }
    }
  }
  std::vector<double> scale(d);
  for (std::size_t i = 0; i < d; ++i) {
    const double m = count[i] > 0 ? sum[i] / count[i] : 0.0;
    scale[i] = m > 0.0 ? m : 1.0;
  }
  return scale;
}

}  // namespace tsadv::models
