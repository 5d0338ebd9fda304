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

#include "tsadv/models/fit.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "tsadv/common/errors.hpp"
#include "tsadv/common/rng.hpp"
#include "tsadv/diffkit/ops.hpp"
#include "tsadv/diffkit/optim.hpp"

namespace tsadv::models {

namespace dk = tsadv::diffkit;

namespace {

double softplus_inverse(double y) { return y > 30.0 ? y : std::log(std::expm1(y)); }

Tensor random_tensor(Rng& rng, Shape shape, double sd) {
  Tensor t = rng.normal_tensor(std::move(shape));
  for (double& v : t.data()) v *= sd;
  return t;
}

struct OlsSolution {
  Tensor coef;       // dL x d, scaled units
  Tensor intercept;  // 1 x d
  std::vector<double> resid_var;
};

// Least squares over every transition inside each window's history + future.
OlsSolution solve_ols(std::span<const Window> windows, const std::vector<std::size_t>& lags,
                      const std::vector<double>& scale, double ridge) {
  const std::size_t d = windows.front().dim();
  const std::size_t L = *std::max_element(lags.begin(), lags.end());
  const std::size_t f = d * lags.size();
  const std::size_t len = windows.front().context() + windows.front().horizon();
  if (len <= L) throw std::invalid_argument("windows are too short for the requested lags");
  const std::size_t per = len - L;
  const auto n = static_cast<Eigen::Index>(per * windows.size());

  Eigen::MatrixXd X(n, f + 1);
  Eigen::MatrixXd Y(n, d);
  Eigen::Index row = 0;
  for (const Window& w : windows) {
    auto value = [&](std::size_t t, std::size_t i) {
      const double raw = t < w.context() ? w.x.at(i, t) : w.y_true.at(i, t - w.context());
      return raw / scale[i];
    };
    for (std::size_t t = L; t < len; ++t, ++row) {
      for (std::size_t li = 0; li < lags.size(); ++li) {
        for (std::size_t i = 0; i < d; ++i) X(row, li * d + i) = value(t - lags[li], i);
      }
      X(row, f) = 1.0;
      for (std::size_t j = 0; j < d; ++j) Y(row, j) = value(t, j);
    }
  }
  Eigen::MatrixXd gram = X.transpose() * X;
  gram.diagonal().array() += ridge * static_cast<double>(n);
  const Eigen::MatrixXd beta = gram.ldlt().solve(X.transpose() * Y);
  const Eigen::MatrixXd resid = Y - X * beta;

  OlsSolution sol{Tensor(Shape{f, d}), Tensor(Shape{1, d}), std::vector<double>(d)};
  for (std::size_t r = 0; r < f; ++r) {
    for (std::size_t j = 0; j < d; ++j) sol.coef.at(r, j) = beta(r, j);
  }
  for (std::size_t j = 0; j < d; ++j) {
    sol.intercept.at(0, j) = beta(f, j);
    const double v = resid.col(j).squaredNorm() / static_cast<double>(n);
    sol.resid_var[j] = std::max(v, 1e-8);
  }
  return sol;
}

std::vector<const Tensor*> gradient_list(const dk::Gradients& grads, const BoundParams& p,
                                         std::vector<Tensor*>& targets, ForecasterParams& params) {
  std::vector<const Tensor*> out;
  targets.clear();
  for (auto& [name, t] : params.tensors) {
    targets.push_back(&t);
    out.push_back(&grads[p[name]]);
  }
  return out;
}

}  // namespace

void check_dataset(std::span<const Window> windows) {
  if (windows.empty()) throw std::invalid_argument("dataset is empty");
  const Window& first = windows.front();
  if (first.dim() == 0 || first.context() == 0 || first.horizon() == 0) {
    throw std::invalid_argument("windows need dim, context and horizon of at least 1");
  }
  for (const Window& w : windows) {
    if (w.dim() != first.dim() || w.context() != first.context() ||
        w.horizon() != first.horizon() || w.y_true.rows() != first.dim()) {
      throw std::invalid_argument("window " + std::to_string(w.id) +
                                  " does not share the dataset's shape");
    }
    if (!w.x.all_finite() || !w.y_true.all_finite()) {
      throw std::invalid_argument("window " + std::to_string(w.id) + " has non-finite values");
    }
  }
}

ForecasterParams init_params(ModelKind kind, std::size_t dim, std::vector<std::size_t> lags,
                             std::size_t hidden, std::size_t rank, std::vector<double> scale,
                             std::uint64_t seed) {
  ForecasterParams p;
  p.kind = kind;
  p.dim = dim;
  p.lags = std::move(lags);
  p.hidden = kind == ModelKind::kLinearVar ? 0 : hidden;
  p.rank = kind == ModelKind::kLinearVar ? 0 : rank;
  p.scale = std::move(scale);
  if (p.scale.empty()) p.scale.assign(dim, 1.0);
  Rng rng(seed);
  const std::size_t f = p.feature_dim();
  if (kind == ModelKind::kLinearVar) {
    p.tensors["coef"] = random_tensor(rng, {f, dim}, 0.1 / std::sqrt(static_cast<double>(f)));
    p.tensors["intercept"] = Tensor(Shape{1, dim});
    p.tensors["noise"] = Tensor(Shape{1, dim}, softplus_inverse(1.0));
  } else {
    const std::size_t H = p.hidden;
    const double in_sd = 1.0 / std::sqrt(static_cast<double>(f));
    const double h_sd = 1.0 / std::sqrt(static_cast<double>(H));
    p.tensors["w_in"] = random_tensor(rng, {f, 3 * H}, in_sd);
    p.tensors["b_in"] = Tensor(Shape{1, 3 * H});
    p.tensors["w_rec_zr"] = random_tensor(rng, {H, 2 * H}, h_sd);
    p.tensors["w_rec_h"] = random_tensor(rng, {H, H}, h_sd);
    p.tensors["w_mu"] = random_tensor(rng, {H, dim}, 0.01 * h_sd);
    p.tensors["w_skip"] = random_tensor(rng, {f, dim}, 0.1 * in_sd);
    p.tensors["b_mu"] = Tensor(Shape{1, dim});
    p.tensors["w_diag"] = random_tensor(rng, {H, dim}, 0.01 * h_sd);
    p.tensors["b_diag"] = Tensor(Shape{1, dim}, softplus_inverse(0.5));
    p.tensors["w_factor"] = random_tensor(rng, {H, dim * p.rank}, 0.01 * h_sd);
    p.tensors["b_factor"] = random_tensor(rng, {1, dim * p.rank}, 0.1);
  }
  p.validate();
  return p;
}

Tensor stack_sequences(std::span<const Window> windows, std::span<const std::size_t> indices) {
  if (indices.empty()) throw std::invalid_argument("stack_sequences: no windows selected");
  const std::size_t d = windows[indices[0]].dim();
  const std::size_t T = windows[indices[0]].context();
  const std::size_t len = T + windows[indices[0]].horizon();
  Tensor out(Shape{indices.size() * len, d});
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const Window& w = windows[indices[b]];
    for (std::size_t t = 0; t < len; ++t) {
      for (std::size_t i = 0; i < d; ++i) {
        out.at(b * len + t, i) = t < T ? w.x.at(i, t) : w.y_true.at(i, t - T);
      }
    }
  }
  return out;
}

Var sequence_nll(const BoundParams& p, Var series, std::size_t batch, std::size_t length,
                 std::size_t horizon) {
  Var ll = teacher_forced_loglik(p, series, batch, length, horizon);
  const double count = static_cast<double>(batch * horizon * p.params->dim);
  return dk::scale(ll, -1.0 / count);
}

double dataset_nll(const ForecasterParams& params, std::span<const Window> windows) {
  check_dataset(windows);
  std::vector<std::size_t> all(windows.size());
  std::iota(all.begin(), all.end(), 0);
  Graph g;
  const BoundParams p = bind(g, params, false);
  const std::size_t len = windows.front().context() + windows.front().horizon();
  Var series = g.constant(stack_sequences(windows, all));
  Var nll = sequence_nll(p, series, windows.size(), len, windows.front().horizon());
  try {
    return g.evaluate(nll).item();
  } catch (const NonFiniteError&) {
    return std::numeric_limits<double>::infinity();
  }
}

Tensor var_matrix(const ForecasterParams& params, std::size_t lag_index) {
  if (params.kind != ModelKind::kLinearVar) {
    throw std::invalid_argument("var_matrix requires a linear-VAR model");
  }
  if (lag_index >= params.lags.size()) throw std::out_of_range("lag index out of range");
  const std::size_t d = params.dim;
  const Tensor& coef = params.tensor("coef");
  Tensor a(Shape{d, d});
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < d; ++i) {
      a.at(j, i) = coef.at(lag_index * d + i, j) * params.scale[j] / params.scale[i];
    }
  }
  return a;
}

FitResult fit(std::span<const Window> windows, const FitConfig& config) {
  check_dataset(windows);
  if (config.lags.empty()) throw std::invalid_argument("fit: at least one lag is required");
  const std::size_t d = windows.front().dim();
  const std::size_t T = windows.front().context();
  const std::size_t tau = windows.front().horizon();
  const std::size_t L = *std::max_element(config.lags.begin(), config.lags.end());
  if (T < L) throw std::invalid_argument("fit: context is shorter than the largest lag");

  ForecasterParams params = init_params(config.kind, d, config.lags, config.hidden, config.rank,
                                        mean_scaling(windows), derive_seed(config.seed, {1}));
  FitResult result;
  result.nll_history.push_back(dataset_nll(params, windows));

  const OlsSolution ols = solve_ols(windows, config.lags, params.scale, config.ridge);
  if (config.kind == ModelKind::kLinearVar) {
    params.tensor("coef") = ols.coef;
    params.tensor("intercept") = ols.intercept;
    for (std::size_t j = 0; j < d; ++j) {
      params.tensor("noise")[j] = softplus_inverse(std::sqrt(ols.resid_var[j]));
    }
    const double nll = dataset_nll(params, windows);
    if (!std::isfinite(nll)) throw DivergenceError("fit: closed-form solution has non-finite NLL");
    result.nll_history.push_back(nll);
    result.best_epoch = 1;
    result.params = std::move(params);
    return result;
  }

  // Recurrent: the skip path starts at the VAR solution, the diagonal head at
  // half the residual variance and the factor head carries the rest.
  params.tensor("w_skip") = ols.coef;
  params.tensor("b_mu") = ols.intercept;
  Rng init_rng(derive_seed(config.seed, {2}));
  for (std::size_t j = 0; j < d; ++j) {
    params.tensor("b_diag")[j] = softplus_inverse(0.5 * ols.resid_var[j]);
    const double sd = std::sqrt(0.5 * ols.resid_var[j] / static_cast<double>(params.rank));
    for (std::size_t r = 0; r < params.rank; ++r) {
      params.tensor("b_factor")[j * params.rank + r] = sd * init_rng.normal();
    }
  }
  double best = dataset_nll(params, windows);
  result.nll_history.push_back(best);
  ForecasterParams best_params = params;
  result.best_epoch = 0;

  dk::Adam adam(dk::AdamConfig{config.learning_rate, 0.9, 0.999, 1e-8, config.clip_norm});
  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t bs = std::max<std::size_t>(1, std::min(config.batch_size, windows.size()));
  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    Rng shuffle(derive_seed(config.seed, {3, epoch}));
    std::shuffle(order.begin(), order.end(), shuffle.engine());
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t end = std::min(order.size(), start + bs);
      std::span<const std::size_t> batch(order.data() + start, end - start);
      Graph g;
      const BoundParams p = bind(g, params, true);
      Var series = g.constant(stack_sequences(windows, batch));
      Var loss = sequence_nll(p, series, batch.size(), T + tau, tau);
      try {
        g.forward();
      } catch (const NonFiniteError& e) {
        throw DivergenceError("fit: non-finite loss in epoch " + std::to_string(epoch) + ": " +
                              e.what());
      }
      const dk::Gradients grads = g.backward(loss);
      std::vector<Tensor*> targets;
      const auto grad_ptrs = gradient_list(grads, p, targets, params);
      adam.step(targets, grad_ptrs);
    }
    const double nll = dataset_nll(params, windows);
    if (!std::isfinite(nll)) {
      throw DivergenceError("fit: training NLL became non-finite in epoch " +
                            std::to_string(epoch));
    }
    result.nll_history.push_back(nll);
    if (nll < best) {
      best = nll;
      best_params = params;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (config.patience > 0 && ++since_best >= config.patience) {
      break;
    }
  }
  result.params = std::move(best_params);
  return result;
}

}  // namespace tsadv::models
