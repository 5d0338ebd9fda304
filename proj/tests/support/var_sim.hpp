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

// Small, self-contained VAR helpers for tests: simulation and hand-built
// linear-VAR parameters, independent of the data module.

#include <vector>

#include "tsadv/common/rng.hpp"
#include "tsadv/models/types.hpp"

namespace tsadv::testing {

using models::ForecasterParams;
using models::Tensor;
using models::Window;

// x_t = A x_{t-1} + noise_sd * eps, started at zero, `burn` steps discarded.
// Returns dim x length.
inline Tensor simulate_var1(const std::vector<std::vector<double>>& a, double noise_sd,
                            std::size_t length, std::uint64_t seed, std::size_t burn = 200,
                            double offset = 0.0) {
  const std::size_t d = a.size();
  Rng rng(seed);
  std::vector<double> x(d, 0.0);
  Tensor out(models::Shape{d, length});
  for (std::size_t t = 0; t < burn + length; ++t) {
    std::vector<double> next(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t i = 0; i < d; ++i) next[j] += a[j][i] * x[i];
      next[j] += noise_sd * rng.normal();
    }
    x = next;
    if (t >= burn) {
      for (std::size_t j = 0; j < d; ++j) out.at(j, t - burn) = x[j] + offset;
    }
  }
  return out;
}

// Non-overlapping windows of context T and horizon tau cut from a series.
inline std::vector<Window> cut_windows(const Tensor& series, std::size_t T, std::size_t tau) {
  std::vector<Window> out;
  const std::size_t d = series.rows();
  for (std::size_t s = 0; s + T + tau <= series.cols(); s += T + tau) {
    Window w;
    w.id = out.size();
    w.start = s;
    w.x = Tensor(models::Shape{d, T});
    w.y_true = Tensor(models::Shape{d, tau});
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t t = 0; t < T; ++t) w.x.at(i, t) = series.at(i, s + t);
      for (std::size_t t = 0; t < tau; ++t) w.y_true.at(i, t) = series.at(i, s + T + t);
    }
    out.push_back(std::move(w));
  }
  return out;
}

// Linear-VAR(1) with x_t = A x_{t-1} + c + diag(sd) eps in raw units, unit
// scaling. A is row-major dim x dim.
inline ForecasterParams linear_var1(const std::vector<std::vector<double>>& a,
                                    std::vector<double> sd, std::vector<double> c = {}) {
  const std::size_t d = a.size();
  ForecasterParams p;
  p.kind = models::ModelKind::kLinearVar;
  p.dim = d;
  p.lags = {1};
  p.scale.assign(d, 1.0);
  Tensor coef(models::Shape{d, d});
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < d; ++i) coef.at(i, j) = a[j][i];
  }
  Tensor intercept(models::Shape{1, d});
  if (!c.empty()) {
    for (std::size_t j = 0; j < d; ++j) intercept[j] = c[j];
  }
  Tensor noise(models::Shape{1, d});
  for (std::size_t j = 0; j < d; ++j) {
    // inverse softplus; a tiny sd maps to a very negative pre-activation
    noise[j] = sd[j] > 30.0 ? sd[j] : std::log(std::expm1(sd[j]));
  }
  p.tensors["coef"] = coef;
  p.tensors["intercept"] = intercept;
  p.tensors["noise"] = noise;
  return p;
}

}  // namespace tsadv::testing
