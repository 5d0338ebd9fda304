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

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "tsadv/common/rng.hpp"
#include "tsadv/data/data.hpp"

namespace tsadv::data {

void SyntheticSpec::validate() const {
  const std::size_t d = dim();
  if (d == 0) throw std::invalid_argument("synthetic spec: noise_scale must list every item");
  if (lags.empty() || lags.size() != coefficients.size()) {
    throw std::invalid_argument("synthetic spec: need one coefficient matrix per lag");
  }
  for (std::size_t l : lags) {
    if (l == 0) throw std::invalid_argument("synthetic spec: lags must be positive");
  }
  if (kind == GeneratorKind::kVar1 && (lags.size() != 1 || lags[0] != 1)) {
    throw std::invalid_argument("synthetic spec: VAR(1) takes the single lag 1");
  }
  for (const Tensor& a : coefficients) {
    if (a.shape() != Shape{d, d}) throw std::invalid_argument("synthetic spec: A must be dim x dim");
  }
  if (!intercept.empty() && intercept.size() != d) {
    throw std::invalid_argument("synthetic spec: intercept must have dim entries");
  }
  if (!initial.empty() && initial.size() != d) {
    throw std::invalid_argument("synthetic spec: initial state must have dim entries");
  }
  for (double s : noise_scale) {
    if (!(s >= 0.0)) throw std::invalid_argument("synthetic spec: noise scales must be >= 0");
  }
}

double spectral_radius(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t d = spec.dim();
  const std::size_t p = *std::max_element(spec.lags.begin(), spec.lags.end());
  const auto n = static_cast<Eigen::Index>(d * p);
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t li = 0; li < spec.lags.size(); ++li) {
    const std::size_t block = spec.lags[li] - 1;
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t i = 0; i < d; ++i) {
        companion(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(block * d + i)) +=
            spec.coefficients[li].at(j, i);
      }
    }
  }
  for (Eigen::Index r = static_cast<Eigen::Index>(d); r < n; ++r) {
    companion(r, r - static_cast<Eigen::Index>(d)) = 1.0;
  }
  return companion.eigenvalues().cwiseAbs().maxCoeff();
}

std::vector<double> process_mean(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t d = spec.dim();
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(d, d);
  for (const Tensor& a : spec.coefficients) {
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t i = 0; i < d; ++i) m(j, i) -= a.at(j, i);
    }
  }
  Eigen::VectorXd c = Eigen::VectorXd::Zero(d);
  for (std::size_t j = 0; j < spec.intercept.size(); ++j) c(j) = spec.intercept[j];
  const Eigen::VectorXd mu = m.partialPivLu().solve(c);
  return std::vector<double>(mu.data(), mu.data() + d);
}

Dataset generate(const SyntheticSpec& spec) {
  spec.validate();
  const double rho = spectral_radius(spec);
  if (!(rho < 1.0)) {
    throw std::invalid_argument("synthetic spec is not stationary: companion spectral radius " +
                                std::to_string(rho));
  }
  if (spec.length == 0) throw std::invalid_argument("synthetic spec: length must be positive");
  const std::size_t d = spec.dim();
  const std::size_t p = *std::max_element(spec.lags.begin(), spec.lags.end());
  const std::vector<double> start = spec.initial.empty() ? process_mean(spec) : spec.initial;
  const std::size_t total = spec.burn_in + spec.length;

  // history[p + t] holds x_t; the first p entries are pre-sample values.
  std::vector<std::vector<double>> history(p, start);
  history.reserve(p + total);
  Rng rng(spec.seed);
  for (std::size_t t = 0; t < total; ++t) {
    std::vector<double> x(d, 0.0);
    if (!spec.intercept.empty()) x = spec.intercept;
    for (std::size_t li = 0; li < spec.lags.size(); ++li) {
      const std::vector<double>& lagged = history[p + t - spec.lags[li]];
      const Tensor& a = spec.coefficients[li];
      for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t i = 0; i < d; ++i) x[j] += a.at(j, i) * lagged[i];
      }
    }
    for (std::size_t j = 0; j < d; ++j) x[j] += spec.noise_scale[j] * rng.normal();
    history.push_back(std::move(x));
  }
  // With no burn-in and an explicit initial state, x_0 is the initial state.
  Dataset ds;
  ds.values = Tensor(Shape{d, spec.length});
  const bool anchor = spec.burn_in == 0 && !spec.initial.empty();
  for (std::size_t t = 0; t < spec.length; ++t) {
    const std::vector<double>& x =
        anchor ? (t == 0 ? spec.initial : history[p + t - 1]) : history[p + spec.burn_in + t];
    for (std::size_t j = 0; j < d; ++j) ds.values.at(j, t) = x[j];
  }
  for (std::size_t j = 0; j < d; ++j) ds.item_ids.push_back("item_" + std::to_string(j));
  for (std::size_t t = 0; t < spec.length; ++t) {
    ds.timestamps.push_back(iso_timestamp(1577836800 + static_cast<std::int64_t>(t) * 3600));
  }
  ds.split_index = spec.length;
  ds.validate();
  return ds;
}

SyntheticSpec electricity_like_spec(std::size_t length, std::uint64_t seed) {
  constexpr std::size_t d = 10;
  constexpr std::size_t kT = kBenchmarkTarget;
  SyntheticSpec s;
  s.kind = GeneratorKind::kSeasonalVar;
  s.lags = {1, 24};
  s.coefficients = {Tensor(Shape{d, d}), Tensor(Shape{d, d})};
  s.noise_scale.assign(d, 0.8);
  s.intercept.assign(d, 0.0);
  s.length = length;
  s.burn_in = 500;
  s.seed = seed;

  const double level[d] = {10.0, 12.0, 9.0, 11.0, 8.0, 10.5, 9.5, 12.5, 8.5, 11.5};
  const double own1[d] = {0.30, 0.20, 0.25, 0.35, 0.20, 0.30, 0.25, 0.20, 0.30, 0.25};
  const double own24[d] = {0.55, 0.20, 0.60, 0.50, 0.65, 0.55, 0.60, 0.60, 0.50, 0.60};
  // Loading of the target on each other item (24 and 1 steps back).
  const double load24[d] = {0.30, 0.0, 0.26, 0.22, 0.19, 0.16, 0.13, 0.10, 0.07, 0.04};
  const double load1[d] = {0.05, 0.0, 0.04, 0.04, 0.03, 0.03, 0.02, 0.02, 0.01, 0.01};
  for (std::size_t j = 0; j < d; ++j) {
    s.coefficients[0].at(j, j) = own1[j];
    s.coefficients[1].at(j, j) = own24[j];
    if (j != kT) {
      // weak ring coupling among the non-target items
      const std::size_t nb = j + 1 == d ? 0 : (j + 1 == kT ? j + 2 : j + 1);
      s.coefficients[0].at(j, nb % d) = 0.05;
      s.intercept[j] = level[j] * (1.0 - own1[j] - own24[j]) - 0.05 * level[nb % d];
    } else {
      s.noise_scale[j] = 0.5;
    }
  }
  double pulled = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    s.coefficients[1].at(kT, i) += load24[i];
    s.coefficients[0].at(kT, i) += load1[i];
    pulled += (load24[i] + load1[i]) * level[i];
  }
  s.intercept[kT] = level[kT] * (1.0 - own1[kT] - own24[kT]) - pulled;
  return s;
}

}  // namespace tsadv::data
