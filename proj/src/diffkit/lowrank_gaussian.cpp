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

#include "tsadv/diffkit/lowrank_gaussian.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "tsadv/common/errors.hpp"

namespace tsadv::diffkit::lowrank {
namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// Everything both the density and its gradient need.
struct Factorization {
  std::size_t dim = 0;
  std::size_t rank = 0;
  std::vector<double> resid;     // y - mean
  std::vector<double> dinv;      // 1 / D
  std::vector<double> w;         // D^{-1} V, dim x rank
  std::vector<double> chol;      // lower Cholesky factor of C, rank x rank
  std::vector<double> alpha;     // S^{-1} (y - mean)
  double logdet = 0.0;
  double quad = 0.0;
};

// Solves C x = b in place given C = L L^T.
void chol_solve(const std::vector<double>& l, std::size_t r, double* b) {
  for (std::size_t i = 0; i < r; ++i) {
    double s = b[i];
    for (std::size_t j = 0; j < i; ++j) s -= l[i * r + j] * b[j];
    b[i] = s / l[i * r + i];
  }
  for (std::size_t i = r; i-- > 0;) {
    double s = b[i];
    for (std::size_t j = i + 1; j < r; ++j) s -= l[j * r + i] * b[j];
    b[i] = s / l[i * r + i];
  }
}

Factorization factorize(std::span<const double> y, std::span<const double> mean,
                        std::span<const double> diag, std::span<const double> factor,
                        std::size_t rank) {
  const std::size_t d = y.size();
  if (mean.size() != d || diag.size() != d || factor.size() != d * rank) {
    throw ShapeError("lowrank_gaussian: inconsistent argument sizes");
  }
  Factorization f;
  f.dim = d;
  f.rank = rank;
  f.resid.resize(d);
  f.dinv.resize(d);
  f.w.resize(d * rank);
  for (std::size_t i = 0; i < d; ++i) {
    if (!(diag[i] > 0.0)) {
      throw std::invalid_argument("lowrank_gaussian: diagonal entry " + std::to_string(i) +
                                  " is not strictly positive (" + std::to_string(diag[i]) + ")");
    }
    f.resid[i] = y[i] - mean[i];
    f.dinv[i] = 1.0 / diag[i];
    f.logdet += std::log(diag[i]);
    for (std::size_t j = 0; j < rank; ++j) f.w[i * rank + j] = factor[i * rank + j] * f.dinv[i];
  }

  // C = I + V^T D^{-1} V, then in-place Cholesky.
  std::vector<double>& l = f.chol;
  l.assign(rank * rank, 0.0);
  for (std::size_t a = 0; a < rank; ++a) {
    for (std::size_t b = 0; b <= a; ++b) {
      double s = a == b ? 1.0 : 0.0;
      for (std::size_t i = 0; i < d; ++i) s += factor[i * rank + a] * f.w[i * rank + b];
      l[a * rank + b] = s;
    }
  }
  for (std::size_t j = 0; j < rank; ++j) {
    double s = l[j * rank + j];
    for (std::size_t p = 0; p < j; ++p) s -= l[j * rank + p] * l[j * rank + p];
    const double ljj = std::sqrt(s);
    l[j * rank + j] = ljj;
    f.logdet += 2.0 * std::log(ljj);
    for (std::size_t i = j + 1; i < rank; ++i) {
      double t = l[i * rank + j];
      for (std::size_t p = 0; p < j; ++p) t -= l[i * rank + p] * l[j * rank + p];
      l[i * rank + j] = t / ljj;
    }
  }

  // alpha = D^{-1} e - W C^{-1} W^T e
  std::vector<double> u(rank, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < rank; ++j) u[j] += f.w[i * rank + j] * f.resid[i];
  }
  chol_solve(l, rank, u.data());
  f.alpha.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    double s = f.dinv[i] * f.resid[i];
    for (std::size_t j = 0; j < rank; ++j) s -= f.w[i * rank + j] * u[j];
    f.alpha[i] = s;
    f.quad += f.resid[i] * s;
  }
  return f;
}

}  // namespace

double logpdf(std::span<const double> y, std::span<const double> mean,
              std::span<const double> diag, std::span<const double> factor, std::size_t rank) {
  const Factorization f = factorize(y, mean, diag, factor, rank);
  return -0.5 * (static_cast<double>(f.dim) * kLog2Pi + f.logdet + f.quad);
}

void logpdf_grad(std::span<const double> y, std::span<const double> mean,
                 std::span<const double> diag, std::span<const double> factor, std::size_t rank,
                 double upstream, std::span<double> grad_y, std::span<double> grad_mean,
                 std::span<double> grad_diag, std::span<double> grad_factor) {
  const Factorization f = factorize(y, mean, diag, factor, rank);
  const std::size_t d = f.dim;
  for (std::size_t i = 0; i < d; ++i) {
    if (!grad_y.empty()) grad_y[i] -= upstream * f.alpha[i];
    if (!grad_mean.empty()) grad_mean[i] += upstream * f.alpha[i];
  }
  if (grad_diag.empty() && grad_factor.empty()) return;

  // P = W C^{-1} (dim x rank) equals S^{-1} V.
  std::vector<double> p(d * rank);
  std::vector<double> row(rank);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < rank; ++j) row[j] = f.w[i * rank + j];
    chol_solve(f.chol, rank, row.data());
    for (std::size_t j = 0; j < rank; ++j) p[i * rank + j] = row[j];
  }
  if (!grad_diag.empty()) {
    // d/dD_i = -1/2 (S^{-1}_ii - alpha_i^2), S^{-1}_ii = 1/D_i - W_i C^{-1} W_i^T
    for (std::size_t i = 0; i < d; ++i) {
      double sinv_ii = f.dinv[i];
      for (std::size_t j = 0; j < rank; ++j) sinv_ii -= f.w[i * rank + j] * p[i * rank + j];
      grad_diag[i] += upstream * -0.5 * (sinv_ii - f.alpha[i] * f.alpha[i]);
    }
  }
  if (!grad_factor.empty()) {
    // d/dV = -(S^{-1} V - alpha alpha^T V)
    std::vector<double> av(rank, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < rank; ++j) av[j] += f.alpha[i] * factor[i * rank + j];
    }
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < rank; ++j) {
        grad_factor[i * rank + j] += upstream * -(p[i * rank + j] - f.alpha[i] * av[j]);
      }
    }
  }
}

}  // namespace tsadv::diffkit::lowrank
