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

#include "kernels_impl.hpp"

namespace tsadv::kernels::scalar {

void matmul_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void matmul_nt_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
                   std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < k; ++j) c[i * k + j] += dot(a + i * n, b + j * n, n);
  }
}

void matmul_tn_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                   std::size_t n) {
  for (std::size_t r = 0; r < m; ++r) {
    const double* arow = a + r * k;
    const double* brow = b + r * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      double* crow = c + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

double dot(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void add(const double* x, const double* y, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + y[i];
}

void sub(const double* x, const double* y, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] - y[i];
}

void mul(const double* x, const double* y, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] * y[i];
}

void mul_acc(const double* x, const double* y, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] += x[i] * y[i];
}

void clip(double* x, std::size_t n, double lo, double hi) {
  for (std::size_t i = 0; i < n; ++i) x[i] = std::clamp(x[i], lo, hi);
}

double pinball_sum(const double* truth, const double* q, std::size_t n, double alpha) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double diff = truth[i] - q[i];
    s += diff > 0.0 ? alpha * diff : (alpha - 1.0) * diff;
  }
  return s;
}

}  // namespace tsadv::kernels::scalar
