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

// Compiled with -mavx2 -mfma. Only reached through the dispatch table after a
// cpuid check, so nothing here may be called unconditionally.

#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "kernels_impl.hpp"

namespace tsadv::kernels::avx2 {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

void matmul_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      const __m256d va = _mm256_set1_pd(av);
      const double* brow = b + p * n;
      std::size_t j = 0;
      for (; j + 4 <= n; j += 4) {
        const __m256d vc = _mm256_loadu_pd(crow + j);
        _mm256_storeu_pd(crow + j, _mm256_fmadd_pd(va, _mm256_loadu_pd(brow + j), vc));
      }
      for (; j < n; ++j) crow[j] = std::fma(av, brow[j], crow[j]);
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
      if (av == 0.0) continue;
      const __m256d va = _mm256_set1_pd(av);
      double* crow = c + p * n;
      std::size_t j = 0;
      for (; j + 4 <= n; j += 4) {
        const __m256d vc = _mm256_loadu_pd(crow + j);
        _mm256_storeu_pd(crow + j, _mm256_fmadd_pd(va, _mm256_loadu_pd(brow + j), vc));
      }
      for (; j < n; ++j) crow[j] = std::fma(av, brow[j], crow[j]);
    }
  }
}

double dot(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s = std::fma(x[i], y[i], s);
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

void add(const double* x, const double* y, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) out[i] = x[i] + y[i];
}

void sub(const double* x, const double* y, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) out[i] = x[i] - y[i];
}

void mul(const double* x, const double* y, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) out[i] = x[i] * y[i];
}

void mul_acc(const double* x, const double* y, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i),
                                              _mm256_loadu_pd(out + i)));
  }
  for (; i < n; ++i) out[i] = std::fma(x[i], y[i], out[i]);
}

void clip(double* x, std::size_t n, double lo, double hi) {
  const __m256d vlo = _mm256_set1_pd(lo);
  const __m256d vhi = _mm256_set1_pd(hi);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(x + i);
    _mm256_storeu_pd(x + i, _mm256_min_pd(_mm256_max_pd(v, vlo), vhi));
  }
  for (; i < n; ++i) x[i] = std::clamp(x[i], lo, hi);
}

double pinball_sum(const double* truth, const double* q, std::size_t n, double alpha) {
  const __m256d va = _mm256_set1_pd(alpha);
  const __m256d vam1 = _mm256_set1_pd(alpha - 1.0);
  const __m256d zero = _mm256_setzero_pd();
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d diff = _mm256_sub_pd(_mm256_loadu_pd(truth + i), _mm256_loadu_pd(q + i));
    const __m256d pos = _mm256_cmp_pd(diff, zero, _CMP_GT_OQ);
    const __m256d w = _mm256_blendv_pd(vam1, va, pos);
    acc = _mm256_fmadd_pd(w, diff, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    const double diff = truth[i] - q[i];
    s += diff > 0.0 ? alpha * diff : (alpha - 1.0) * diff;
  }
  return s;
}

}  // namespace tsadv::kernels::avx2
