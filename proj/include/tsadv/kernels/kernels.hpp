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

// Dense double-precision inner loops used by the autodiff engine and the
// metrics. Every kernel has a scalar reference implementation; an AVX2/FMA
// variant is selected at runtime when the CPU supports it. The two variants
// are required to agree to within rounding (see tests/unit/kernels_test.cpp).

#include <cstddef>
#include <string_view>

namespace tsadv::kernels {

enum class Isa { kScalar, kAvx2 };

std::string_view isa_name(Isa isa);

// All matrices are row-major and densely packed.
struct KernelTable {
  Isa isa;

  // c(m x n) += a(m x k) * b(k x n)
  void (*matmul_acc)(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                     std::size_t n);
  // c(m x k) += a(m x n) * b(k x n)^T
  void (*matmul_nt_acc)(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
                        std::size_t k);
  // c(k x n) += a(m x k)^T * b(m x n)
  void (*matmul_tn_acc)(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                        std::size_t n);

  double (*dot)(const double* x, const double* y, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // out = x + y
  void (*add)(const double* x, const double* y, double* out, std::size_t n);
  // out = x - y
  void (*sub)(const double* x, const double* y, double* out, std::size_t n);
  // out = x * y (elementwise)
  void (*mul)(const double* x, const double* y, double* out, std::size_t n);
  // out += x * y (elementwise)
  void (*mul_acc)(const double* x, const double* y, double* out, std::size_t n);
  // in place clamp to [lo, hi]
  void (*clip)(double* x, std::size_t n, double lo, double hi);
  // sum_j alpha*max(truth-q,0) + (1-alpha)*max(q-truth,0)
  double (*pinball_sum)(const double* truth, const double* q, std::size_t n, double alpha);
};

const KernelTable& scalar_table();

// Null when the AVX2 variant was not compiled in or the CPU lacks AVX2+FMA.
const KernelTable* avx2_table();

// The table used by the library. Chosen once: AVX2 when available, unless the
// environment variable TSADV_KERNELS=scalar forces the reference kernels.
const KernelTable& active();

}  // namespace tsadv::kernels
