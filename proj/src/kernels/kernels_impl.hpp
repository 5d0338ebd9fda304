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

#include <cstddef>

namespace tsadv::kernels {

#define TSADV_KERNEL_DECLS                                                                       \
  void matmul_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,     \
                  std::size_t n);                                                                \
  void matmul_nt_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t n,  \
                     std::size_t k);                                                             \
  void matmul_tn_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,  \
                     std::size_t n);                                                             \
  double dot(const double* x, const double* y, std::size_t n);                                   \
  void axpy(double alpha, const double* x, double* y, std::size_t n);                            \
  void add(const double* x, const double* y, double* out, std::size_t n);                        \
  void sub(const double* x, const double* y, double* out, std::size_t n);                        \
  void mul(const double* x, const double* y, double* out, std::size_t n);                        \
  void mul_acc(const double* x, const double* y, double* out, std::size_t n);                    \
  void clip(double* x, std::size_t n, double lo, double hi);                                     \
  double pinball_sum(const double* truth, const double* q, std::size_t n, double alpha);

namespace scalar {
TSADV_KERNEL_DECLS
}  // namespace scalar

namespace avx2 {
TSADV_KERNEL_DECLS
}  // namespace avx2

#undef TSADV_KERNEL_DECLS

}  // namespace tsadv::kernels
