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

#include <cstdlib>
#include <string>

#include "kernels_impl.hpp"
#include "tsadv/kernels/kernels.hpp"

namespace tsadv::kernels {
namespace {

constexpr KernelTable kScalarTable{
    Isa::kScalar,       scalar::matmul_acc, scalar::matmul_nt_acc, scalar::matmul_tn_acc,
    scalar::dot,        scalar::axpy,       scalar::add,           scalar::sub,
    scalar::mul,        scalar::mul_acc,    scalar::clip,          scalar::pinball_sum,
};

#ifdef TSADV_HAVE_AVX2
constexpr KernelTable kAvx2Table{
    Isa::kAvx2,       avx2::matmul_acc, avx2::matmul_nt_acc, avx2::matmul_tn_acc,
    avx2::dot,        avx2::axpy,       avx2::add,           avx2::sub,
    avx2::mul,        avx2::mul_acc,    avx2::clip,          avx2::pinball_sum,
};

bool cpu_has_avx2() {
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}
#endif

const KernelTable& choose() {
  if (const char* env = std::getenv("TSADV_KERNELS"); env != nullptr && std::string(env) == "scalar") {
    return kScalarTable;
  }
  if (const KernelTable* t = avx2_table()) return *t;
  return kScalarTable;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
  }
  return "unknown";
}

const KernelTable& scalar_table() { return kScalarTable; }

const KernelTable* avx2_table() {
#ifdef TSADV_HAVE_AVX2
  static const bool supported = cpu_has_avx2();
  return supported ? &kAvx2Table : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() {
  static const KernelTable& table = choose();
  return table;
}

}  // namespace tsadv::kernels
