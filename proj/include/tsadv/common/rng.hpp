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

// Seeded random streams. Every consumer derives its own stream from a base
// seed plus a list of stream identifiers, so results never depend on the order
// in which independent jobs run.

#include <cstdint>
#include <initializer_list>
#include <random>

#include "tsadv/diffkit/tensor.hpp"

namespace tsadv {

std::uint64_t splitmix64(std::uint64_t x);

// Mixes a base seed with stream identifiers into an independent seed.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> stream);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  std::mt19937_64& engine() { return engine_; }

  // Tensor of i.i.d. standard normals, filled in row-major order.
  diffkit::Tensor normal_tensor(diffkit::Shape shape);

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace tsadv
