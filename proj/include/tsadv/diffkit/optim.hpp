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
#include <vector>

#include "tsadv/diffkit/tensor.hpp"

namespace tsadv::diffkit {

struct AdamConfig {
  double learning_rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Rescale the joint gradient to this global l2 norm when exceeded; <= 0 disables.
  double clip_norm = 0.0;
};

// Adam over an ordered list of tensors. The order of `params` must be the same
// on every call.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  void step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads);
  std::size_t steps() const { return t_; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  std::size_t t_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

}  // namespace tsadv::diffkit
