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

#include "tsadv/diffkit/optim.hpp"

#include <cmath>
#include <stdexcept>

#include "tsadv/common/errors.hpp"

namespace tsadv::diffkit {

void Adam::step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads) {
  if (params.size() != grads.size()) throw std::invalid_argument("Adam: params/grads mismatch");
  if (m_.empty()) {
    for (const Tensor* p : params) {
      m_.emplace_back(p->shape());
      v_.emplace_back(p->shape());
    }
  }
  if (m_.size() != params.size()) throw std::invalid_argument("Adam: parameter list changed");

  double factor = 1.0;
  if (config_.clip_norm > 0.0) {
    double sq = 0.0;
    for (const Tensor* g : grads) {
      for (double v : g->data()) sq += v * v;
    }
    const double norm = std::sqrt(sq);
    if (!std::isfinite(norm)) throw NonFiniteError("Adam: non-finite gradient");
    if (norm > config_.clip_norm) factor = config_.clip_norm / norm;
  }

  ++t_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto x = params[p]->data();
    auto g = grads[p]->data();
    if (g.size() != x.size()) throw ShapeError("Adam: gradient shape mismatch");
    auto m = m_[p].data();
    auto v = v_[p].data();
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double gi = g[i] * factor;
      m[i] = b1 * m[i] + (1.0 - b1) * gi;
      v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
      x[i] -= config_.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + config_.epsilon);
    }
  }
}

}  // namespace tsadv::diffkit
