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

#include "tsadv/models/types.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "tsadv/diffkit/tensor.hpp"

namespace tsadv::models {

std::string_view model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::kLinearVar:
      return "linear_var";
    case ModelKind::kRecurrentLowRank:
      return "recurrent_lowrank";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "linear_var" || name == "var") return ModelKind::kLinearVar;
  if (name == "recurrent_lowrank" || name == "gru") return ModelKind::kRecurrentLowRank;
  throw std::invalid_argument("unknown model kind '" + std::string(name) + "'");
}

std::size_t ForecasterParams::max_lag() const {
  return lags.empty() ? 0 : *std::max_element(lags.begin(), lags.end());
}

const Tensor& ForecasterParams::tensor(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw std::invalid_argument("missing parameter tensor '" + name + "'");
  return it->second;
}

Tensor& ForecasterParams::tensor(const std::string& name) {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw std::invalid_argument("missing parameter tensor '" + name + "'");
  return it->second;
}

void ForecasterParams::validate() const {
  if (dim == 0) throw std::invalid_argument("forecaster dim must be positive");
  if (lags.empty()) throw std::invalid_argument("forecaster needs at least one lag");
  for (std::size_t l : lags) {
    if (l == 0) throw std::invalid_argument("lags must be positive");
  }
  if (scale.size() != dim) throw std::invalid_argument("scale must have one entry per item");
  for (double s : scale) {
    if (!(s > 0.0)) throw std::invalid_argument("scale entries must be positive");
  }
  const std::size_t f = feature_dim();
  std::map<std::string, Shape> expected;
  if (kind == ModelKind::kLinearVar) {
    expected = {{"coef", {f, dim}}, {"intercept", {1, dim}}, {"noise", {1, dim}}};
  } else {
    if (hidden == 0) throw std::invalid_argument("recurrent forecaster needs hidden > 0");
    const std::size_t H = hidden;
    expected = {{"w_in", {f, 3 * H}},        {"b_in", {1, 3 * H}},    {"w_rec_zr", {H, 2 * H}},
                {"w_rec_h", {H, H}},         {"w_mu", {H, dim}},      {"w_skip", {f, dim}},
                {"b_mu", {1, dim}},          {"w_diag", {H, dim}},    {"b_diag", {1, dim}},
                {"w_factor", {H, dim * rank}}, {"b_factor", {1, dim * rank}}};
  }
  if (tensors.size() != expected.size()) {
    throw std::invalid_argument("forecaster has " + std::to_string(tensors.size()) +
                                " tensors, expected " + std::to_string(expected.size()));
  }
  for (const auto& [name, shape] : expected) {
    const Tensor& t = tensor(name);
    if (t.shape() != shape) {
      throw std::invalid_argument("parameter '" + name + "' has shape " +
                                  diffkit::shape_string(t.shape()) + ", expected " +
                                  diffkit::shape_string(shape));
    }
  }
}

Tensor PredictiveSamples::mean() const {
  const std::size_t n = count(), d = dim(), h = horizon();
  Tensor out(Shape{d, h});
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t s = 0; s < h; ++s) out.at(i, s) += at(p, i, s);
    }
  }
  for (std::size_t k = 0; k < out.size(); ++k) out[k] /= static_cast<double>(n);
  return out;
}

}  // namespace tsadv::models
