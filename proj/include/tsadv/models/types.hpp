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
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "tsadv/diffkit/tensor.hpp"

namespace tsadv::models {

using diffkit::Shape;
using diffkit::Tensor;

// One forecasting instance: history x (dim x context) and the future that
// followed it, y_true (dim x horizon).
struct Window {
  Tensor x;
  Tensor y_true;
  std::size_t id = 0;
  // Offset of the first history column in the source dataset.
  std::size_t start = 0;
  std::vector<std::string> item_ids;
  // Timestamps of the context followed by the horizon, when known.
  std::vector<std::string> timestamps;

  std::size_t dim() const { return x.rows(); }
  std::size_t context() const { return x.cols(); }
  std::size_t horizon() const { return y_true.cols(); }
};

enum class ModelKind { kLinearVar, kRecurrentLowRank };

std::string_view model_kind_name(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

// All learnable state of a forecaster plus the fixed per-item scaling.
//
// Both kinds consume lagged values x_{t-l}, l in `lags`, of the mean-scaled
// series. Tensor names:
//   linear-VAR:   coef (dim*L x dim), intercept (1 x dim), noise (1 x dim,
//                 pre-softplus standard deviation)
//   recurrent:    w_in (dim*L x 3H), b_in (1 x 3H), w_rec_zr (H x 2H),
//                 w_rec_h (H x H), w_mu (H x dim), w_skip (dim*L x dim),
//                 b_mu (1 x dim), w_diag (H x dim), b_diag (1 x dim),
//                 w_factor (H x dim*rank), b_factor (1 x dim*rank)
struct ForecasterParams {
  ModelKind kind = ModelKind::kLinearVar;
  std::size_t dim = 0;
  std::vector<std::size_t> lags{1};
  std::size_t hidden = 0;
  std::size_t rank = 0;
  std::vector<double> scale;
  std::map<std::string, Tensor> tensors;

  std::size_t max_lag() const;
  std::size_t feature_dim() const { return dim * lags.size(); }
  // Rank of the low-rank covariance term; zero for linear-VAR.
  std::size_t factor_rank() const { return kind == ModelKind::kLinearVar ? 0 : rank; }

  const Tensor& tensor(const std::string& name) const;
  Tensor& tensor(const std::string& name);

  // Throws std::invalid_argument on inconsistent shapes or settings.
  void validate() const;

  friend bool operator==(const ForecasterParams&, const ForecasterParams&) = default;
};

// n sampled future paths, laid out paths x dim x horizon.
struct PredictiveSamples {
  Tensor paths;
  std::uint64_t seed = 0;

  std::size_t count() const { return paths.shape().at(0); }
  std::size_t dim() const { return paths.shape().at(1); }
  std::size_t horizon() const { return paths.shape().at(2); }
  double at(std::size_t path, std::size_t item, std::size_t step) const {
    return paths[(path * dim() + item) * horizon() + step];
  }
  // Monte-Carlo mean over paths, dim x horizon.
  Tensor mean() const;
};

}  // namespace tsadv::models
