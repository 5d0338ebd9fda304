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
#include <span>
#include <vector>

#include "tsadv/diffkit/graph.hpp"
#include "tsadv/models/forecaster.hpp"
#include "tsadv/models/types.hpp"

namespace tsadv::models {

struct FitConfig {
  ModelKind kind = ModelKind::kLinearVar;
  std::vector<std::size_t> lags{1};
  std::size_t hidden = 32;
  std::size_t rank = 5;
  std::size_t epochs = 30;
  std::size_t batch_size = 16;
  double learning_rate = 3e-3;
  double clip_norm = 10.0;
  // Ridge added to the normal equations of the closed-form VAR fit.
  double ridge = 1e-8;
  // Epochs without improving the best NLL before stopping; 0 disables.
  std::size_t patience = 0;
  std::uint64_t seed = 0;
};

struct FitResult {
  ForecasterParams params;
  // Mean per-value NLL on the training set. Entry 0 is the random
  // initialization and entry 1 the closed-form VAR solution (the final answer
  // for linear-VAR, the warm start for recurrent models); then one per epoch.
  std::vector<double> nll_history;
  // Epoch whose parameters were kept; 0 means the warm start.
  std::size_t best_epoch = 0;
};

// Random initialization of a forecaster with the given layout.
ForecasterParams init_params(ModelKind kind, std::size_t dim, std::vector<std::size_t> lags,
                             std::size_t hidden, std::size_t rank, std::vector<double> scale,
                             std::uint64_t seed);

// Maximum-likelihood fit. Linear-VAR models are solved in closed form;
// recurrent models start from the VAR solution (skip path) and are trained
// with Adam, keeping the best epoch. Throws std::invalid_argument on an empty
// or inconsistent dataset and DivergenceError when the NLL becomes non-finite.
FitResult fit(std::span<const Window> windows, const FitConfig& config);

// History followed by future of each selected window, time-major:
// ((B*(T+tau)) x dim).
Tensor stack_sequences(std::span<const Window> windows, std::span<const std::size_t> indices);

// Mean negative log-likelihood per value of the future part of `series`
// (as built by stack_sequences), teacher forced.
Var sequence_nll(const BoundParams& p, Var series, std::size_t batch, std::size_t length,
                 std::size_t horizon);

// Mean per-value NLL of `params` over all windows (no gradients).
double dataset_nll(const ForecasterParams& params, std::span<const Window> windows);

// Throws std::invalid_argument unless windows is nonempty, every window has
// the same dim, context and horizon, and all values are finite.
void check_dataset(std::span<const Window> windows);

// Raw-unit VAR coefficient matrix for lag position `lag_index` of a linear-VAR:
// entry (j, i) is the effect of item i at that lag on item j.
Tensor var_matrix(const ForecasterParams& params, std::size_t lag_index);

}  // namespace tsadv::models
