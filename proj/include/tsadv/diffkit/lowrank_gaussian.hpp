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

// Gaussian log-density with covariance S = diag(D) + V V^T (V is dim x rank),
// evaluated through the capacitance matrix C = I + V^T D^{-1} V:
//   S^{-1}   = D^{-1} - D^{-1} V C^{-1} V^T D^{-1}
//   log|S|   = sum log D + log|C|
// Cost O(dim * rank^2 + rank^3) per evaluation.

#include <cstddef>
#include <span>

namespace tsadv::diffkit::lowrank {

// Throws std::invalid_argument when any diag entry is not strictly positive.
double logpdf(std::span<const double> y, std::span<const double> mean,
              std::span<const double> diag, std::span<const double> factor, std::size_t rank);

// Accumulates upstream * d logpdf / d{y, mean, diag, factor} into the output
// spans. Any output span may be empty to skip it.
void logpdf_grad(std::span<const double> y, std::span<const double> mean,
                 std::span<const double> diag, std::span<const double> factor, std::size_t rank,
                 double upstream, std::span<double> grad_y, std::span<double> grad_mean,
                 std::span<double> grad_diag, std::span<double> grad_factor);

}  // namespace tsadv::diffkit::lowrank
