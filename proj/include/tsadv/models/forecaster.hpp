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

// Differentiable forecaster evaluation. The graph-level functions let attacks
// and defenses push gradients through the forecaster into its input (for
// perturbations) or its parameters (for training).
//
// Histories are passed time-major: a batch of B histories of length T is a
// (B*T) x dim Var whose row b*T + t holds x_{*,t} of history b, in raw units.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tsadv/common/rng.hpp"
#include "tsadv/diffkit/graph.hpp"
#include "tsadv/models/types.hpp"

namespace tsadv::models {

using diffkit::Graph;
using diffkit::Var;

// Stream ids used with derive_seed().
inline constexpr std::uint64_t kPathNoiseStream = 0x70617468;    // "path"
inline constexpr std::uint64_t kInputJitterStream = 0x6a697474;  // "jitt"

struct BoundParams {
  const ForecasterParams* params = nullptr;
  std::map<std::string, Var> vars;

  Var operator[](const std::string& name) const { return vars.at(name); }
};

// Adds every parameter tensor to `g`, as differentiable leaves when
// `trainable`, as constants otherwise.
BoundParams bind(Graph& g, const ForecasterParams& params, bool trainable);

// Standard normal draws consumed by one rollout: per step, `diag` is rows x dim
// and `factor` is rows x (dim*rank) with each row's rank-vector tiled dim
// times, so V eps can be formed elementwise.
struct RolloutNoise {
  std::vector<Tensor> diag;
  std::vector<Tensor> factor;
};

RolloutNoise draw_noise(Rng& rng, std::size_t rows, std::size_t dim, std::size_t rank,
                        std::size_t horizon);
RolloutNoise zero_noise(std::size_t rows, std::size_t dim, std::size_t rank, std::size_t horizon);

struct RolloutSpec {
  std::size_t batch = 1;              // number of histories B
  std::size_t length = 0;             // history length T
  std::size_t paths_per_history = 1;  // n
  std::size_t horizon = 0;            // tau
};

// Free-running sampled rollout. Returns one (B*n) x dim Var per future step,
// raw units; row b*n + p is path p of history b.
std::vector<Var> rollout(const BoundParams& p, Var history, const RolloutSpec& spec,
                         const RolloutNoise& noise);

// Teacher-forced log-likelihood of the last `horizon` steps of each sequence
// in `series` ((B*length) x dim, raw units) given the steps before them.
// Includes the Jacobian of the scaling, so it is a density over raw values.
Var teacher_forced_loglik(const BoundParams& p, Var series, std::size_t batch,
                          std::size_t length, std::size_t horizon);

// Gaussian log-density of y under N(mean, diag(diag) + V V^T), V = dim x r.
double log_likelihood(const Tensor& y, const Tensor& mean, const Tensor& diag,
                      const Tensor& factor);

struct SampleOptions {
  // Test hook: every epsilon is zero, so paths equal the iterated means.
  bool zero_noise = false;
  // When positive, each path is drawn from its own jittered history
  // x(1 + eps), eps ~ N(0, input_jitter^2) elementwise (randomized smoothing).
  double input_jitter = 0.0;
};

// n stacked copies of a time-major history (T x dim); copy p is multiplied
// elementwise by (1 + eps_p), eps ~ N(0, sigma^2), drawn in row-major order.
Var jitter_history(Var history, std::size_t n, double sigma, Rng& rng);

// n paths of length `horizon` conditioned on history x (dim x T, raw units).
PredictiveSamples sample_paths(const ForecasterParams& params, const Tensor& x, std::size_t n,
                               std::size_t horizon, std::uint64_t seed, SampleOptions options = {});

// Exact h-step-ahead predictive mean (dim) of a linear-VAR, by iterating the
// mean recursion. Throws std::invalid_argument for other model kinds.
Tensor predictive_mean_closed_form(const ForecasterParams& params, const Tensor& x,
                                   std::size_t h);

// Per-item scaling: mean absolute value of each row over the given histories,
// falling back to 1 for all-zero rows.
std::vector<double> mean_scaling(std::span<const Window> windows);

// Converts a dim x T history to the (T x dim) time-major layout.
Tensor time_major(const Tensor& x);

}  // namespace tsadv::models
