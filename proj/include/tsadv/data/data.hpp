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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tsadv/models/types.hpp"

namespace tsadv::data {

using diffkit::Shape;
using diffkit::Tensor;
using models::Window;

struct Dataset {
  Tensor values;  // dim x length
  std::vector<std::string> item_ids;
  std::vector<std::string> timestamps;  // one per column, may be empty
  std::string frequency = "H";
  // First column of the held-out backtest horizon; equals length() when no
  // split has been made.
  std::size_t split_index = 0;

  std::size_t dim() const { return values.rows(); }
  std::size_t length() const { return values.cols(); }
  // Throws std::invalid_argument on NaN/Inf, mismatched ids or timestamps.
  void validate() const;
};

// Wide CSV: header `timestamp,<item>,<item>,...`, one row per time step.
// Throws std::invalid_argument naming the row and column of a bad cell, and
// when there are fewer than `min_rows` data rows.
Dataset load_csv(const std::filesystem::path& path, std::size_t min_rows = 1);
void save_csv(const Dataset& ds, const std::filesystem::path& path);

enum class GeneratorKind { kVar1, kVarP, kSeasonalVar };

struct SyntheticSpec {
  GeneratorKind kind = GeneratorKind::kVar1;
  std::vector<std::size_t> lags{1};
  // One dim x dim matrix per lag; entry (j, i) is the effect of x_{i,t-l} on x_{j,t}.
  std::vector<Tensor> coefficients;
  std::vector<double> intercept;    // empty means zero
  std::vector<double> noise_scale;  // per item
  std::size_t length = 0;
  std::size_t burn_in = 0;
  // Value of every pre-sample lag; empty means the process mean.
  std::vector<double> initial;
  std::uint64_t seed = 0;

  std::size_t dim() const { return noise_scale.size(); }
  // Throws std::invalid_argument on inconsistent shapes.
  void validate() const;
};

// Largest |eigenvalue| of the companion matrix.
double spectral_radius(const SyntheticSpec& spec);
// Process mean (I - sum A_l)^{-1} c.
std::vector<double> process_mean(const SyntheticSpec& spec);

// Seeded rollout x_t = c + sum_l A_l x_{t-l} + diag(noise) eps_t. Column 0 is
// the first retained step after burn-in. Throws std::invalid_argument when
// the spectral radius is not below 1.
Dataset generate(const SyntheticSpec& spec);

// Seasonal coupled VAR used by the acceptance benchmark: dim 10, lags {1, 24},
// levels around 10. Item 1 loads on the other items' values 24 and 1 steps
// back; the other items are seasonal AR processes with weak cross terms.
SyntheticSpec electricity_like_spec(std::size_t length, std::uint64_t seed);
inline constexpr std::size_t kBenchmarkTarget = 1;

// All windows of context T and horizon tau, aligned so the last one ends at
// the final column; ordered by start. Throws std::invalid_argument when
// T + tau exceeds the length.
std::vector<Window> make_windows(const Dataset& ds, std::size_t T, std::size_t tau,
                                 std::size_t stride);

struct Split {
  std::vector<Window> train;
  std::vector<Window> test;
  std::size_t split_index = 0;
};

// The last `n_test` windows with stride tau form the backtest; training
// windows (stride `train_stride`, default tau) end before the first backtest
// future step.
Split split_windows(const Dataset& ds, std::size_t T, std::size_t tau, std::size_t n_test,
                    std::size_t train_stride = 0);

std::string iso_timestamp(std::int64_t seconds_since_epoch);

}  // namespace tsadv::data
