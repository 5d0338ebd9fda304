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

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tsadv/models/types.hpp"

namespace tsadv::metrics {

using diffkit::Tensor;
using models::PredictiveSamples;

// alpha = 0.1, 0.2, ..., 0.9
const std::vector<double>& default_alpha_grid();

// Cells (item, step) of the forecast grid a metric is computed over. Empty
// lists mean "all items" / "all steps".
struct Scope {
  std::vector<std::size_t> items;
  std::vector<std::size_t> steps;

  static Scope full() { return {}; }
  bool is_full() const { return items.empty() && steps.empty(); }
  std::vector<std::size_t> item_list(std::size_t dim) const;
  std::vector<std::size_t> step_list(std::size_t horizon) const;
};

struct QuantileForecast {
  std::vector<double> alphas;
  Tensor q;  // |alphas| x dim x horizon
  std::size_t sample_count = 0;

  std::size_t dim() const { return q.shape().at(1); }
  std::size_t horizon() const { return q.shape().at(2); }
  double at(std::size_t a, std::size_t item, std::size_t step) const {
    return q[(a * dim() + item) * horizon() + step];
  }
};

// Interpolated order statistic at position n*alpha + 0.5 (1-based), clamped
// to [1, n]. Throws std::invalid_argument for an empty grid, alphas outside
// (0, 1) or fewer than two samples.
QuantileForecast empirical_quantiles(const PredictiveSamples& samples,
                                     std::span<const double> alphas);
double quantile_of(std::vector<double> values, double alpha);

// 2 * sum pinball_alpha(x, q) / sum |x| over the scope. Throws
// std::invalid_argument when sum |x| is zero.
double wql(const Tensor& truth, const QuantileForecast& qf, std::size_t alpha_index,
           const Scope& scope = {});
double avg_wql(const Tensor& truth, const QuantileForecast& qf, const Scope& scope = {});

struct WapeWse {
  double wape = 0.0;
  double wse = 0.0;
};
// Mean over the scope of |m/x - 1| and (m/x - 1)^2, m the path mean. Throws
// std::invalid_argument on a zero truth value in scope.
WapeWse wape_wse(const Tensor& truth, const PredictiveSamples& samples, const Scope& scope = {});

struct WindowMetrics {
  double avg_wql = 0.0;
  std::vector<double> wql;  // per alpha
  double wape = 0.0;
  double wse = 0.0;
};

WindowMetrics evaluate_window(const Tensor& truth, const PredictiveSamples& samples,
                              const Scope& scope = {},
                              std::span<const double> alphas = default_alpha_grid());

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for one value
};
Summary summarize(std::span<const double> values);

struct MetricsReport {
  std::string scope_name;
  std::size_t windows = 0;
  std::vector<double> alphas;
  Summary avg_wql;
  std::vector<Summary> wql;
  Summary wape;
  Summary wse;
};

MetricsReport aggregate(std::span<const WindowMetrics> per_window, std::string scope_name,
                        std::span<const double> alphas = default_alpha_grid());

nlohmann::json to_json(const MetricsReport& report);
MetricsReport metrics_report_from_json(const nlohmann::json& doc);
std::string csv_header(const MetricsReport& report);
std::string csv_row(const MetricsReport& report);

}  // namespace tsadv::metrics
