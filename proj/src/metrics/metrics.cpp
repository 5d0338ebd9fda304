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

#include "tsadv/metrics/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>
#include <string>

#include "tsadv/kernels/kernels.hpp"

namespace tsadv::metrics {

using nlohmann::json;

namespace {

void check_grid(const Tensor& truth, std::size_t dim, std::size_t horizon) {
  if (truth.rank() != 2 || truth.rows() != dim || truth.cols() != horizon) {
    throw std::invalid_argument("truth must be dim x horizon matching the forecast");
  }
}

std::vector<std::size_t> range_or(const std::vector<std::size_t>& chosen, std::size_t n,
                                  const char* what) {
  if (chosen.empty()) {
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    return all;
  }
  for (std::size_t v : chosen) {
    if (v >= n) throw std::invalid_argument(std::string("scope ") + what + " index out of range");
  }
  return chosen;
}

std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

json summary_json(const Summary& s) { return json{{"mean", s.mean}, {"std", s.std}}; }
Summary summary_from(const json& j) { return {j.at("mean").get<double>(), j.at("std").get<double>()}; }

}  // namespace

const std::vector<double>& default_alpha_grid() {
  static const std::vector<double> grid{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  return grid;
}

std::vector<std::size_t> Scope::item_list(std::size_t dim) const {
  return range_or(items, dim, "item");
}
std::vector<std::size_t> Scope::step_list(std::size_t horizon) const {
  return range_or(steps, horizon, "step");
}

double quantile_of(std::vector<double> values, double alpha) {
  const std::size_t n = values.size();
  if (n < 2) throw std::invalid_argument("quantiles need at least two samples");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  std::sort(values.begin(), values.end());
  const double h = std::clamp(static_cast<double>(n) * alpha + 0.5, 1.0, static_cast<double>(n));
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const double frac = h - static_cast<double>(lo);
  if (lo >= n) return values[n - 1];
  return values[lo - 1] + frac * (values[lo] - values[lo - 1]);
}

QuantileForecast empirical_quantiles(const PredictiveSamples& samples,
                                     std::span<const double> alphas) {
  if (alphas.empty()) throw std::invalid_argument("empirical_quantiles: empty alpha grid");
  const std::size_t n = samples.count(), d = samples.dim(), h = samples.horizon();
  if (n < 2) throw std::invalid_argument("empirical_quantiles: need at least two paths");
  for (double a : alphas) {
    if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  }
  QuantileForecast qf;
  qf.alphas.assign(alphas.begin(), alphas.end());
  qf.sample_count = n;
  qf.q = Tensor(diffkit::Shape{alphas.size(), d, h});
  std::vector<double> col(n);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t t = 0; t < h; ++t) {
      for (std::size_t p = 0; p < n; ++p) col[p] = samples.at(p, i, t);
      std::sort(col.begin(), col.end());
      for (std::size_t a = 0; a < alphas.size(); ++a) {
        qf.q[(a * d + i) * h + t] = quantile_of(col, alphas[a]);
      }
    }
  }
  return qf;
}

double wql(const Tensor& truth, const QuantileForecast& qf, std::size_t alpha_index,
           const Scope& scope) {
  check_grid(truth, qf.dim(), qf.horizon());
  if (alpha_index >= qf.alphas.size()) throw std::out_of_range("wql: alpha index out of range");
  std::vector<double> x, q;
  double denom = 0.0;
  for (std::size_t i : scope.item_list(qf.dim())) {
    for (std::size_t t : scope.step_list(qf.horizon())) {
      x.push_back(truth.at(i, t));
      q.push_back(qf.at(alpha_index, i, t));
      denom += std::abs(truth.at(i, t));
    }
  }
  if (denom == 0.0) throw std::invalid_argument("wql: truth is zero over the scope");
  const double loss =
      kernels::active().pinball_sum(x.data(), q.data(), x.size(), qf.alphas[alpha_index]);
  return 2.0 * loss / denom;
}

double avg_wql(const Tensor& truth, const QuantileForecast& qf, const Scope& scope) {
  double s = 0.0;
  for (std::size_t a = 0; a < qf.alphas.size(); ++a) s += wql(truth, qf, a, scope);
  return s / static_cast<double>(qf.alphas.size());
}

WapeWse wape_wse(const Tensor& truth, const PredictiveSamples& samples, const Scope& scope) {
  check_grid(truth, samples.dim(), samples.horizon());
  const Tensor mean = samples.mean();
  WapeWse out;
  std::size_t count = 0;
  for (std::size_t i : scope.item_list(samples.dim())) {
    for (std::size_t t : scope.step_list(samples.horizon())) {
      const double x = truth.at(i, t);
      if (x == 0.0) {
        throw std::invalid_argument("wape_wse: zero truth at item " + std::to_string(i) +
                                    ", step " + std::to_string(t));
      }
      const double dev = mean.at(i, t) / x - 1.0;
      out.wape += std::abs(dev);
      out.wse += dev * dev;
      ++count;
    }
  }
  out.wape /= static_cast<double>(count);
  out.wse /= static_cast<double>(count);
  return out;
}

WindowMetrics evaluate_window(const Tensor& truth, const PredictiveSamples& samples,
                              const Scope& scope, std::span<const double> alphas) {
  const QuantileForecast qf = empirical_quantiles(samples, alphas);
  WindowMetrics m;
  for (std::size_t a = 0; a < alphas.size(); ++a) m.wql.push_back(wql(truth, qf, a, scope));
  double s = 0.0;
  for (double v : m.wql) s += v;
  m.avg_wql = s / static_cast<double>(m.wql.size());
  const WapeWse ww = wape_wse(truth, samples, scope);
  m.wape = ww.wape;
  m.wse = ww.wse;
  return m;
}

Summary summarize(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("summarize: no values");
  Summary s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

MetricsReport aggregate(std::span<const WindowMetrics> per_window, std::string scope_name,
                        std::span<const double> alphas) {
  if (per_window.empty()) throw std::invalid_argument("aggregate: no windows");
  MetricsReport r;
  r.scope_name = std::move(scope_name);
  r.windows = per_window.size();
  r.alphas.assign(alphas.begin(), alphas.end());
  auto collect = [&](auto getter) {
    std::vector<double> v;
    for (const WindowMetrics& w : per_window) v.push_back(getter(w));
    return summarize(v);
  };
  r.avg_wql = collect([](const WindowMetrics& w) { return w.avg_wql; });
  for (std::size_t a = 0; a < alphas.size(); ++a) {
    r.wql.push_back(collect([a](const WindowMetrics& w) { return w.wql.at(a); }));
  }
  r.wape = collect([](const WindowMetrics& w) { return w.wape; });
  r.wse = collect([](const WindowMetrics& w) { return w.wse; });
  return r;
}

json to_json(const MetricsReport& r) {
  json per = json::array();
  for (std::size_t a = 0; a < r.wql.size(); ++a) {
    per.push_back(json{{"alpha", r.alphas.at(a)}, {"mean", r.wql[a].mean}, {"std", r.wql[a].std}});
  }
  return json{{"scope", r.scope_name},          {"windows", r.windows},
              {"avg_wql", summary_json(r.avg_wql)}, {"wql", per},
              {"wape", summary_json(r.wape)},   {"wse", summary_json(r.wse)}};
}

MetricsReport metrics_report_from_json(const json& doc) {
  try {
    MetricsReport r;
    r.scope_name = doc.at("scope").get<std::string>();
    r.windows = doc.at("windows").get<std::size_t>();
    r.avg_wql = summary_from(doc.at("avg_wql"));
    for (const json& e : doc.at("wql")) {
      r.alphas.push_back(e.at("alpha").get<double>());
      r.wql.push_back(summary_from(e));
    }
    r.wape = summary_from(doc.at("wape"));
    r.wse = summary_from(doc.at("wse"));
    return r;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed metrics report: ") + e.what());
  }
}

std::string csv_header(const MetricsReport& r) {
  std::string h = "scope,windows,avg_wql_mean,avg_wql_std";
  for (double a : r.alphas) {
    h += ",wql_" + fmt_double(a) + "_mean,wql_" + fmt_double(a) + "_std";
  }
  return h + ",wape_mean,wape_std,wse_mean,wse_std";
}

std::string csv_row(const MetricsReport& r) {
  std::string s = r.scope_name + "," + std::to_string(r.windows);
  auto add = [&](const Summary& v) { s += "," + fmt_double(v.mean) + "," + fmt_double(v.std); };
  add(r.avg_wql);
  for (const Summary& v : r.wql) add(v);
  add(r.wape);
  add(r.wse);
  return s;
}

}  // namespace tsadv::metrics
