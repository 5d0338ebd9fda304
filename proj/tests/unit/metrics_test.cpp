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

#include <functional>
#include <numeric>
#include <gtest/gtest.h>

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <random>

#include "tsadv/common/rng.hpp"
#include "tsadv/metrics/metrics.hpp"
#include "tsadv/metrics/stats.hpp"

namespace tsadv::metrics {
namespace {

using diffkit::Shape;

PredictiveSamples samples_from(std::size_t n, std::size_t d, std::size_t h,
                               const std::function<double(std::size_t, std::size_t, std::size_t)>& f) {
  PredictiveSamples s;
  s.paths = Tensor(Shape{n, d, h});
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t t = 0; t < h; ++t) s.paths[(p * d + i) * h + t] = f(p, i, t);
    }
  }
  return s;
}

QuantileForecast single_point(double q, double alpha) {
  QuantileForecast qf;
  qf.alphas = {alpha};
  qf.q = Tensor(Shape{1, 1, 1}, q);
  qf.sample_count = 2;
  return qf;
}

TEST(Quantiles, DefaultGrid) {
  const auto& g = default_alpha_grid();
  ASSERT_EQ(g.size(), 9u);
  for (std::size_t a = 0; a < 9; ++a) EXPECT_DOUBLE_EQ(g[a], 0.1 * static_cast<double>(a + 1));
}

TEST(Quantiles, ConstantSamples) {
  const auto s = samples_from(50, 2, 3, [](auto, auto, auto) { return 4.25; });
  const auto qf = empirical_quantiles(s, default_alpha_grid());
  for (double v : qf.q.data()) EXPECT_EQ(v, 4.25);
}

TEST(Quantiles, MedianOfOneToHundred) {
  const auto s = samples_from(100, 1, 1, [](std::size_t p, auto, auto) { return 100.0 - p; });
  const double alpha[] = {0.5};
  EXPECT_DOUBLE_EQ(empirical_quantiles(s, alpha).at(0, 0, 0), 50.5);
}

TEST(Quantiles, NoCrossingAndOrderInvariance) {
  Rng rng(3);
  const auto s = samples_from(37, 3, 4, [&](auto, auto, auto) { return rng.normal(); });
  PredictiveSamples shuffled = s;
  std::vector<std::size_t> perm(37);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng.engine());
  for (std::size_t p = 0; p < 37; ++p) {
    for (std::size_t k = 0; k < 12; ++k) shuffled.paths[p * 12 + k] = s.paths[perm[p] * 12 + k];
  }
  const auto a = empirical_quantiles(s, default_alpha_grid());
  const auto b = empirical_quantiles(shuffled, default_alpha_grid());
  EXPECT_EQ(a.q, b.q);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t t = 0; t < 4; ++t) {
      for (std::size_t k = 1; k < 9; ++k) EXPECT_LE(a.at(k - 1, i, t), a.at(k, i, t));
    }
  }
  const Tensor truth = Tensor(Shape{3, 4}, 0.7);
  EXPECT_EQ(evaluate_window(truth, s).avg_wql, evaluate_window(truth, shuffled).avg_wql);
}

TEST(Quantiles, Preconditions) {
  const auto s = samples_from(1, 1, 1, [](auto, auto, auto) { return 1.0; });
  EXPECT_THROW(empirical_quantiles(s, default_alpha_grid()), std::invalid_argument);
  const auto s2 = samples_from(3, 1, 1, [](auto, auto, auto) { return 1.0; });
  EXPECT_THROW(empirical_quantiles(s2, std::vector<double>{}), std::invalid_argument);
}

TEST(Wql, WorkedExamples) {
  const Tensor x = Tensor(Shape{1, 1}, 10.0);
  EXPECT_DOUBLE_EQ(wql(x, single_point(8.0, 0.5), 0), 0.2);
  EXPECT_NEAR(wql(x, single_point(12.0, 0.9), 0), 0.04, 1e-15);
  EXPECT_EQ(wql(x, single_point(10.0, 0.3), 0), 0.0);
  EXPECT_THROW(wql(Tensor(Shape{1, 1}), single_point(1.0, 0.5), 0), std::invalid_argument);
}

TEST(Wql, MatchesIndependentPinball) {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t d = 1 + trial % 5, h = 1 + trial % 7;
    const auto s = samples_from(20, d, h, [&](auto, auto, auto) { return 5 + rng.normal(); });
    Tensor truth(Shape{d, h});
    for (double& v : truth.data()) v = 5 + 2 * rng.normal();
    const auto qf = empirical_quantiles(s, default_alpha_grid());
    double avg = 0.0;
    for (std::size_t a = 0; a < 9; ++a) {
      const double alpha = qf.alphas[a];
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t t = 0; t < h; ++t) {
          const double x = truth.at(i, t), q = qf.at(a, i, t);
          num += x >= q ? alpha * (x - q) : (1 - alpha) * (q - x);
          den += std::fabs(x);
        }
      }
      const double expected = 2 * num / den;
      EXPECT_NEAR(wql(truth, qf, a), expected, 1e-12);
      avg += expected / 9;
    }
    EXPECT_NEAR(avg_wql(truth, qf), avg, 1e-12);
  }
}

TEST(Wql, AverageOverGridWithAlphaFreeForecast) {
  // q = 8 for every alpha, x = 10: under-prediction, wQL(alpha) = 2 alpha 2 / 10.
  QuantileForecast qf;
  qf.alphas = default_alpha_grid();
  qf.q = Tensor(Shape{9, 1, 1}, 8.0);
  const Tensor x = Tensor(Shape{1, 1}, 10.0);
  double by_hand = 0.0;
  for (double a : qf.alphas) by_hand += 0.4 * a;
  by_hand /= 9.0;
  EXPECT_NEAR(avg_wql(x, qf), by_hand, 1e-12);
  EXPECT_NEAR(avg_wql(x, qf), 0.2, 1e-12);
}

TEST(Wql, ScopeRestrictsCells) {
  const auto s = samples_from(10, 2, 2, [](auto p, auto i, auto) { return i == 0 ? 1.0 + p : 50.0; });
  Tensor truth(Shape{2, 2}, 3.0);
  Scope target{{0}, {1}};
  const auto qf = empirical_quantiles(s, default_alpha_grid());
  const Tensor one(Shape{1, 1}, 3.0);
  QuantileForecast sub;
  sub.alphas = qf.alphas;
  sub.q = Tensor(Shape{9, 1, 1});
  for (std::size_t a = 0; a < 9; ++a) sub.q[a] = qf.at(a, 0, 1);
  EXPECT_NEAR(avg_wql(truth, qf, target), avg_wql(one, sub), 1e-14);
  EXPECT_THROW(avg_wql(truth, qf, Scope{{5}, {}}), std::invalid_argument);
}

TEST(WapeWse, WorkedExamples) {
  const auto s = samples_from(2, 1, 1, [](auto p, auto, auto) { return p == 0 ? 7.0 : 9.0; });
  const Tensor x(Shape{1, 1}, 10.0);
  const auto r = wape_wse(x, s);
  EXPECT_NEAR(r.wape, 0.2, 1e-15);
  EXPECT_NEAR(r.wse, 0.04, 1e-15);
  EXPECT_GE(r.wse, r.wape * r.wape - 1e-15);
  const auto perfect = wape_wse(Tensor(Shape{1, 1}, 8.0), s);
  EXPECT_EQ(perfect.wape, 0.0);
  EXPECT_EQ(perfect.wse, 0.0);
  EXPECT_THROW(wape_wse(Tensor(Shape{1, 1}), s), std::invalid_argument);
}

TEST(Report, AggregateAndSerialize) {
  std::vector<WindowMetrics> w(3);
  for (std::size_t k = 0; k < 3; ++k) {
    w[k].wql.assign(9, 0.1 * (k + 1));
    w[k].avg_wql = 0.1 * (k + 1);
    w[k].wape = 1.0 / 3.0;
    w[k].wse = k;
  }
  const MetricsReport r = aggregate(w, "target");
  EXPECT_NEAR(r.avg_wql.mean, 0.2, 1e-15);
  EXPECT_NEAR(r.avg_wql.std, 0.1, 1e-15);
  EXPECT_EQ(r.wape.std, 0.0);
  const MetricsReport back = metrics_report_from_json(to_json(r));
  EXPECT_EQ(back.avg_wql.mean, r.avg_wql.mean);
  EXPECT_EQ(back.wape.mean, r.wape.mean);
  EXPECT_EQ(back.wql.size(), 9u);
  const std::string header = csv_header(r), row = csv_row(r);
  EXPECT_EQ(std::count(header.begin(), header.end(), ','), std::count(row.begin(), row.end(), ','));
  EXPECT_EQ(row.rfind("target,3,", 0), 0u);
}

TEST(KolmogorovSmirnov, AcceptsTrueAndRejectsShiftedNormal) {
  Rng rng(5);
  std::vector<double> v(10000);
  for (double& x : v) x = rng.normal();
  boost::math::normal nd;
  auto cdf = [&](double x) { return boost::math::cdf(nd, x); };
  const double d = ks_statistic(v, cdf);
  EXPECT_GT(ks_pvalue(d, v.size()), 0.01);
  for (double& x : v) x += 0.1;
  EXPECT_LT(ks_pvalue(ks_statistic(v, cdf), v.size()), 1e-6);
}

TEST(KolmogorovSmirnov, PvalueReferenceValues) {
  // Q_KS(1.36) ~ 0.049 and Q_KS(1.63) ~ 0.0098 (asymptotic critical values).
  const std::size_t n = 1000000;
  const double rn = std::sqrt(static_cast<double>(n)) + 0.12 + 0.11 / 1000.0;
  EXPECT_NEAR(ks_pvalue(1.358 / rn, n), 0.05, 1e-3);
  EXPECT_NEAR(ks_pvalue(1.628 / rn, n), 0.01, 1e-3);
}

}  // namespace
}  // namespace tsadv::metrics
