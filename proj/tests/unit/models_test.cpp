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

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <numbers>

#include "../support/var_sim.hpp"
#include "tsadv/common/errors.hpp"
#include "tsadv/diffkit/ops.hpp"
#include "tsadv/models/checkpoint.hpp"
#include "tsadv/models/fit.hpp"
#include "tsadv/models/forecaster.hpp"

namespace tsadv::models {
namespace {

using testing::cut_windows;
using testing::linear_var1;
using testing::simulate_var1;

Tensor column_history(std::vector<std::vector<double>> cols) {
  // cols[t] is x_{*,t}
  const std::size_t d = cols.front().size();
  Tensor x(Shape{d, cols.size()});
  for (std::size_t t = 0; t < cols.size(); ++t) {
    for (std::size_t i = 0; i < d; ++i) x.at(i, t) = cols[t][i];
  }
  return x;
}

// Recurrent params whose emission does not depend on the state: diag and V
// come from the biases only.
ForecasterParams state_free_recurrent(std::size_t d, std::size_t r, std::uint64_t seed) {
  ForecasterParams p = init_params(ModelKind::kRecurrentLowRank, d, {1}, 6, r, {}, seed);
  for (const char* name : {"w_diag", "w_factor", "w_mu", "w_skip"}) {
    for (double& v : p.tensor(name).data()) v = 0.0;
  }
  Rng rng(seed + 1);
  for (double& v : p.tensor("b_diag").data()) v = -1.0 + 0.3 * rng.normal();
  for (double& v : p.tensor("b_factor").data()) v = 0.4 * rng.normal();
  for (double& v : p.tensor("b_mu").data()) v = rng.normal();
  return p;
}

TEST(LogLikelihood, StandardNormalAtMean) {
  const Tensor zero = Tensor::vector({0, 0});
  const double ll = log_likelihood(zero, zero, Tensor::vector({1, 1}), Tensor(Shape{2, 0}));
  EXPECT_NEAR(ll, -std::log(2 * std::numbers::pi), 1e-12);
  EXPECT_NEAR(ll, -1.837877, 1e-6);
}

TEST(LogLikelihood, MatchesDenseCholesky) {
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t d = 5, r = 2;
    Tensor y = rng.normal_tensor({d}), mean = rng.normal_tensor({d});
    Tensor diag(Shape{d}), v = rng.normal_tensor({d, r});
    for (std::size_t i = 0; i < d; ++i) diag[i] = 0.2 + rng.uniform();
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(d, d);
    Eigen::VectorXd e(d);
    for (std::size_t i = 0; i < d; ++i) {
      sigma(i, i) = diag[i];
      e(i) = y[i] - mean[i];
      for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t k = 0; k < r; ++k) sigma(i, j) += v.at(i, k) * v.at(j, k);
      }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    const Eigen::MatrixXd lmat = llt.matrixL();
    const double logdet = 2.0 * lmat.diagonal().array().log().sum();
    const double quad = e.dot(llt.solve(e));
    const double dense = -0.5 * (d * std::log(2 * std::numbers::pi) + logdet + quad);
    EXPECT_NEAR(log_likelihood(y, mean, diag, v), dense, 1e-10);
  }
}

TEST(LogLikelihood, RejectsNonPositiveDiag) {
  const Tensor zero = Tensor::vector({0, 0});
  EXPECT_THROW(log_likelihood(zero, zero, Tensor::vector({1, 0}), Tensor(Shape{2, 0})),
               std::invalid_argument);
}

TEST(ClosedForm, HalfIdentityTwoSteps) {
  const auto p = linear_var1({{0.5, 0}, {0, 0.5}}, {1, 1});
  const Tensor m = predictive_mean_closed_form(p, column_history({{1, 1}}), 2);
  EXPECT_DOUBLE_EQ(m[0], 0.25);
  EXPECT_DOUBLE_EQ(m[1], 0.25);
}

TEST(ClosedForm, IdentityKeepsLastState) {
  const auto p = linear_var1({{1, 0}, {0, 1}}, {1, 1});
  const Tensor x = column_history({{4, 4}, {3, -2}});
  for (std::size_t h = 1; h <= 5; ++h) {
    const Tensor m = predictive_mean_closed_form(p, x, h);
    EXPECT_DOUBLE_EQ(m[0], 3.0);
    EXPECT_DOUBLE_EQ(m[1], -2.0);
  }
}

TEST(ClosedForm, RejectsRecurrent) {
  const auto p = init_params(ModelKind::kRecurrentLowRank, 2, {1}, 4, 1, {}, 1);
  EXPECT_THROW(predictive_mean_closed_form(p, column_history({{1, 1}}), 1),
               std::invalid_argument);
}

TEST(SamplePaths, ZeroNoiseFollowsIteratedMeans) {
  const auto p = linear_var1({{0.6, 0.3}, {-0.2, 0.7}}, {0.5, 2.0}, {0.1, -0.4});
  const Tensor x = column_history({{1, 2}, {3, -1}});
  const auto s = sample_paths(p, x, 3, 4, 9, SampleOptions{true});
  for (std::size_t h = 1; h <= 4; ++h) {
    const Tensor m = predictive_mean_closed_form(p, x, h);
    for (std::size_t path = 0; path < 3; ++path) {
      for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(s.at(path, i, h - 1), m[i], 1e-12);
    }
  }
}

TEST(SamplePaths, ZeroNoiseRecurrentPathsCoincide) {
  const auto p = init_params(ModelKind::kRecurrentLowRank, 3, {1, 2}, 5, 2, {}, 4);
  const Tensor x = Rng(1).normal_tensor({3, 6});
  const auto s = sample_paths(p, x, 4, 3, 2, SampleOptions{true});
  for (std::size_t k = 1; k < 4; ++k) {
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t h = 0; h < 3; ++h) EXPECT_EQ(s.at(k, i, h), s.at(0, i, h));
    }
  }
}

TEST(SamplePaths, SameSeedIsBitIdentical) {
  const auto p = init_params(ModelKind::kRecurrentLowRank, 3, {1}, 5, 2, {1, 2, 3}, 4);
  const Tensor x = Rng(2).normal_tensor({3, 5});
  const auto a = sample_paths(p, x, 7, 4, 123);
  const auto b = sample_paths(p, x, 7, 4, 123);
  const auto c = sample_paths(p, x, 7, 4, 124);
  EXPECT_EQ(a.paths, b.paths);
  EXPECT_NE(a.paths, c.paths);
  EXPECT_TRUE(a.paths.all_finite());
}

TEST(SamplePaths, MonteCarloMeanMatchesAsquaredX) {
  const std::vector<std::vector<double>> a{{0.5, 0.2}, {0.0, 0.5}};
  const auto p = linear_var1(a, {1.0, 0.7});
  const Tensor x = column_history({{2.0, -1.0}});
  const std::size_t n = 100000;
  const auto s = sample_paths(p, x, n, 2, 77);
  // A^2 x and the two-step variance (I + A A^T) diag(sd^2) style, per item.
  const double sd0 = 1.0, sd1 = 0.7;
  const double m0 = 0.25 * 2.0 + 0.2 * (-1.0) , m1 = 0.25 * -1.0;
  const double var0 = sd0 * sd0 + 0.25 * sd0 * sd0 + 0.04 * sd1 * sd1;
  const double var1 = sd1 * sd1 + 0.25 * sd1 * sd1;
  const Tensor mean = s.mean();
  EXPECT_NEAR(mean.at(0, 1), m0, 3 * std::sqrt(var0 / n));
  EXPECT_NEAR(mean.at(1, 1), m1, 3 * std::sqrt(var1 / n));
  EXPECT_DOUBLE_EQ(predictive_mean_closed_form(p, x, 2)[0], m0);
}

TEST(SamplePaths, RandomVarThreeStepsAgreesWithClosedForm) {
  Rng rng(5);
  const std::size_t d = 3;
  std::vector<std::vector<double>> a(d, std::vector<double>(d));
  for (auto& row : a) {
    for (double& v : row) v = 0.3 * rng.normal();
  }
  const auto p = linear_var1(a, {0.5, 0.5, 0.5}, {0.2, 0.0, -0.1});
  const Tensor x = column_history({{1, 2, 3}});
  const std::size_t n = 40000;
  const auto s = sample_paths(p, x, n, 3, 8);
  const Tensor exact = predictive_mean_closed_form(p, x, 3);
  const Tensor mean = s.mean();
  for (std::size_t i = 0; i < d; ++i) {
    double var = 0.0;
    for (std::size_t k = 0; k < n; ++k) var += std::pow(s.at(k, i, 2) - mean.at(i, 2), 2);
    var /= static_cast<double>(n - 1);
    EXPECT_NEAR(mean.at(i, 2), exact[i], 4 * std::sqrt(var / n));
  }
}

TEST(SamplePaths, PathwiseGradientMatchesJacobian) {
  const std::vector<std::vector<double>> a{{0.5, 0.4}, {0.1, 0.5}};
  ForecasterParams p = linear_var1(a, {1.0, 1.0});
  p.scale = {2.0, 0.5};
  p.tensor("coef").at(1, 0) = 0.4 * 0.5 / 2.0;  // same raw dynamics under scaling
  p.tensor("coef").at(0, 1) = 0.1 * 2.0 / 0.5;
  const std::size_t tau = 3, n = 10000;
  const Tensor x = column_history({{1.0, 2.0}, {3.0, -1.0}});

  diffkit::Graph g;
  const BoundParams bp = bind(g, p, false);
  Var hist = g.parameter(time_major(x));
  Rng rng(3);
  const auto steps = rollout(bp, hist, RolloutSpec{1, 2, n, tau},
                             draw_noise(rng, n, 2, 0, tau));
  Var root = diffkit::mean(diffkit::slice(steps.back(), 1, 0, 1));
  g.forward();
  const Tensor grad = g.backward(root)[hist];

  // d E[y_{0,tau}] / d x_T = row 0 of A^tau (raw units); earlier steps do not
  // enter a VAR(1).
  Eigen::Matrix2d A;
  A << a[0][0], a[0][1], a[1][0], a[1][1];
  Eigen::Matrix2d Ap = A * A * A;
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_NEAR(grad.at(1, i), Ap(0, i), 1e-3 * std::abs(Ap(0, i)));
    EXPECT_EQ(grad.at(0, i), 0.0);
  }
}

TEST(SamplePaths, CovarianceConvergesToDiagPlusLowRank) {
  const std::size_t d = 4, r = 2, n = 100000;
  const auto p = state_free_recurrent(d, r, 21);
  const Tensor x = Rng(4).normal_tensor({d, 3});
  const auto s = sample_paths(p, x, n, 1, 99);
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    expected(i, i) = std::log1p(std::exp(p.tensor("b_diag")[i])) + 1e-6;
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t k = 0; k < r; ++k) {
        expected(i, j) += p.tensor("b_factor")[i * r + k] * p.tensor("b_factor")[j * r + k];
      }
    }
  }
  const Tensor m = s.mean();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        cov(i, j) += (s.at(k, i, 0) - m.at(i, 0)) * (s.at(k, j, 0) - m.at(j, 0));
      }
    }
  }
  cov /= static_cast<double>(n - 1);
  EXPECT_LE((cov - expected).norm(), 5.0 / std::sqrt(static_cast<double>(n)));
}

TEST(TeacherForcing, LinearMatchesPerStepDensity) {
  const auto p = linear_var1({{0.6, 0.1}, {0.2, 0.3}}, {0.8, 1.5}, {0.5, -0.5});
  const Tensor series = Rng(6).normal_tensor({5, 2});  // time-major
  diffkit::Graph g;
  const BoundParams bp = bind(g, p, false);
  Var ll = teacher_forced_loglik(bp, g.constant(series), 1, 5, 3);
  double expected = 0.0;
  for (std::size_t t = 2; t < 5; ++t) {
    Tensor y(Shape{2}), mean(Shape{2});
    for (std::size_t j = 0; j < 2; ++j) {
      y[j] = series.at(t, j);
      mean[j] = j == 0 ? 0.5 : -0.5;
      for (std::size_t i = 0; i < 2; ++i) {
        mean[j] += (j == 0 ? std::vector{0.6, 0.1} : std::vector{0.2, 0.3})[i] * series.at(t - 1, i);
      }
    }
    expected += log_likelihood(y, mean, Tensor::vector({0.64, 2.25}), Tensor(Shape{2, 0}));
  }
  EXPECT_NEAR(g.evaluate(ll).item(), expected, 1e-9);
}

TEST(TeacherForcing, RecurrentGradientMatchesFiniteDifferences) {
  ForecasterParams p = init_params(ModelKind::kRecurrentLowRank, 3, {1, 2}, 4, 2, {1.5, 0.5, 2.0}, 8);
  const Tensor series = Rng(9).normal_tensor({2 * 7, 3});
  auto eval = [&](const ForecasterParams& q) {
    diffkit::Graph g;
    const BoundParams bp = bind(g, q, false);
    return g.evaluate(teacher_forced_loglik(bp, g.constant(series), 2, 7, 3)).item();
  };
  diffkit::Graph g;
  const BoundParams bp = bind(g, p, true);
  Var ll = teacher_forced_loglik(bp, g.constant(series), 2, 7, 3);
  g.forward();
  const auto grads = g.backward(ll);
  for (const auto& [name, t] : p.tensors) {
    for (std::size_t k = 0; k < t.size(); k += 3) {
      ForecasterParams plus = p, minus = p;
      plus.tensor(name)[k] += 1e-5;
      minus.tensor(name)[k] -= 1e-5;
      const double fd = (eval(plus) - eval(minus)) / 2e-5;
      EXPECT_NEAR(grads[bp[name]][k], fd, 1e-5 * std::max(1.0, std::abs(fd))) << name << "[" << k << "]";
    }
  }
}

TEST(Fit, RecoversKnownVar1) {
  const std::vector<std::vector<double>> a{{0.5, 0.2}, {0.0, 0.5}};
  const Tensor series = simulate_var1(a, 1.0, 5000, 31, 200, 3.0);
  const auto windows = cut_windows(series, 20, 5);
  FitConfig cfg;
  const FitResult res = fit(windows, cfg);
  const Tensor est = var_matrix(res.params, 0);
  for (std::size_t j = 0; j < 2; ++j) {
    for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(est.at(j, i), a[j][i], 0.1);
  }
  EXPECT_LT(res.nll_history.back(), res.nll_history.front());
}

TEST(Fit, RecurrentDecreasesNll) {
  const Tensor series = simulate_var1({{0.7, 0.2}, {-0.3, 0.4}}, 0.5, 1200, 3, 100, 5.0);
  const auto windows = cut_windows(series, 12, 4);
  FitConfig cfg;
  cfg.kind = ModelKind::kRecurrentLowRank;
  cfg.hidden = 8;
  cfg.rank = 1;
  cfg.epochs = 4;
  const FitResult res = fit(windows, cfg);
  ASSERT_EQ(res.nll_history.size(), 2u + cfg.epochs);
  EXPECT_LT(dataset_nll(res.params, windows), res.nll_history.front());
  EXPECT_LE(dataset_nll(res.params, windows), res.nll_history[1]);
  // Best-epoch retention: the kept model is never worse than any recorded epoch.
  for (std::size_t e = 1; e < res.nll_history.size(); ++e) {
    EXPECT_LE(dataset_nll(res.params, windows), res.nll_history[e] + 1e-12);
  }
}

TEST(Fit, ConstantSeriesRecurrentPredictsConstant) {
  Tensor series(Shape{1, 400}, 7.5);
  const auto windows = cut_windows(series, 10, 3);
  FitConfig cfg;
  cfg.kind = ModelKind::kRecurrentLowRank;
  cfg.hidden = 6;
  cfg.rank = 1;
  cfg.epochs = 3;
  const FitResult res = fit(windows, cfg);
  const auto s = sample_paths(res.params, windows[0].x, 200, 3, 1);
  const Tensor m = s.mean();
  for (std::size_t h = 0; h < 3; ++h) EXPECT_NEAR(m.at(0, h), 7.5, 0.05 * 7.5);
}

TEST(Fit, RejectsEmptyOrMixedDatasets) {
  EXPECT_THROW(fit(std::vector<Window>{}, FitConfig{}), std::invalid_argument);
  auto windows = cut_windows(simulate_var1({{0.5}}, 1.0, 100, 1), 5, 2);
  windows[1].x = Tensor(Shape{2, 5});
  EXPECT_THROW(fit(windows, FitConfig{}), std::invalid_argument);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  const auto p = init_params(ModelKind::kRecurrentLowRank, 3, {1, 24}, 5, 2, {0.1, 1e-7, 3.3}, 12);
  Checkpoint ckpt{p, nlohmann::json{{"kind", "smoothing"}, {"sigma", 0.1}}};
  const auto path = std::filesystem::temp_directory_path() / "tsadv_models_test_ckpt.json";
  save_checkpoint(ckpt, path);
  const Checkpoint back = load_checkpoint(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back.params, p);
  ASSERT_TRUE(back.defense.has_value());
  EXPECT_EQ((*back.defense)["sigma"].get<double>(), 0.1);

  const auto lin = linear_var1({{0.1 + 1e-17, 1.0 / 3.0}, {2.0 / 7.0, -0.0}}, {1.0, 0.2});
  EXPECT_EQ(checkpoint_from_json(to_json(Checkpoint{lin, std::nullopt})).params, lin);
}

TEST(Checkpoint, MalformedDocumentsAreRejected) {
  const auto p = init_params(ModelKind::kLinearVar, 2, {1}, 0, 0, {}, 1);
  auto doc = to_json(Checkpoint{p, std::nullopt});
  doc["tensors"]["coef"]["shape"] = {3, 2};
  EXPECT_THROW(checkpoint_from_json(doc), std::invalid_argument);
  doc = to_json(Checkpoint{p, std::nullopt});
  doc.erase("scale");
  EXPECT_THROW(checkpoint_from_json(doc), std::invalid_argument);
}

}  // namespace
}  // namespace tsadv::models
