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

#include <cmath>
#include <cstring>

#include "../support/gradcheck.hpp"
#include "tsadv/common/errors.hpp"
#include "tsadv/diffkit/graph.hpp"
#include "tsadv/diffkit/lowrank_gaussian.hpp"
#include "tsadv/diffkit/ops.hpp"
#include "tsadv/diffkit/optim.hpp"

namespace tsadv::diffkit {
namespace {

TEST(DiffkitForward, SumOfSquares) {
  Graph g;
  Var x = g.parameter(Tensor::vector({1.0, 2.0}));
  Var root = sum(mul(x, x));
  EXPECT_DOUBLE_EQ(g.evaluate(root).item(), 5.0);
  const auto grads = g.backward(root);
  EXPECT_EQ(grads[x].values(), (std::vector<double>{2.0, 4.0}));
}

TEST(DiffkitForward, IdentityMatmul) {
  Graph g;
  Var eye = g.constant(Tensor::matrix({{1, 0}, {0, 1}}));
  Var v = g.constant(Tensor::matrix({{3}, {-4}}));
  EXPECT_EQ(g.evaluate(matmul(eye, v)), Tensor::matrix({{3}, {-4}}));
}

TEST(DiffkitForward, TanhAtOrigin) {
  Graph g;
  Var x = g.constant(Tensor::scalar(0.0));
  EXPECT_EQ(g.evaluate(tanh(x)).item(), 0.0);
}

TEST(DiffkitForward, SoftplusStableBranch) {
  Graph g;
  Var x = g.constant(Tensor::vector({800.0, -800.0, 0.0}));
  const Tensor& y = g.evaluate(softplus(x));
  EXPECT_DOUBLE_EQ(y[0], 800.0);
  EXPECT_DOUBLE_EQ(y[1], 0.0);
  EXPECT_DOUBLE_EQ(y[2], std::log(2.0));
}

TEST(DiffkitForward, NamedInputsRebind) {
  Graph g;
  Var x = g.input("x", Shape{2});
  Var root = sum(square(x));
  EXPECT_DOUBLE_EQ(g.evaluate(root, {{"x", Tensor::vector({1, 2})}}).item(), 5.0);
  EXPECT_DOUBLE_EQ(g.evaluate(root, {{"x", Tensor::vector({3, 0})}}).item(), 9.0);
  EXPECT_EQ(g.backward(root)[x].values(), (std::vector<double>{6.0, 0.0}));
  EXPECT_THROW(g.forward({}), std::invalid_argument);
  EXPECT_THROW(g.forward({{"x", Tensor::vector({1, 2, 3})}}), ShapeError);
}

TEST(DiffkitForward, ForwardIsBitDeterministic) {
  Rng rng(7);
  const Tensor w = testing::uniform_tensor(rng, {5, 5}, -1, 1);
  const Tensor x = testing::uniform_tensor(rng, {5, 3}, -1, 1);
  auto run = [&] {
    Graph g;
    Var out = softplus(tanh(matmul(g.constant(w), g.constant(x))));
    return g.evaluate(sum(out)).item();
  };
  const double a = run();
  const double b = run();
  EXPECT_EQ(std::memcmp(&a, &b, sizeof(double)), 0);
}

TEST(DiffkitErrors, ShapeMismatch) {
  Graph g;
  Var a = g.constant(Tensor(Shape{2, 3}));
  Var b = g.constant(Tensor(Shape{3, 2}));
  EXPECT_THROW(add(a, b), ShapeError);
  EXPECT_THROW(matmul(a, a), ShapeError);
  EXPECT_THROW(slice(a, 1, 2, 4), ShapeError);
  EXPECT_THROW(broadcast(a, Shape{4, 3}), ShapeError);
}

TEST(DiffkitErrors, NonFiniteIntermediate) {
  Graph g;
  Var x = g.parameter(Tensor::vector({-1.0}));
  Var root = sum(log(x));
  EXPECT_THROW(g.forward(), NonFiniteError);
}

TEST(DiffkitErrors, BackwardPreconditions) {
  Graph g;
  Var x = g.parameter(Tensor::vector({1.0, 2.0}));
  Var s = sum(x);
  EXPECT_THROW(g.backward(s), std::logic_error);
  g.forward();
  EXPECT_THROW(g.backward(x), ShapeError);
}

TEST(DiffkitBackward, AccumulatesAcrossConsumers) {
  Graph g;
  Var x = g.parameter(Tensor::vector({0.3, -2.0}));
  Var root = sum(add(x, x));
  g.forward();
  EXPECT_EQ(g.backward(root)[x].values(), (std::vector<double>{2.0, 2.0}));
}

TEST(DiffkitBackward, AdditiveIdentityGradient) {
  Graph g;
  Var c = g.parameter(Tensor(Shape{2, 3}, 0.5));
  Var x = g.constant(Tensor(Shape{2, 3}, -1.0));
  Var root = sum(add(c, x));
  g.forward();
  EXPECT_EQ(g.backward(root)[c], Tensor(Shape{2, 3}, 1.0));
}

TEST(DiffkitBackward, UnusedLeafGetsZeros) {
  Graph g;
  Var x = g.parameter(Tensor::vector({1.0}));
  Var y = g.parameter(Tensor::vector({1.0, 2.0}));
  Var root = sum(x);
  g.forward();
  EXPECT_EQ(g.backward(root)[y], Tensor(Shape{2}));
}

TEST(DiffkitBackward, TanhMatVecAgainstFiniteDifferences) {
  Rng rng(11);
  const Tensor w = testing::uniform_tensor(rng, {3, 3}, -1, 1);
  const Tensor x0 = testing::uniform_tensor(rng, {3, 1}, -1, 1);
  auto f = [&](const Tensor& x) {
    Graph g;
    return g.evaluate(sum(tanh(matmul(g.constant(w), g.constant(x))))).item();
  };
  Graph g;
  Var x = g.parameter(x0);
  Var root = sum(tanh(matmul(g.constant(w), x)));
  g.forward();
  const Tensor grad = g.backward(root)[x];
  const double h = 1e-5;
  for (std::size_t i = 0; i < 3; ++i) {
    Tensor p = x0, m = x0;
    p[i] += h;
    m[i] -= h;
    const double fd = (f(p) - f(m)) / (2 * h);
    EXPECT_LE(std::abs(fd - grad[i]) / std::max(std::abs(fd), 1e-12), 1e-6);
  }
}

TEST(DiffkitBackward, EveryOpMatchesFiniteDifferences) {
  Rng rng(20260419);
  for (const auto& op : testing::op_catalog()) {
    for (int trial = 0; trial < 25; ++trial) {
      const auto r = testing::gradient_check(op, rng);
      ASSERT_LE(r.max_rel_error, 1e-5) << op.name << " trial " << trial;
    }
  }
}

TEST(LowRankGaussian, StandardNormalAtMean) {
  const std::vector<double> zero{0.0, 0.0}, one{1.0, 1.0};
  const double lp = lowrank::logpdf(zero, zero, one, std::vector<double>(2 * 1, 0.0), 1);
  EXPECT_NEAR(lp, -std::log(2.0 * M_PI), 1e-15);
  EXPECT_NEAR(lp, -1.837877, 1e-6);
}

TEST(LowRankGaussian, RejectsNonPositiveDiagonal) {
  const std::vector<double> zero{0.0, 0.0}, d{1.0, 0.0};
  EXPECT_THROW(lowrank::logpdf(zero, zero, d, {}, 0), std::invalid_argument);
}

TEST(Adam, MinimizesQuadratic) {
  Tensor x = Tensor::vector({3.0, -2.0});
  Adam opt(AdamConfig{0.1});
  for (int i = 0; i < 500; ++i) {
    Graph g;
    Var v = g.parameter(x);
    Var root = sum(square(shift(v, -1.0)));
    g.forward();
    const auto grads = g.backward(root);
    opt.step({&x}, {&grads[v]});
  }
  EXPECT_NEAR(x[0], 1.0, 1e-3);
  EXPECT_NEAR(x[1], 1.0, 1e-3);
}

}  // namespace
}  // namespace tsadv::diffkit
