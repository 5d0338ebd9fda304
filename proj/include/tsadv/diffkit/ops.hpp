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

// Op builders. Binary elementwise ops require identical shapes; use
// broadcast() to replicate a leading-dimension row (or a scalar) explicitly.

#include <cstddef>
#include <span>
#include <vector>

#include "tsadv/diffkit/graph.hpp"

namespace tsadv::diffkit {

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var matmul(Var a, Var b);

Var tanh(Var x);
Var sigmoid(Var x);
// log(1 + exp(x)), evaluated as x + log1p(exp(-x)) for x > 0.
Var softplus(Var x);
Var exp(Var x);
Var log(Var x);
Var sqrt(Var x);
Var square(Var x);
Var scale(Var x, double factor);
Var shift(Var x, double offset);
// Elementwise clamp to [lo, hi]; gradient passes only inside the interval.
Var clamp(Var x, double lo, double hi);
// Inverse standard normal CDF. Inputs must lie strictly inside (0, 1).
Var probit(Var x);

// Reductions to a scalar (shape {}).
Var sum(Var x);
Var mean(Var x);
// Rank-2 reduction: axis 0 gives 1 x cols, axis 1 gives rows x 1.
Var sum_axis(Var x, std::size_t axis);

// Replicates a one-element tensor, or a 1 x c row, to `shape`.
Var broadcast(Var x, Shape shape);
// Rank-2 slice [begin, end) along `axis`.
Var slice(Var x, std::size_t axis, std::size_t begin, std::size_t end);
// Rank-2 concatenation along `axis`.
Var concat(std::span<const Var> parts, std::size_t axis);
Var concat(std::initializer_list<Var> parts, std::size_t axis);
Var transpose(Var x);
Var reshape(Var x, Shape shape);
// out[i, :] = x[indices[i], :]
Var gather_rows(Var x, std::vector<std::size_t> indices);

// Row-wise Gaussian log-density with covariance diag(d_j) + V_j V_j^T, where
// row j of `factor` holds V_j (dim x rank) flattened row-major. y, mean and
// diag are n x dim; factor is n x (dim * rank). Output is n x 1.
Var lowrank_gaussian_logpdf(Var y, Var mean, Var diag, Var factor, std::size_t rank);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator-(Var a) { return scale(a, -1.0); }
inline Var operator*(Var a, double c) { return scale(a, c); }
inline Var operator*(double c, Var a) { return scale(a, c); }
inline Var operator+(Var a, double c) { return shift(a, c); }
inline Var operator+(double c, Var a) { return shift(a, c); }
inline Var operator-(Var a, double c) { return shift(a, -c); }

}  // namespace tsadv::diffkit
