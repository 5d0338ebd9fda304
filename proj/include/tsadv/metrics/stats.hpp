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

#include <functional>
#include <vector>

namespace tsadv::metrics {

// One-sample Kolmogorov-Smirnov statistic sup |F_n - F| against `cdf`.
double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf);

// Asymptotic p-value P(D_n >= d), using the Stephens small-sample correction
// sqrt(n) + 0.12 + 0.11/sqrt(n).
double ks_pvalue(double d, std::size_t n);

}  // namespace tsadv::metrics
