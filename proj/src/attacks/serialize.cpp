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

#include <stdexcept>
#include <string>

#include "tsadv/attacks/attacks.hpp"

namespace tsadv::attacks {

using nlohmann::json;

std::string ranking_name(RowRanking r) { return r == RowRanking::kL1 ? "l1" : "l2_squared"; }

RowRanking parse_ranking(const std::string& s) {
  if (s == "l1") return RowRanking::kL1;
  if (s == "l2_squared" || s == "l2") return RowRanking::kSquaredL2;
  throw std::invalid_argument("unknown row ranking '" + s + "'");
}

std::string statistic_name(Statistic s) {
  switch (s) {
    case Statistic::kPoint:
      return "point";
    case Statistic::kMeanOverHorizon:
      return "mean_over_horizon";
    case Statistic::kSumOverItems:
      return "sum_over_items";
  }
  return "point";
}

Statistic parse_statistic(const std::string& s) {
  if (s == "point") return Statistic::kPoint;
  if (s == "mean_over_horizon") return Statistic::kMeanOverHorizon;
  if (s == "sum_over_items") return Statistic::kSumOverItems;
  throw std::invalid_argument("unknown statistic '" + s + "'");
}

namespace {

json matrix_json(const Tensor& t) {
  json rows = json::array();
  for (std::size_t i = 0; i < t.rows(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < t.cols(); ++j) row.push_back(t.at(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Tensor matrix_from_json(const json& rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.at(0).size();
  Tensor t(diffkit::Shape{r, c});
  for (std::size_t i = 0; i < r; ++i) {
    if (rows.at(i).size() != c) throw std::invalid_argument("ragged delta matrix");
    for (std::size_t j = 0; j < c; ++j) t.at(i, j) = rows.at(i).at(j).get<double>();
  }
  return t;
}

}  // namespace

json to_json(const AttackSpec& s) {
  return json{{"targets", s.targets},     {"horizons", s.horizons},
              {"k", s.k},                 {"eta", s.eta},
              {"c1", s.c1},               {"iterations", s.iterations},
              {"step_size", s.step_size}, {"n_grad", s.n_grad},
              {"ranking", ranking_name(s.ranking)}, {"statistic", statistic_name(s.statistic)}};
}

AttackSpec attack_spec_from_json(const json& doc) {
  try {
    AttackSpec s;
    s.targets = doc.at("targets").get<std::vector<std::size_t>>();
    s.horizons = doc.at("horizons").get<std::vector<std::size_t>>();
    s.k = doc.value("k", s.k);
    s.eta = doc.value("eta", s.eta);
    s.c1 = doc.value("c1", s.c1);
    s.iterations = doc.value("iterations", s.iterations);
    s.step_size = doc.value("step_size", s.step_size);
    s.n_grad = doc.value("n_grad", s.n_grad);
    s.ranking = parse_ranking(doc.value("ranking", std::string("l2_squared")));
    s.statistic = parse_statistic(doc.value("statistic", std::string("point")));
    return s;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed attack spec: ") + e.what());
  }
}

json to_json(const Perturbation& p) {
  json doc{{"window_id", p.window_id},
           {"spec", to_json(p.spec)},
           {"delta", matrix_json(p.delta)},
           {"sparsity", p.sparsity},
           {"max_norm", p.max_norm},
           {"bound", p.bound == BoundKind::kHard ? "hard" : "expected"},
           {"seed", p.seed}};
  if (p.expected_sparsity) doc["expected_sparsity"] = *p.expected_sparsity;
  return doc;
}

Perturbation perturbation_from_json(const json& doc) {
  try {
    Perturbation p;
    p.window_id = doc.at("window_id").get<std::size_t>();
    p.spec = attack_spec_from_json(doc.at("spec"));
    p.delta = matrix_from_json(doc.at("delta"));
    p.sparsity = doc.at("sparsity").get<std::size_t>();
    p.max_norm = doc.at("max_norm").get<double>();
    const std::string bound = doc.at("bound").get<std::string>();
    if (bound != "hard" && bound != "expected") throw std::invalid_argument("unknown bound kind");
    p.bound = bound == "hard" ? BoundKind::kHard : BoundKind::kExpected;
    p.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("expected_sparsity")) p.expected_sparsity = doc.at("expected_sparsity").get<double>();
    return p;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed perturbation: ") + e.what());
  }
}

}  // namespace tsadv::attacks
