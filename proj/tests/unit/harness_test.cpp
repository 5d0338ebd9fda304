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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tsadv/harness/harness.hpp"

namespace tsadv::harness {
namespace {

namespace fs = std::filesystem;

ExperimentConfig small_config() {
  ExperimentConfig c = default_config();
  c.dataset.length = 900;
  c.window.context = 48;
  c.window.horizon = 12;
  c.window.test_windows = 3;
  c.attack.iterations = 10;
  c.attack.n_grad = 8;
  c.evaluation.samples = 40;
  c.sweep = {1, 3};
  c.defense.smoothing.n = 40;
  c.defense.minimax.epochs = 1;
  c.defense.minimax.attacker_steps = 2;
  c.defense.minimax.model_steps = 2;
  c.defense.minimax.n_delta = 2;
  c.seed = 5;
  return c;
}

TEST(Config, JsonRoundTrip) {
  ExperimentConfig c = small_config();
  c.defense.kinds = {defenses::DefenseKind::kNone, defenses::DefenseKind::kMinimax};
  c.attack.kind = AttackKind::kProbabilistic;
  c.attack.statistic = attacks::Statistic::kMeanOverHorizon;
  const nlohmann::json doc = to_json(c);
  EXPECT_EQ(doc["schema"], 1);
  EXPECT_EQ(to_json(config_from_json(doc)), doc);
}

TEST(Config, DefaultsAndErrors) {
  const ExperimentConfig c = config_from_json(nlohmann::json::object());
  EXPECT_EQ(c.model.lags, (std::vector<std::size_t>{1, 24}));
  EXPECT_EQ(c.window.test_windows, 20u);
  EXPECT_EQ(c.attack.c1_values, (std::vector<double>{0.5, 2.0}));
  EXPECT_THROW(config_from_json({{"schema", 2}}), std::invalid_argument);
  EXPECT_THROW(config_from_json({{"defenses", {{"kinds", {"dropout"}}}}}), std::invalid_argument);
  EXPECT_THROW(config_from_json({{"attack", {{"kind", "random"}}}}), std::invalid_argument);
  EXPECT_THROW(config_from_json({{"window", {{"context", "long"}}}}), std::invalid_argument);
}

TEST(Config, OutputDirEnvironmentOverride) {
  ExperimentConfig c = small_config();
  c.output_dir = "from_config";
  ::unsetenv(kOutputDirEnv);
  EXPECT_EQ(output_dir(c), fs::path("from_config"));
  ::setenv(kOutputDirEnv, "/tmp/from_env", 1);
  EXPECT_EQ(output_dir(c), fs::path("/tmp/from_env"));
  ::unsetenv(kOutputDirEnv);
}

TEST(Prepare, ValidatesSweepAgainstDimension) {
  ExperimentConfig c = small_config();
  const Experiment exp = prepare(c);
  EXPECT_EQ(exp.attack.targets, (std::vector<std::size_t>{1}));
  EXPECT_EQ(exp.attack.horizons, (std::vector<std::size_t>{11}));
  EXPECT_EQ(exp.split.test.size(), 3u);
  c.sweep = {1, 10};
  EXPECT_THROW(prepare(c), std::invalid_argument);
  c.sweep = {1};
  c.attack.target_items = {"item_3"};
  EXPECT_EQ(prepare(c).attack.targets, (std::vector<std::size_t>{3}));
  c.attack.target_items = {"nope"};
  EXPECT_THROW(prepare(c), std::invalid_argument);
}

TEST(Invariants, RejectsBadPerturbations) {
  attacks::AttackSpec spec;
  spec.targets = {0};
  spec.horizons = {0};
  spec.k = 1;
  spec.eta = 0.5;
  attacks::Perturbation p;
  p.delta = diffkit::Tensor::matrix({{0, 0}, {0.1, 0.2}, {0, 0}});
  p.sparsity = 1;
  EXPECT_NO_THROW(check_invariants(p, spec));
  p.delta.at(0, 1) = 0.1;
  p.sparsity = 2;
  EXPECT_THROW(check_invariants(p, spec), std::logic_error);
  p.delta.at(0, 1) = 0.0;
  p.delta.at(2, 0) = 0.3;
  EXPECT_THROW(check_invariants(p, spec), std::logic_error);
  p.delta.at(2, 0) = 0.0;
  p.delta.at(1, 0) = 0.6;
  p.sparsity = 1;
  EXPECT_THROW(check_invariants(p, spec), std::logic_error);
}

class Sweep : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    ExperimentConfig c = small_config();
    c.defense.kinds = {defenses::DefenseKind::kNone, defenses::DefenseKind::kSmoothing};
    table_ = new ResultTable(run_experiment(c));
  }
  static void TearDownTestSuite() { delete table_; }
  static ResultTable* table_;
};
ResultTable* Sweep::table_ = nullptr;

TEST_F(Sweep, EnumeratesRowsAndCells) {
  const ResultTable& t = *table_;
  EXPECT_EQ(t.rows, (std::vector<std::string>{"no attack", "k=1", "k=3", "full attack"}));
  EXPECT_EQ(t.defenses, (std::vector<std::string>{"none", "smoothing"}));
  EXPECT_EQ(t.scopes, (std::vector<std::string>{"full", "target"}));
  EXPECT_EQ(t.cells.size(), 8u);
  EXPECT_TRUE(t.complete());
  EXPECT_EQ(t.at("full attack", "none").k, 9u);
  EXPECT_EQ(t.at("k=3", "none").diagnostics.attacks, 6u);
  EXPECT_LE(t.at("k=3", "none").diagnostics.mean_sparsity, 3.0);
  EXPECT_LE(t.at("k=3", "none").diagnostics.mean_max_norm, 0.5);
}

TEST_F(Sweep, NoAttackRowIsCleanEvaluation) {
  ExperimentConfig c = small_config();
  const Experiment exp = prepare(c);
  const DefendedModel m =
      make_defended(c, exp, defenses::DefenseKind::kNone, train_base(c, exp));
  std::vector<metrics::WindowMetrics> per;
  for (const auto& w : exp.split.test) {
    per.push_back(metrics::evaluate_window(w.y_true, forecast(c, m, w, w.x)));
  }
  const auto direct = metrics::aggregate(per, "full");
  const auto& cell = table_->at("no attack", "none").reports.at("full");
  EXPECT_EQ(cell.avg_wql.mean, direct.avg_wql.mean);
  EXPECT_EQ(cell.wape.mean, direct.wape.mean);
}

TEST_F(Sweep, ReportFormatsRoundTrip) {
  const ResultTable& t = *table_;
  EXPECT_EQ(to_json(table_from_json(to_json(t))), to_json(t));
  EXPECT_EQ(to_json(table_from_csv(to_csv(t), t)), to_json(t));

  std::istringstream table(to_table_csv(t, "target"));
  std::string line;
  std::getline(table, line);
  EXPECT_EQ(line, "row,none,smoothing");
  std::getline(table, line);
  const std::string cell = line.substr(line.find(',') + 1, line.rfind(',') - line.find(',') - 1);
  const metrics::Summary s = parse_cell(cell);
  EXPECT_EQ(s.mean, t.at("no attack", "none").reports.at("target").avg_wql.mean);
  EXPECT_EQ(s.std, t.at("no attack", "none").reports.at("target").avg_wql.std);

  std::istringstream tsv(to_tsv(t, "full"));
  std::getline(tsv, line);
  EXPECT_EQ(line, "k\tnone\tsmoothing");
  std::getline(tsv, line);
  EXPECT_EQ(line.substr(0, 2), "0\t");
}

TEST_F(Sweep, WritesReportFiles) {
  const fs::path dir = fs::temp_directory_path() / "tsadv_harness_report";
  fs::remove_all(dir);
  const auto files = write_report(*table_, dir);
  EXPECT_EQ(files.size(), 6u);
  for (const auto& f : files) EXPECT_GT(fs::file_size(f), 0u);
  std::ifstream in(dir / "results.json");
  EXPECT_EQ(to_json(table_from_json(nlohmann::json::parse(in))), to_json(*table_));
  fs::remove_all(dir);
}

TEST(Cells, FullAttackRowMergesWithSweep) {
  ExperimentConfig c = small_config();
  c.window.test_windows = 1;
  c.attack.iterations = 2;
  c.sweep = {1, 3, 5, 9};
  const ResultTable t = run_experiment(c);
  EXPECT_EQ(t.rows, (std::vector<std::string>{"no attack", "k=1", "k=3", "k=5", "k=9"}));
  EXPECT_TRUE(t.complete());
}

TEST(Cells, FormatAndParse) {
  EXPECT_EQ(format_cell({0.25, 0.125}), "0.25 ± 0.125");
  const metrics::Summary s = parse_cell(format_cell({0.1 + 0.2, 1.0 / 3.0}));
  EXPECT_EQ(s.mean, 0.1 + 0.2);
  EXPECT_EQ(s.std, 1.0 / 3.0);
  EXPECT_THROW(parse_cell("0.25 +- 0.1"), std::invalid_argument);
  EXPECT_THROW(parse_cell("x ± 0.1"), std::invalid_argument);
}

TEST(Cells, FailedDefenseIsRecordedNotFatal) {
  ExperimentConfig c = small_config();
  c.sweep = {1};
  c.include_full_attack = false;
  c.defense.kinds = {defenses::DefenseKind::kNone, defenses::DefenseKind::kMinimax};
  c.defense.minimax.k = 50;
  const ResultTable t = run_experiment(c);
  EXPECT_FALSE(t.complete());
  EXPECT_TRUE(t.at("k=1", "none").ok);
  const Cell& bad = t.at("k=1", "minimax");
  EXPECT_FALSE(bad.ok);
  EXPECT_NE(bad.diagnostic.find("minimax"), std::string::npos) << bad.diagnostic;
  EXPECT_NO_THROW(to_csv(t));
}

TEST(Determinism, RerunIsByteIdentical) {
  ExperimentConfig c = small_config();
  c.sweep = {2};
  c.include_full_attack = false;
  c.defense.kinds = {defenses::DefenseKind::kNone, defenses::DefenseKind::kAugmentation,
                     defenses::DefenseKind::kMinimax};
  const std::string a = to_json(run_experiment(c)).dump();
  const std::string b = to_json(run_experiment(c)).dump();
  EXPECT_EQ(a, b);
  c.seed = 6;
  EXPECT_NE(to_json(run_experiment(c)).dump(), a);
}

TEST(Checkpoint, DefendedModelRoundTrip) {
  ExperimentConfig c = small_config();
  const Experiment exp = prepare(c);
  const auto base = train_base(c, exp);
  const DefendedModel m = make_defended(c, exp, defenses::DefenseKind::kSmoothing, base);
  const DefendedModel back = DefendedModel::from_checkpoint(
      models::checkpoint_from_json(models::to_json(m.checkpoint())), 100);
  EXPECT_EQ(back.kind, defenses::DefenseKind::kSmoothing);
  EXPECT_EQ(back.options.input_jitter, 0.1);
  EXPECT_EQ(back.samples, 40u);
  const DefendedModel plain = DefendedModel::from_checkpoint(
      make_defended(c, exp, defenses::DefenseKind::kNone, base).checkpoint(), 77);
  EXPECT_EQ(plain.kind, defenses::DefenseKind::kNone);
  EXPECT_EQ(plain.samples, 77u);
}

}  // namespace
}  // namespace tsadv::harness
