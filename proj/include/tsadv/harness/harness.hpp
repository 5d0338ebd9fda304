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

// Experiment runner: trains the forecaster and its defended variants, attacks
// every backtest window at each sparsity level and tabulates the metrics.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tsadv/attacks/attacks.hpp"
#include "tsadv/data/data.hpp"
#include "tsadv/defenses/defenses.hpp"
#include "tsadv/metrics/metrics.hpp"
#include "tsadv/models/checkpoint.hpp"
#include "tsadv/models/fit.hpp"

namespace tsadv::harness {

using models::ForecasterParams;
using models::PredictiveSamples;
using models::Window;

inline constexpr int kConfigSchema = 1;
inline constexpr const char* kOutputDirEnv = "TSADV_OUTPUT_DIR";

enum class AttackKind { kDeterministic, kProbabilistic };

struct DatasetConfig {
  // "synthetic" (the seasonal benchmark generator) or "csv".
  std::string source = "synthetic";
  std::filesystem::path path;
  // Optional subset and order of item ids taken from a CSV.
  std::vector<std::string> items;
  std::size_t length = 4000;
  std::uint64_t seed = 11;
};

struct WindowConfig {
  std::size_t context = 96;
  std::size_t horizon = 24;
  std::size_t test_windows = 20;
  // Stride between training windows; 0 means the horizon.
  std::size_t train_stride = 0;
};

struct AttackConfig {
  AttackKind kind = AttackKind::kDeterministic;
  // Target items as indices; `target_items` (ids) takes precedence when set.
  std::vector<std::size_t> targets{1};
  std::vector<std::string> target_items;
  // Zero-based horizon offsets; empty means the last step.
  std::vector<std::size_t> horizons;
  double eta = 0.5;
  std::vector<double> c1_values{0.5, 2.0};
  std::size_t iterations = 200;
  double step_size = 0.0;
  std::size_t n_grad = 32;
  attacks::RowRanking ranking = attacks::RowRanking::kSquaredL2;
  attacks::Statistic statistic = attacks::Statistic::kPoint;
  attacks::ProbTrainConfig probabilistic;
};

struct DefenseSelection {
  std::vector<defenses::DefenseKind> kinds{defenses::DefenseKind::kNone};
  defenses::AugmentConfig augmentation;
  defenses::SmoothingConfig smoothing;
  defenses::MinimaxConfig minimax;
};

struct EvaluationConfig {
  // Sample paths per forecast (the smoothed forecaster uses its own n).
  std::size_t samples = 100;
  bool target_scope = true;
};

struct ExperimentConfig {
  DatasetConfig dataset;
  models::FitConfig model;
  WindowConfig window;
  AttackConfig attack;
  std::vector<std::size_t> sweep{1, 3, 5, 7, 9};
  bool include_no_attack = true;
  // Adds a row at k = dim - |I| unless the sweep already contains it.
  bool include_full_attack = true;
  DefenseSelection defense;
  EvaluationConfig evaluation;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "tsadv_out";
};

ExperimentConfig default_config();
nlohmann::json to_json(const ExperimentConfig& cfg);
// Missing keys keep their defaults. Throws std::invalid_argument on a wrong
// schema version, unknown enum names or a malformed document.
ExperimentConfig config_from_json(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);
// The output directory after applying the environment override.
std::filesystem::path output_dir(const ExperimentConfig& cfg);

struct Experiment {
  data::Dataset dataset;
  data::Split split;
  attacks::AttackSpec attack;  // template; k and c1 are set per cell
};

// Loads or generates the dataset, cuts the windows and resolves the attack
// template. Throws std::invalid_argument on an inconsistent config (e.g. a
// sweep value outside [1, dim - |I|]).
Experiment prepare(const ExperimentConfig& cfg);

// A forecaster as it is evaluated and attacked: parameters plus the sampling
// options of its defense (smoothing adds input jitter).
struct DefendedModel {
  defenses::DefenseKind kind = defenses::DefenseKind::kNone;
  ForecasterParams params;
  models::SampleOptions options;
  std::size_t samples = 100;
  nlohmann::json metadata;

  models::Checkpoint checkpoint() const;
  static DefendedModel from_checkpoint(const models::Checkpoint& ckpt, std::size_t samples);
};

ForecasterParams train_base(const ExperimentConfig& cfg, const Experiment& exp);
DefendedModel make_defended(const ExperimentConfig& cfg, const Experiment& exp,
                            defenses::DefenseKind kind, const ForecasterParams& base);

// Attack on one window with the given sparsity and c1, seeded so every
// defense sees the same seeds. Checks the perturbation invariants and throws
// std::logic_error when one is violated.
attacks::Perturbation attack_window(const ExperimentConfig& cfg, const Experiment& exp,
                                    const DefendedModel& model, const Window& window,
                                    std::size_t k, double c1);
void check_invariants(const attacks::Perturbation& p, const attacks::AttackSpec& spec);

PredictiveSamples forecast(const ExperimentConfig& cfg, const DefendedModel& model,
                           const Window& window, const diffkit::Tensor& x);

// Scopes evaluated per cell: "full" and, when enabled, "target" (I x H).
std::vector<std::pair<std::string, metrics::Scope>> scopes(const ExperimentConfig& cfg,
                                                           const Experiment& exp);

struct CellDiagnostics {
  double mean_sparsity = 0.0;
  double mean_max_norm = 0.0;
  std::size_t attacks = 0;
};

struct Cell {
  std::string row;                // "no attack", "k=3", "full attack"
  std::optional<std::size_t> k;   // empty for "no attack"
  std::string defense;
  bool ok = false;
  std::string diagnostic;
  std::map<std::string, metrics::MetricsReport> reports;  // by scope
  // Per-window avg wQL by scope, for paired comparisons across cells.
  std::map<std::string, std::vector<double>> window_avg_wql;
  CellDiagnostics diagnostics;
};

struct ResultTable {
  std::vector<std::string> rows;
  std::vector<std::string> defenses;
  std::vector<std::string> scopes;
  std::vector<Cell> cells;  // row-major over rows x defenses
  nlohmann::json config;

  const Cell& at(const std::string& row, const std::string& defense) const;
  bool complete() const;
};

// Runs every (row, defense) cell. A failing cell records its diagnostic and
// the run continues.
ResultTable run_experiment(const ExperimentConfig& cfg);

nlohmann::json to_json(const ResultTable& table);
ResultTable table_from_json(const nlohmann::json& doc);

// "mean ± std" with the shortest representation that round-trips.
std::string format_cell(const metrics::Summary& s);
// Inverse of format_cell; throws std::invalid_argument on malformed text.
metrics::Summary parse_cell(const std::string& text);

// Long CSV: one line per (cell, scope) with every metric mean and std.
std::string to_csv(const ResultTable& table);
// Rebuilds the reports of `table` from to_csv output; the returned table keeps
// the structure and diagnostics of `like`.
ResultTable table_from_csv(const std::string& csv, const ResultTable& like);
// Rows x defenses of "mean ± std" avg wQL for one scope.
std::string to_table_csv(const ResultTable& table, const std::string& scope);
// Plot data: k (0 for no attack) against mean avg wQL, one column per defense.
std::string to_tsv(const ResultTable& table, const std::string& scope);

// Writes results.json, results.csv and per scope table_<scope>.csv and
// sweep_<scope>.tsv into `dir`. Returns the written paths.
std::vector<std::filesystem::path> write_report(const ResultTable& table,
                                                const std::filesystem::path& dir);

}  // namespace tsadv::harness
