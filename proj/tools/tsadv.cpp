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

// tsadv: train forecasters, attack them, apply defenses and tabulate results.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "tsadv/harness/harness.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tsadv;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& c, bool config_required) {
  auto* opt = cmd->add_option("--config", c.config, "Experiment config (JSON, schema 1)");
  if (config_required) opt->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "Override the experiment seed");
}

harness::ExperimentConfig resolve(const Common& c) {
  harness::ExperimentConfig cfg =
      c.config.empty() ? harness::default_config() : harness::load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  return cfg;
}

fs::path output_path(const harness::ExperimentConfig& cfg, const std::string& explicit_path,
                     const std::string& name) {
  if (!explicit_path.empty()) return explicit_path;
  const fs::path dir = harness::output_dir(cfg);
  fs::create_directories(dir);
  return dir / name;
}

void write_json(const fs::path& path, const json& doc) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  out << doc.dump(2) << "\n";
  if (!out) throw std::runtime_error("cannot write " + path.string());
  std::cout << "wrote " << path.string() << "\n";
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path.string());
  return json::parse(in);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse indirect attacks and defenses for multivariate probabilistic forecasters"};
  app.require_subcommand(1);

  Common train_opts, defend_opts, attack_opts, eval_opts, sweep_opts, report_opts;
  std::string train_out, defend_out, defend_kind = "minimax", attack_out, attack_ckpt,
                                        eval_ckpt, eval_perturb, eval_out, report_input,
                                        report_dir;
  std::size_t attack_k = 1;
  std::optional<double> attack_c1;

  auto* train = app.add_subcommand("train", "Fit the forecaster and save a checkpoint");
  add_common(train, train_opts, false);
  train->add_option("--out", train_out, "Checkpoint path (default <output>/model.json)");

  auto* defend = app.add_subcommand("defend", "Train a defended forecaster");
  add_common(defend, defend_opts, false);
  defend->add_option("--defense", defend_kind, "none | augmentation | smoothing | minimax")
      ->check(CLI::IsMember({"none", "augmentation", "smoothing", "minimax"}));
  defend->add_option("--out", defend_out, "Checkpoint path (default <output>/<defense>.json)");

  auto* attack = app.add_subcommand("attack", "Attack every backtest window");
  add_common(attack, attack_opts, false);
  attack->add_option("--checkpoint", attack_ckpt, "Model checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  attack->add_option("--k", attack_k, "Row sparsity bound")->check(CLI::PositiveNumber);
  attack->add_option("--c1", attack_c1, "Target scale (default: first configured c1)");
  attack->add_option("--out", attack_out, "Output (default <output>/perturbations.json)");

  auto* evaluate = app.add_subcommand("evaluate", "Score a checkpoint on the backtest windows");
  add_common(evaluate, eval_opts, false);
  evaluate->add_option("--checkpoint", eval_ckpt, "Model checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate->add_option("--perturbations", eval_perturb, "Perturbations from `attack`")
      ->check(CLI::ExistingFile);
  evaluate->add_option("--out", eval_out, "Output (default <output>/metrics.json)");

  auto* sweep = app.add_subcommand("sweep", "Run the full attack/defense grid and write tables");
  add_common(sweep, sweep_opts, true);

  auto* report = app.add_subcommand("report", "Re-render tables from a results.json");
  add_common(report, report_opts, false);
  report->add_option("--input", report_input, "results.json from `sweep`")
      ->required()
      ->check(CLI::ExistingFile);
  report->add_option("--out", report_dir, "Output directory (default: next to the input)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      const auto cfg = resolve(train_opts);
      const auto exp = harness::prepare(cfg);
      const auto model =
          harness::make_defended(cfg, exp, defenses::DefenseKind::kNone, harness::train_base(cfg, exp));
      const fs::path path = output_path(cfg, train_out, "model.json");
      models::save_checkpoint(model.checkpoint(), path);
      std::cout << "wrote " << path.string() << " (train NLL "
                << models::dataset_nll(model.params, exp.split.train) << ")\n";
      return 0;
    }
    if (defend->parsed()) {
      const auto cfg = resolve(defend_opts);
      const auto exp = harness::prepare(cfg);
      const auto kind = defenses::parse_defense(defend_kind);
      const auto model = harness::make_defended(cfg, exp, kind, harness::train_base(cfg, exp));
      const fs::path path = output_path(cfg, defend_out, defend_kind + ".json");
      models::save_checkpoint(model.checkpoint(), path);
      std::cout << "wrote " << path.string() << "\n";
      return 0;
    }
    if (attack->parsed()) {
      const auto cfg = resolve(attack_opts);
      const auto exp = harness::prepare(cfg);
      const auto model = harness::DefendedModel::from_checkpoint(
          models::load_checkpoint(attack_ckpt), cfg.evaluation.samples);
      const double c1 = attack_c1.value_or(cfg.attack.c1_values.front());
      json out = json::array();
      for (const auto& w : exp.split.test) {
        out.push_back(attacks::to_json(harness::attack_window(cfg, exp, model, w, attack_k, c1)));
      }
      write_json(output_path(cfg, attack_out, "perturbations.json"), out);
      return 0;
    }
    if (evaluate->parsed()) {
      const auto cfg = resolve(eval_opts);
      const auto exp = harness::prepare(cfg);
      const auto model = harness::DefendedModel::from_checkpoint(
          models::load_checkpoint(eval_ckpt), cfg.evaluation.samples);
      std::vector<attacks::Perturbation> perts;
      if (!eval_perturb.empty()) {
        for (const auto& p : read_json(eval_perturb)) perts.push_back(attacks::perturbation_from_json(p));
        if (perts.size() != exp.split.test.size()) {
          throw std::invalid_argument("perturbation count does not match the backtest windows");
        }
      }
      const auto sc = harness::scopes(cfg, exp);
      std::vector<std::vector<metrics::WindowMetrics>> per(sc.size());
      for (std::size_t n = 0; n < exp.split.test.size(); ++n) {
        const auto& w = exp.split.test[n];
        diffkit::Tensor x = w.x;
        if (!perts.empty()) {
          harness::check_invariants(perts[n], perts[n].spec);
          x = attacks::apply_perturbation(w.x, perts[n].delta);
        }
        const auto samples = harness::forecast(cfg, model, w, x);
        for (std::size_t s = 0; s < sc.size(); ++s) {
          per[s].push_back(metrics::evaluate_window(w.y_true, samples, sc[s].second));
        }
      }
      json out = json::object();
      for (std::size_t s = 0; s < sc.size(); ++s) {
        const auto r = metrics::aggregate(per[s], sc[s].first);
        out[sc[s].first] = metrics::to_json(r);
        std::cout << sc[s].first << ": avg wQL " << harness::format_cell(r.avg_wql) << "\n";
      }
      write_json(output_path(cfg, eval_out, "metrics.json"), out);
      return 0;
    }
    if (sweep->parsed()) {
      const auto cfg = resolve(sweep_opts);
      const auto table = harness::run_experiment(cfg);
      for (const auto& path : harness::write_report(table, harness::output_dir(cfg))) {
        std::cout << "wrote " << path.string() << "\n";
      }
      std::cout << harness::to_table_csv(table, table.scopes.back());
      for (const auto& c : table.cells) {
        if (!c.ok) std::cerr << "cell (" << c.row << ", " << c.defense << ") failed: " << c.diagnostic << "\n";
      }
      return table.complete() ? 0 : 1;
    }
    if (report->parsed()) {
      const auto table = harness::table_from_json(read_json(report_input));
      const fs::path dir = report_dir.empty() ? fs::path(report_input).parent_path() : fs::path(report_dir);
      for (const auto& path : harness::write_report(table, dir.empty() ? fs::path(".") : dir)) {
        std::cout << "wrote " << path.string() << "\n";
      }
      return table.complete() ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "tsadv: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
