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

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

#include "tsadv/harness/harness.hpp"

namespace tsadv::harness {

using nlohmann::json;

namespace {

inline constexpr std::uint64_t kTrainStream = 0x7472616e;   // "tran"
inline constexpr std::uint64_t kDefendStream = 0x64656664;  // "defd"
inline constexpr std::uint64_t kCellStream = 0x63656c6c;    // "cell"
inline constexpr std::uint64_t kEvalStream = 0x6576616c;    // "eval"

data::Dataset load_dataset(const DatasetConfig& cfg) {
  if (cfg.source == "synthetic") {
    return data::generate(data::electricity_like_spec(cfg.length, cfg.seed));
  }
  if (cfg.source != "csv") {
    throw std::invalid_argument("config: unknown dataset source '" + cfg.source + "'");
  }
  data::Dataset ds = data::load_csv(cfg.path);
  if (cfg.items.empty()) return ds;
  data::Dataset sub;
  sub.values = diffkit::Tensor(diffkit::Shape{cfg.items.size(), ds.length()});
  for (std::size_t r = 0; r < cfg.items.size(); ++r) {
    const auto it = std::find(ds.item_ids.begin(), ds.item_ids.end(), cfg.items[r]);
    if (it == ds.item_ids.end()) {
      throw std::invalid_argument("config: item '" + cfg.items[r] + "' not in " +
                                  cfg.path.string());
    }
    const auto src = static_cast<std::size_t>(it - ds.item_ids.begin());
    for (std::size_t t = 0; t < ds.length(); ++t) sub.values.at(r, t) = ds.values.at(src, t);
  }
  sub.item_ids = cfg.items;
  sub.timestamps = ds.timestamps;
  sub.frequency = ds.frequency;
  sub.split_index = ds.split_index;
  return sub;
}

// Elementwise max of two window metric sets.
metrics::WindowMetrics worst_of(const metrics::WindowMetrics& a, const metrics::WindowMetrics& b) {
  metrics::WindowMetrics out = a;
  out.avg_wql = std::max(a.avg_wql, b.avg_wql);
  for (std::size_t i = 0; i < out.wql.size(); ++i) out.wql[i] = std::max(a.wql[i], b.wql[i]);
  out.wape = std::max(a.wape, b.wape);
  out.wse = std::max(a.wse, b.wse);
  return out;
}

models::FitConfig seeded_fit(const ExperimentConfig& cfg) {
  models::FitConfig fc = cfg.model;
  fc.seed = derive_seed(cfg.seed, {kTrainStream, cfg.model.seed});
  return fc;
}

}  // namespace

Experiment prepare(const ExperimentConfig& cfg) {
  Experiment exp;
  exp.dataset = load_dataset(cfg.dataset);
  const std::size_t d = exp.dataset.dim();
  exp.split = data::split_windows(exp.dataset, cfg.window.context, cfg.window.horizon,
                                  cfg.window.test_windows, cfg.window.train_stride);
  if (exp.split.train.empty()) {
    throw std::invalid_argument("config: no training windows fit before the backtest");
  }

  attacks::AttackSpec& spec = exp.attack;
  if (!cfg.attack.target_items.empty()) {
    for (const auto& id : cfg.attack.target_items) {
      const auto it = std::find(exp.dataset.item_ids.begin(), exp.dataset.item_ids.end(), id);
      if (it == exp.dataset.item_ids.end()) {
        throw std::invalid_argument("config: target item '" + id + "' not in the dataset");
      }
      spec.targets.push_back(static_cast<std::size_t>(it - exp.dataset.item_ids.begin()));
    }
  } else {
    spec.targets = cfg.attack.targets;
  }
  spec.horizons = cfg.attack.horizons.empty()
                      ? std::vector<std::size_t>{cfg.window.horizon - 1}
                      : cfg.attack.horizons;
  spec.eta = cfg.attack.eta;
  spec.iterations = cfg.attack.iterations;
  spec.step_size = cfg.attack.step_size;
  spec.n_grad = cfg.attack.n_grad;
  spec.ranking = cfg.attack.ranking;
  spec.statistic = cfg.attack.statistic;
  spec.k = 1;
  spec.c1 = cfg.attack.c1_values.front();
  for (double c1 : cfg.attack.c1_values) {
    attacks::AttackSpec s = spec;
    s.c1 = c1;
    s.validate(d, cfg.window.horizon);
  }
  for (std::size_t k : cfg.sweep) {
    if (k < 1 || k > d - spec.targets.size()) {
      throw std::invalid_argument("config: sweep value " + std::to_string(k) +
                                  " outside [1, dim - |I|] = [1, " +
                                  std::to_string(d - spec.targets.size()) + "]");
    }
  }
  return exp;
}

models::Checkpoint DefendedModel::checkpoint() const {
  models::Checkpoint c;
  c.params = params;
  if (kind != defenses::DefenseKind::kNone) c.defense = metadata;
  return c;
}

DefendedModel DefendedModel::from_checkpoint(const models::Checkpoint& ckpt, std::size_t samples) {
  DefendedModel m;
  m.params = ckpt.params;
  m.samples = samples;
  if (!ckpt.defense) return m;
  m.metadata = *ckpt.defense;
  m.kind = defenses::parse_defense(m.metadata.value("kind", std::string("none")));
  if (m.kind == defenses::DefenseKind::kSmoothing) {
    const auto sc = defenses::smoothing_config_from_json(m.metadata);
    m.options = sc.options();
    m.samples = sc.n;
  }
  return m;
}

ForecasterParams train_base(const ExperimentConfig& cfg, const Experiment& exp) {
  return models::fit(exp.split.train, seeded_fit(cfg)).params;
}

DefendedModel make_defended(const ExperimentConfig& cfg, const Experiment& exp,
                            defenses::DefenseKind kind, const ForecasterParams& base) {
  using defenses::DefenseKind;
  DefendedModel m;
  m.kind = kind;
  m.samples = cfg.evaluation.samples;
  switch (kind) {
    case DefenseKind::kNone:
      m.params = base;
      m.metadata = defenses::defense_metadata(kind, json::object());
      break;
    case DefenseKind::kAugmentation: {
      defenses::AugmentConfig ac = cfg.defense.augmentation;
      ac.seed = derive_seed(cfg.seed, {kDefendStream, 1, ac.seed});
      m.params = defenses::fit_augmented(exp.split.train, seeded_fit(cfg), ac).params;
      m.metadata = defenses::defense_metadata(kind, defenses::to_json(cfg.defense.augmentation));
      break;
    }
    case DefenseKind::kSmoothing:
      cfg.defense.smoothing.validate();
      m.params = base;
      m.options = cfg.defense.smoothing.options();
      m.samples = cfg.defense.smoothing.n;
      m.metadata = defenses::defense_metadata(kind, defenses::to_json(cfg.defense.smoothing));
      break;
    case DefenseKind::kMinimax: {
      defenses::MinimaxConfig mc = cfg.defense.minimax;
      mc.seed = derive_seed(cfg.seed, {kDefendStream, 2, mc.seed});
      m.params = defenses::minimax_train(exp.split.train, seeded_fit(cfg), mc).params;
      m.metadata = defenses::defense_metadata(kind, defenses::to_json(cfg.defense.minimax));
      break;
    }
  }
  return m;
}

void check_invariants(const attacks::Perturbation& p, const attacks::AttackSpec& spec) {
  for (double v : p.delta.data()) {
    if (!std::isfinite(v)) throw std::logic_error("perturbation has a non-finite entry");
  }
  for (std::size_t i : spec.targets) {
    for (std::size_t t = 0; t < p.delta.cols(); ++t) {
      if (p.delta.at(i, t) != 0.0) {
        throw std::logic_error("perturbation touches target row " + std::to_string(i));
      }
    }
  }
  if (attacks::max_abs(p.delta) > spec.eta) {
    throw std::logic_error("perturbation exceeds eta");
  }
  const std::size_t s = attacks::row_sparsity(p.delta);
  if (s != p.sparsity) throw std::logic_error("recorded sparsity does not match delta");
  if (p.bound == attacks::BoundKind::kHard && s > spec.k) {
    throw std::logic_error("perturbation has " + std::to_string(s) + " rows, k = " +
                           std::to_string(spec.k));
  }
  if (p.bound == attacks::BoundKind::kExpected &&
      (!p.expected_sparsity || *p.expected_sparsity > static_cast<double>(spec.k) + 1e-9)) {
    throw std::logic_error("expected sparsity bound violated");
  }
}

attacks::Perturbation attack_window(const ExperimentConfig& cfg, const Experiment& exp,
                                    const DefendedModel& model, const Window& window,
                                    std::size_t k, double c1) {
  attacks::AttackSpec spec = exp.attack;
  spec.k = k;
  spec.c1 = c1;
  // Independent of the defense so every arm faces the same seeds.
  const std::uint64_t seed =
      derive_seed(cfg.seed, {kCellStream, k, window.id, std::bit_cast<std::uint64_t>(c1)});
  attacks::Perturbation p =
      cfg.attack.kind == AttackKind::kDeterministic
          ? attacks::deterministic_attack(model.params, window, spec, seed, model.options)
          : attacks::probabilistic_attack(model.params, window, spec, cfg.attack.probabilistic,
                                          seed);
  check_invariants(p, spec);
  return p;
}

PredictiveSamples forecast(const ExperimentConfig& cfg, const DefendedModel& model,
                           const Window& window, const diffkit::Tensor& x) {
  return models::sample_paths(model.params, x, model.samples, window.horizon(),
                              derive_seed(cfg.seed, {kEvalStream, window.id}), model.options);
}

std::vector<std::pair<std::string, metrics::Scope>> scopes(const ExperimentConfig& cfg,
                                                           const Experiment& exp) {
  std::vector<std::pair<std::string, metrics::Scope>> out{{"full", metrics::Scope::full()}};
  if (cfg.evaluation.target_scope) {
    out.emplace_back("target", metrics::Scope{exp.attack.targets, exp.attack.horizons});
  }
  return out;
}

const Cell& ResultTable::at(const std::string& row, const std::string& defense) const {
  for (const Cell& c : cells) {
    if (c.row == row && c.defense == defense) return c;
  }
  throw std::out_of_range("no cell (" + row + ", " + defense + ")");
}

bool ResultTable::complete() const {
  if (cells.size() != rows.size() * defenses.size()) return false;
  return std::all_of(cells.begin(), cells.end(), [](const Cell& c) { return c.ok; });
}

namespace {

void run_cell(const ExperimentConfig& cfg, const Experiment& exp, const DefendedModel& model,
              Cell& cell) {
  const auto sc = scopes(cfg, exp);
  std::vector<std::vector<metrics::WindowMetrics>> per_scope(sc.size());
  double sparsity = 0.0, norm = 0.0;
  for (const Window& w : exp.split.test) {
    std::vector<metrics::WindowMetrics> worst(sc.size());
    if (!cell.k) {
      const auto samples = forecast(cfg, model, w, w.x);
      for (std::size_t s = 0; s < sc.size(); ++s) {
        worst[s] = metrics::evaluate_window(w.y_true, samples, sc[s].second);
      }
    } else {
      bool first = true;
      for (double c1 : cfg.attack.c1_values) {
        const attacks::Perturbation p = attack_window(cfg, exp, model, w, *cell.k, c1);
        sparsity += static_cast<double>(p.sparsity);
        norm = std::max(norm, p.max_norm);
        ++cell.diagnostics.attacks;
        const auto samples = forecast(cfg, model, w, attacks::apply_perturbation(w.x, p.delta));
        for (std::size_t s = 0; s < sc.size(); ++s) {
          const auto m = metrics::evaluate_window(w.y_true, samples, sc[s].second);
          worst[s] = first ? m : worst_of(worst[s], m);
        }
        first = false;
      }
    }
    for (std::size_t s = 0; s < sc.size(); ++s) per_scope[s].push_back(worst[s]);
  }
  for (std::size_t s = 0; s < sc.size(); ++s) {
    cell.reports[sc[s].first] = metrics::aggregate(per_scope[s], sc[s].first);
    auto& v = cell.window_avg_wql[sc[s].first];
    for (const auto& m : per_scope[s]) v.push_back(m.avg_wql);
  }
  if (cell.diagnostics.attacks > 0) {
    cell.diagnostics.mean_sparsity = sparsity / static_cast<double>(cell.diagnostics.attacks);
  }
  cell.diagnostics.mean_max_norm = norm;
}

}  // namespace

ResultTable run_experiment(const ExperimentConfig& cfg) {
  const Experiment exp = prepare(cfg);
  const std::size_t full_k = exp.dataset.dim() - exp.attack.targets.size();

  ResultTable table;
  table.config = to_json(cfg);
  for (const auto& [name, scope] : scopes(cfg, exp)) table.scopes.push_back(name);
  std::vector<std::optional<std::size_t>> row_k;
  if (cfg.include_no_attack) {
    table.rows.push_back("no attack");
    row_k.push_back(std::nullopt);
  }
  for (std::size_t k : cfg.sweep) {
    table.rows.push_back("k=" + std::to_string(k));
    row_k.push_back(k);
  }
  if (cfg.include_full_attack &&
      std::find(cfg.sweep.begin(), cfg.sweep.end(), full_k) == cfg.sweep.end()) {
    table.rows.push_back("full attack");
    row_k.push_back(full_k);
  }
  for (auto kind : cfg.defense.kinds) table.defenses.emplace_back(defenses::defense_name(kind));

  std::optional<ForecasterParams> base;
  std::string base_error;
  try {
    base = train_base(cfg, exp);
  } catch (const std::exception& e) {
    base_error = std::string("training failed: ") + e.what();
  }
  std::vector<std::optional<DefendedModel>> models;
  std::vector<std::string> model_errors;
  for (auto kind : cfg.defense.kinds) {
    if (!base) {
      models.emplace_back();
      model_errors.push_back(base_error);
      continue;
    }
    try {
      models.emplace_back(make_defended(cfg, exp, kind, *base));
      model_errors.emplace_back();
    } catch (const std::exception& e) {
      models.emplace_back();
      model_errors.push_back(std::string("defense training failed: ") + e.what());
    }
  }

  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    for (std::size_t d = 0; d < table.defenses.size(); ++d) {
      Cell cell;
      cell.row = table.rows[r];
      cell.k = row_k[r];
      cell.defense = table.defenses[d];
      if (!models[d]) {
        cell.diagnostic = model_errors[d];
      } else {
        try {
          run_cell(cfg, exp, *models[d], cell);
          cell.ok = true;
        } catch (const std::exception& e) {
          cell.reports.clear();
          cell.window_avg_wql.clear();
          cell.diagnostic = e.what();
        }
      }
      table.cells.push_back(std::move(cell));
    }
  }
  return table;
}

}  // namespace tsadv::harness
