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

#include <cstdlib>
#include <fstream>
#include <stdexcept>
#include <string>

#include "tsadv/harness/harness.hpp"

namespace tsadv::harness {

using nlohmann::json;

namespace {

std::string attack_kind_name(AttackKind k) {
  return k == AttackKind::kProbabilistic ? "probabilistic" : "deterministic";
}

AttackKind parse_attack_kind(const std::string& s) {
  if (s == "deterministic") return AttackKind::kDeterministic;
  if (s == "probabilistic") return AttackKind::kProbabilistic;
  throw std::invalid_argument("unknown attack kind '" + s + "'");
}

json fit_json(const models::FitConfig& f) {
  return json{{"kind", std::string(models::model_kind_name(f.kind))},
              {"lags", f.lags},
              {"hidden", f.hidden},
              {"rank", f.rank},
              {"epochs", f.epochs},
              {"batch_size", f.batch_size},
              {"learning_rate", f.learning_rate},
              {"clip_norm", f.clip_norm},
              {"ridge", f.ridge},
              {"patience", f.patience},
              {"seed", f.seed}};
}

models::FitConfig fit_from(const json& j, models::FitConfig f) {
  if (j.contains("kind")) f.kind = models::parse_model_kind(j.at("kind").get<std::string>());
  f.lags = j.value("lags", f.lags);
  f.hidden = j.value("hidden", f.hidden);
  f.rank = j.value("rank", f.rank);
  f.epochs = j.value("epochs", f.epochs);
  f.batch_size = j.value("batch_size", f.batch_size);
  f.learning_rate = j.value("learning_rate", f.learning_rate);
  f.clip_norm = j.value("clip_norm", f.clip_norm);
  f.ridge = j.value("ridge", f.ridge);
  f.patience = j.value("patience", f.patience);
  f.seed = j.value("seed", f.seed);
  return f;
}

json prob_json(const attacks::ProbTrainConfig& p) {
  return json{{"steps", p.steps},
              {"learning_rate", p.learning_rate},
              {"n_delta", p.n_delta},
              {"temperature", p.temperature}};
}

attacks::ProbTrainConfig prob_from(const json& j) {
  attacks::ProbTrainConfig p;
  p.steps = j.value("steps", p.steps);
  p.learning_rate = j.value("learning_rate", p.learning_rate);
  p.n_delta = j.value("n_delta", p.n_delta);
  p.temperature = j.value("temperature", p.temperature);
  return p;
}

}  // namespace

ExperimentConfig default_config() {
  ExperimentConfig c;
  c.model.lags = {1, 24};
  return c;
}

json to_json(const ExperimentConfig& c) {
  json kinds = json::array();
  for (auto k : c.defense.kinds) kinds.push_back(std::string(defenses::defense_name(k)));
  json dataset{{"source", c.dataset.source},
               {"path", c.dataset.path.string()},
               {"items", c.dataset.items},
               {"length", c.dataset.length},
               {"seed", c.dataset.seed}};
  json attack{{"kind", attack_kind_name(c.attack.kind)},
              {"targets", c.attack.targets},
              {"target_items", c.attack.target_items},
              {"horizons", c.attack.horizons},
              {"eta", c.attack.eta},
              {"c1_values", c.attack.c1_values},
              {"iterations", c.attack.iterations},
              {"step_size", c.attack.step_size},
              {"n_grad", c.attack.n_grad},
              {"ranking", attacks::ranking_name(c.attack.ranking)},
              {"statistic", attacks::statistic_name(c.attack.statistic)},
              {"probabilistic", prob_json(c.attack.probabilistic)}};
  return json{{"schema", kConfigSchema},
              {"dataset", dataset},
              {"model", fit_json(c.model)},
              {"window",
               {{"context", c.window.context},
                {"horizon", c.window.horizon},
                {"test_windows", c.window.test_windows},
                {"train_stride", c.window.train_stride}}},
              {"attack", attack},
              {"sweep", c.sweep},
              {"include_no_attack", c.include_no_attack},
              {"include_full_attack", c.include_full_attack},
              {"defenses",
               {{"kinds", kinds},
                {"augmentation", defenses::to_json(c.defense.augmentation)},
                {"smoothing", defenses::to_json(c.defense.smoothing)},
                {"minimax", defenses::to_json(c.defense.minimax)}}},
              {"evaluation",
               {{"samples", c.evaluation.samples}, {"target_scope", c.evaluation.target_scope}}},
              {"seed", c.seed},
              {"output_dir", c.output_dir.string()}};
}

ExperimentConfig config_from_json(const json& doc) {
  if (!doc.is_object()) throw std::invalid_argument("config: expected a JSON object");
  const int schema = doc.value("schema", kConfigSchema);
  if (schema != kConfigSchema) {
    throw std::invalid_argument("config: unsupported schema " + std::to_string(schema) +
                                ", expected " + std::to_string(kConfigSchema));
  }
  ExperimentConfig c = default_config();
  try {
    if (doc.contains("dataset")) {
      const json& d = doc.at("dataset");
      c.dataset.source = d.value("source", c.dataset.source);
      c.dataset.path = d.value("path", std::string());
      c.dataset.items = d.value("items", c.dataset.items);
      c.dataset.length = d.value("length", c.dataset.length);
      c.dataset.seed = d.value("seed", c.dataset.seed);
    }
    if (doc.contains("model")) {
      c.model = fit_from(doc.at("model"), c.model);
    }
    if (doc.contains("window")) {
      const json& w = doc.at("window");
      c.window.context = w.value("context", c.window.context);
      c.window.horizon = w.value("horizon", c.window.horizon);
      c.window.test_windows = w.value("test_windows", c.window.test_windows);
      c.window.train_stride = w.value("train_stride", c.window.train_stride);
    }
    if (doc.contains("attack")) {
      const json& a = doc.at("attack");
      if (a.contains("kind")) c.attack.kind = parse_attack_kind(a.at("kind").get<std::string>());
      c.attack.targets = a.value("targets", c.attack.targets);
      c.attack.target_items = a.value("target_items", c.attack.target_items);
      c.attack.horizons = a.value("horizons", c.attack.horizons);
      c.attack.eta = a.value("eta", c.attack.eta);
      c.attack.c1_values = a.value("c1_values", c.attack.c1_values);
      c.attack.iterations = a.value("iterations", c.attack.iterations);
      c.attack.step_size = a.value("step_size", c.attack.step_size);
      c.attack.n_grad = a.value("n_grad", c.attack.n_grad);
      if (a.contains("ranking")) c.attack.ranking = attacks::parse_ranking(a.at("ranking"));
      if (a.contains("statistic")) c.attack.statistic = attacks::parse_statistic(a.at("statistic"));
      if (a.contains("probabilistic")) c.attack.probabilistic = prob_from(a.at("probabilistic"));
    }
    c.sweep = doc.value("sweep", c.sweep);
    c.include_no_attack = doc.value("include_no_attack", c.include_no_attack);
    c.include_full_attack = doc.value("include_full_attack", c.include_full_attack);
    if (doc.contains("defenses")) {
      const json& d = doc.at("defenses");
      if (d.contains("kinds")) {
        c.defense.kinds.clear();
        for (const auto& k : d.at("kinds")) {
          c.defense.kinds.push_back(defenses::parse_defense(k.get<std::string>()));
        }
      }
      if (d.contains("augmentation")) {
        c.defense.augmentation = defenses::augment_config_from_json(d.at("augmentation"));
      }
      if (d.contains("smoothing")) {
        c.defense.smoothing = defenses::smoothing_config_from_json(d.at("smoothing"));
      }
      if (d.contains("minimax")) {
        c.defense.minimax = defenses::minimax_config_from_json(d.at("minimax"));
      }
    }
    if (doc.contains("evaluation")) {
      const json& e = doc.at("evaluation");
      c.evaluation.samples = e.value("samples", c.evaluation.samples);
      c.evaluation.target_scope = e.value("target_scope", c.evaluation.target_scope);
    }
    c.seed = doc.value("seed", c.seed);
    c.output_dir = doc.value("output_dir", c.output_dir.string());
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  if (c.attack.c1_values.empty()) throw std::invalid_argument("config: c1_values is empty");
  if (c.defense.kinds.empty()) throw std::invalid_argument("config: no defenses selected");
  if (c.evaluation.samples < 2) throw std::invalid_argument("config: need at least 2 samples");
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw std::invalid_argument("config " + path.string() + ": " + e.what());
  }
  return config_from_json(doc);
}

std::filesystem::path output_dir(const ExperimentConfig& cfg) {
  if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') return env;
  return cfg.output_dir;
}

}  // namespace tsadv::harness
