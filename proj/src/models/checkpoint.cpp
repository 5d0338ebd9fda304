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

#include "tsadv/models/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

namespace tsadv::models {

using nlohmann::json;

json to_json(const Checkpoint& ckpt) {
  const ForecasterParams& p = ckpt.params;
  json doc;
  doc["schema"] = kCheckpointSchema;
  doc["kind"] = std::string(model_kind_name(p.kind));
  doc["dim"] = p.dim;
  doc["lags"] = p.lags;
  doc["hidden"] = p.hidden;
  doc["rank"] = p.rank;
  doc["scale"] = p.scale;
  json tensors = json::object();
  for (const auto& [name, t] : p.tensors) {
    tensors[name] = {{"shape", t.shape()}, {"data", t.values()}};
  }
  doc["tensors"] = std::move(tensors);
  if (ckpt.defense) doc["defense"] = *ckpt.defense;
  return doc;
}

Checkpoint checkpoint_from_json(const json& doc) {
  try {
    if (doc.at("schema").get<int>() != kCheckpointSchema) {
      throw std::invalid_argument("unsupported checkpoint schema");
    }
    Checkpoint ckpt;
    ForecasterParams& p = ckpt.params;
    p.kind = parse_model_kind(doc.at("kind").get<std::string>());
    p.dim = doc.at("dim").get<std::size_t>();
    p.lags = doc.at("lags").get<std::vector<std::size_t>>();
    p.hidden = doc.at("hidden").get<std::size_t>();
    p.rank = doc.at("rank").get<std::size_t>();
    p.scale = doc.at("scale").get<std::vector<double>>();
    for (const auto& [name, entry] : doc.at("tensors").items()) {
      p.tensors.emplace(name, Tensor(entry.at("shape").get<Shape>(),
                                     entry.at("data").get<std::vector<double>>()));
    }
    p.validate();
    if (doc.contains("defense")) ckpt.defense = doc.at("defense");
    return ckpt;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << to_json(ckpt).dump(1) << '\n';
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw std::invalid_argument("checkpoint " + path.string() + " is not valid JSON: " + e.what());
  }
  return checkpoint_from_json(doc);
}

}  // namespace tsadv::models
