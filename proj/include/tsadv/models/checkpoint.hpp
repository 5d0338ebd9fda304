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

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "tsadv/models/types.hpp"

namespace tsadv::models {

inline constexpr int kCheckpointSchema = 1;

struct Checkpoint {
  ForecasterParams params;
  // Free-form description of the defense that produced the model, e.g.
  // {"kind": "smoothing", "sigma": 0.1}.
  std::optional<nlohmann::json> defense;
};

nlohmann::json to_json(const Checkpoint& ckpt);
// Throws std::invalid_argument on a malformed document.
Checkpoint checkpoint_from_json(const nlohmann::json& doc);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace tsadv::models
