// Copyright 2026 The cfqa Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Plain-text key=value configuration files and config fingerprints.

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "cfqa/corpus.hpp"
#include "cfqa/trainer.hpp"

namespace cfqa {

using KeyValues = std::map<std::string, std::string>;

// One `key = value` per line; blank lines and lines starting with '#' are
// ignored. Malformed lines and repeated keys are errors.
KeyValues parse_key_values(std::string_view text);
KeyValues read_key_values(const std::filesystem::path& path);

// Applies the recognized keys; any other key is an error.
void apply_config(const KeyValues& values, GenConfig& config);
void apply_config(const KeyValues& values, TrainConfig& config);

// FNV-1a of the compact JSON dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& config);

}  // namespace cfqa
