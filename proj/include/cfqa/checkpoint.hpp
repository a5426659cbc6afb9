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

// JSON checkpoint container: format tag, training config, vocabulary
// fingerprint, the counterfactual bias and every named parameter tensor.

#pragma once

#include <filesystem>

#include "cfqa/effects.hpp"
#include "cfqa/model.hpp"
#include "cfqa/trainer.hpp"

namespace cfqa {

inline constexpr const char* kCheckpointFormat = "cfqa-checkpoint/1";

struct Checkpoint {
  TrainConfig config;
  Model model;
  CounterfactualBias bias;
  std::uint64_t vocab_fingerprint = 0;
  nlohmann::json meta;
};

nlohmann::json checkpoint_to_json(const Model& model,
                                  const CounterfactualBias& bias,
                                  const TrainConfig& config,
                                  const Vocabulary& vocab,
                                  const nlohmann::json& meta = nullptr);
// `vocab`, when given, must match the recorded fingerprint.
Checkpoint checkpoint_from_json(const nlohmann::json& j,
                                const Vocabulary* vocab = nullptr);

void save_checkpoint(const std::filesystem::path& path, const Model& model,
                     const CounterfactualBias& bias, const TrainConfig& config,
                     const Vocabulary& vocab,
                     const nlohmann::json& meta = nullptr);
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const Vocabulary* vocab = nullptr);

}  // namespace cfqa
