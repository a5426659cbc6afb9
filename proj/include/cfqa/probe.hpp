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

// Probe pairs for disconnected-reasoning scores: every example is split into
// two instances, each keeping one of its two gold paragraphs and all of its
// distractors.

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cfqa/corpus.hpp"

namespace cfqa {

struct ProbePair {
  std::string origin_id;
  // Keeps the first gold paragraph (context order); instance_b the second.
  Example instance_a;
  Example instance_b;
};

// "<origin>#a" / "<origin>#b".
std::string probe_instance_id(const std::string& origin_id, char slot);

// The instance whose gold paragraph lacks the answer span keeps the span
// answer type but no span and no answer text.
ProbePair make_probe_pair(const Example& example);
std::vector<ProbePair> build_probe(std::span<const Example> dataset);

// JSON Lines, corpus record layout plus "pair_id" and "slot" fields.
void write_probe(const std::filesystem::path& path,
                 std::span<const ProbePair> pairs,
                 const nlohmann::json& meta = nullptr);
// Throws on an instance without its partner.
std::vector<ProbePair> read_probe(const std::filesystem::path& path);

}  // namespace cfqa
