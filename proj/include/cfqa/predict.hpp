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

// Decoding of head outputs into answer / supporting-fact predictions and the
// predictions file format.

#pragma once

#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "cfqa/effects.hpp"
#include "cfqa/model.hpp"

namespace cfqa {

struct Prediction {
  std::string id;
  std::string answer;
  std::set<std::string> supp_paragraphs;
  std::set<SentenceRef> supp_sentences;
  int type = kTypeSpan;

  friend bool operator==(const Prediction&, const Prediction&) = default;
};

inline constexpr std::size_t kMaxAnswerTokens = 16;

// Paragraph / sentence selected when its class-1 logit exceeds class 0.
// Yes/no types answer literally, otherwise the best span start <= end
// inside one paragraph, at most kMaxAnswerTokens long.
Prediction decode(const Example& example, const Layout& layout,
                  const HeadOutputs& scores, const Vocabulary& vocab);

// Inference on the factual pass only, with C subtracted.
Prediction predict(const Model& model, const CounterfactualBias& bias,
                   const Example& example, const Vocabulary& vocab);
std::vector<Prediction> predict_all(const Model& model,
                                    const CounterfactualBias& bias,
                                    std::span<const Example> examples,
                                    const Vocabulary& vocab,
                                    std::size_t threads = 0);

// {id: {answer, supp_paragraphs, supp_sentences, type}} plus a reserved
// "__meta__" entry describing the producer.
nlohmann::json predictions_to_json(std::span<const Prediction> predictions,
                                   const nlohmann::json& meta = nullptr);
// Rejects duplicate ids.
std::vector<Prediction> predictions_from_text(std::string_view text);
void write_predictions(const std::filesystem::path& path,
                       std::span<const Prediction> predictions,
                       const nlohmann::json& meta = nullptr);
std::vector<Prediction> read_predictions(const std::filesystem::path& path);

std::string_view type_name(int type_class);
int type_from_name(std::string_view name);

}  // namespace cfqa
