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

// Answer / supporting-fact EM and F1, joint metrics, pairwise dire
// aggregation and the original-vs-dire report.

#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>

#include "cfqa/corpus.hpp"
#include "cfqa/predict.hpp"
#include "cfqa/probe.hpp"

namespace cfqa {

struct Scores {
  double em = 0.0;
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

// Lowercase, drop punctuation and the articles a/an/the, squeeze spaces.
std::string normalize_answer(std::string_view text);

Scores answer_scores(std::string_view pred, std::string_view gold);

template <typename T>
Scores supp_scores(const std::set<T>& pred, const std::set<T>& gold) {
  Scores s;
  std::size_t tp = 0;
  for (const auto& x : pred) tp += gold.count(x);
  s.em = pred == gold ? 1.0 : 0.0;
  s.precision = pred.empty() ? 0.0 : static_cast<double>(tp) / pred.size();
  s.recall = gold.empty() ? 0.0 : static_cast<double>(tp) / gold.size();
  if (pred.empty() && gold.empty()) s.precision = s.recall = 1.0;
  s.f1 = s.precision + s.recall > 0.0
             ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
             : 0.0;
  return s;
}

Scores joint_scores(const Scores& ans, const Scores& supp);

double dire_aggregate(double score_a, double score_b);

enum Metric : int { kAns = 0, kSuppP, kSuppS, kAnsSuppP, kAnsSuppS };
inline constexpr int kNumMetrics = 5;
std::string_view metric_name(int metric);

// Scores of one instance. `ans` and the joints are absent for instances
// without an answer label.
struct InstanceScores {
  std::optional<Scores> ans;
  Scores supp_p;
  Scores supp_s;
  std::optional<Scores> joint_p;
  std::optional<Scores> joint_s;

  // The value a metric contributes to a dire pair: joint metrics of an
  // instance without answer label fall back to their supporting component.
  std::optional<Scores> for_dire(int metric) const;
  std::optional<Scores> get(int metric) const;
};

InstanceScores score_instance(const Example& gold, const Prediction& pred,
                              const Vocabulary& vocab);

struct MetricCell {
  double original = 0.0;
  double dire = 0.0;
  double real = 0.0;  // original - dire
};

struct MetricReport {
  std::array<MetricCell, kNumMetrics> em{};
  std::array<MetricCell, kNumMetrics> f1{};
  std::size_t num_examples = 0;
  std::size_t num_pairs = 0;

  nlohmann::json to_json() const;
  std::string to_table() const;
};

inline constexpr const char* kReportSchema = "cfqa-report/1";

// Original scores on `dataset`, dire scores over `probe`. Every id needs
// exactly one prediction; missing or duplicate ids are errors.
MetricReport evaluate(std::span<const Example> dataset,
                      std::span<const Prediction> predictions,
                      std::span<const ProbePair> probe,
                      std::span<const Prediction> probe_predictions,
                      const Vocabulary& vocab);

// Writes `<stem>.json` and `<stem>.txt`.
void emit_report(const MetricReport& report, const std::filesystem::path& stem,
                 const nlohmann::json& meta = nullptr);

}  // namespace cfqa
