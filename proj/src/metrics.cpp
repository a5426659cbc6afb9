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

#include "cfqa/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <unordered_map>

namespace cfqa {

using nlohmann::json;

namespace {

constexpr std::string_view kMetricNames[kNumMetrics] = {
    "Ans", "Supp_p", "Supp_s", "Ans+Supp_p", "Ans+Supp_s"};

std::vector<std::string> answer_tokens(std::string_view normalized) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : normalized) {
    if (c == ' ') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

bool is_literal(const std::string& s) {
  return s == "yes" || s == "no" || s == "noanswer";
}

std::unordered_map<std::string, const Prediction*> index_predictions(
    std::span<const Prediction> predictions, const char* what) {
  std::unordered_map<std::string, const Prediction*> index;
  std::vector<std::string> duplicates;
  for (const auto& p : predictions) {
    if (!index.emplace(p.id, &p).second) duplicates.push_back(p.id);
  }
  if (!duplicates.empty()) {
    std::string msg = std::string("duplicate ") + what + " prediction ids:";
    for (const auto& id : duplicates) msg += " " + id;
    throw Error(msg);
  }
  return index;
}

void require_ids(const std::unordered_map<std::string, const Prediction*>& index,
                 const std::vector<std::string>& ids, const char* what) {
  std::vector<std::string> missing;
  std::set<std::string> expected(ids.begin(), ids.end());
  for (const auto& id : ids) {
    if (!index.count(id)) missing.push_back(id);
  }
  std::vector<std::string> unknown;
  for (const auto& [id, p] : index) {
    if (!expected.count(id)) unknown.push_back(id);
  }
  std::sort(unknown.begin(), unknown.end());
  auto listing = [](const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t k = 0; k < v.size() && k < 20; ++k) s += " " + v[k];
    if (v.size() > 20) s += " ... (" + std::to_string(v.size()) + " total)";
    return s;
  };
  if (!missing.empty()) {
    throw Error(std::string("missing ") + what + " predictions for ids:" + listing(missing));
  }
  if (!unknown.empty()) {
    throw Error(std::string("unknown ") + what + " prediction ids:" + listing(unknown));
  }
}

}  // namespace

std::string normalize_answer(std::string_view text) {
  std::string stripped;
  for (unsigned char c : text) {
    if (std::ispunct(c)) continue;
    stripped.push_back(static_cast<char>(std::tolower(c)));
  }
  for (auto& c : stripped) {
    if (std::isspace(static_cast<unsigned char>(c))) c = ' ';
  }
  std::string out;
  for (auto& w : answer_tokens(stripped)) {
    if (w == "a" || w == "an" || w == "the") continue;
    if (!out.empty()) out.push_back(' ');
    out += w;
  }
  return out;
}

Scores answer_scores(std::string_view pred, std::string_view gold) {
  const auto p = normalize_answer(pred);
  const auto g = normalize_answer(gold);
  Scores s;
  s.em = p == g ? 1.0 : 0.0;
  if ((is_literal(p) || is_literal(g)) && p != g) return s;
  const auto pt = answer_tokens(p);
  const auto gt = answer_tokens(g);
  if (pt.empty() && gt.empty()) {
    s.f1 = s.precision = s.recall = 1.0;
    return s;
  }
  std::map<std::string, int> bag;
  for (const auto& t : gt) ++bag[t];
  std::size_t common = 0;
  for (const auto& t : pt) {
    auto it = bag.find(t);
    if (it != bag.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  if (common == 0) return s;
  s.precision = static_cast<double>(common) / static_cast<double>(pt.size());
  s.recall = static_cast<double>(common) / static_cast<double>(gt.size());
  s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

Scores joint_scores(const Scores& ans, const Scores& supp) {
  Scores s;
  s.em = ans.em * supp.em;
  s.precision = ans.precision * supp.precision;
  s.recall = ans.recall * supp.recall;
  s.f1 = s.precision + s.recall > 0.0
             ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
             : 0.0;
  return s;
}

double dire_aggregate(double score_a, double score_b) {
  return std::min(score_a, score_b);
}

std::string_view metric_name(int metric) {
  if (metric < 0 || metric >= kNumMetrics) throw Error("bad metric index");
  return kMetricNames[metric];
}

std::optional<Scores> InstanceScores::get(int metric) const {
  switch (metric) {
    case kAns: return ans;
    case kSuppP: return supp_p;
    case kSuppS: return supp_s;
    case kAnsSuppP: return joint_p;
    case kAnsSuppS: return joint_s;
  }
  throw Error("bad metric index");
}

std::optional<Scores> InstanceScores::for_dire(int metric) const {
  if (metric == kAnsSuppP && !joint_p) return supp_p;
  if (metric == kAnsSuppS && !joint_s) return supp_s;
  return get(metric);
}

InstanceScores score_instance(const Example& gold, const Prediction& pred,
                              const Vocabulary& vocab) {
  InstanceScores s;
  s.supp_p = supp_scores(pred.supp_paragraphs, gold.gold_para_titles);
  s.supp_s = supp_scores(pred.supp_sentences, gold.gold_sentence_ids);
  if (gold.has_answer_label()) {
    s.ans = answer_scores(pred.answer, detokenize(gold.answer_text, vocab));
    s.joint_p = joint_scores(*s.ans, s.supp_p);
    s.joint_s = joint_scores(*s.ans, s.supp_s);
  }
  return s;
}

MetricReport evaluate(std::span<const Example> dataset,
                      std::span<const Prediction> predictions,
                      std::span<const ProbePair> probe,
                      std::span<const Prediction> probe_predictions,
                      const Vocabulary& vocab) {
  const auto original = index_predictions(predictions, "original");
  const auto probed = index_predictions(probe_predictions, "probe");
  std::vector<std::string> ids;
  for (const auto& ex : dataset) ids.push_back(ex.id);
  require_ids(original, ids, "original");
  ids.clear();
  for (const auto& pair : probe) {
    ids.push_back(pair.instance_a.id);
    ids.push_back(pair.instance_b.id);
  }
  require_ids(probed, ids, "probe");

  MetricReport report;
  report.num_examples = dataset.size();
  report.num_pairs = probe.size();
  std::array<std::size_t, kNumMetrics> counted{};
  for (const auto& ex : dataset) {
    const auto s = score_instance(ex, *original.at(ex.id), vocab);
    for (int m = 0; m < kNumMetrics; ++m) {
      if (auto v = s.get(m)) {
        report.em[m].original += v->em;
        report.f1[m].original += v->f1;
        ++counted[m];
      }
    }
  }
  for (int m = 0; m < kNumMetrics; ++m) {
    if (counted[m]) {
      report.em[m].original /= static_cast<double>(counted[m]);
      report.f1[m].original /= static_cast<double>(counted[m]);
    }
  }

  counted = {};
  for (const auto& pair : probe) {
    const auto a = score_instance(pair.instance_a, *probed.at(pair.instance_a.id), vocab);
    const auto b = score_instance(pair.instance_b, *probed.at(pair.instance_b.id), vocab);
    for (int m = 0; m < kNumMetrics; ++m) {
      const auto va = a.for_dire(m);
      const auto vb = b.for_dire(m);
      if (!va && !vb) continue;
      double em, f1;
      if (va && vb) {
        em = dire_aggregate(va->em, vb->em);
        f1 = dire_aggregate(va->f1, vb->f1);
      } else {
        const auto& v = va ? *va : *vb;
        em = v.em;
        f1 = v.f1;
      }
      report.em[m].dire += em;
      report.f1[m].dire += f1;
      ++counted[m];
    }
  }
  for (int m = 0; m < kNumMetrics; ++m) {
    if (counted[m]) {
      report.em[m].dire /= static_cast<double>(counted[m]);
      report.f1[m].dire /= static_cast<double>(counted[m]);
    }
    report.em[m].real = report.em[m].original - report.em[m].dire;
    report.f1[m].real = report.f1[m].original - report.f1[m].dire;
  }
  return report;
}

json MetricReport::to_json() const {
  json metrics = json::object();
  for (int m = 0; m < kNumMetrics; ++m) {
    auto cell = [](const MetricCell& c) {
      return json{{"original", c.original}, {"dire", c.dire}, {"real", c.real}};
    };
    metrics[std::string(metric_name(m))] = {{"em", cell(em[m])}, {"f1", cell(f1[m])}};
  }
  return {{"schema", kReportSchema},
          {"num_examples", num_examples},
          {"num_pairs", num_pairs},
          {"metrics", metrics}};
}

std::string MetricReport::to_table() const {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "%-12s %8s %8s %8s %8s %8s %8s\n", "metric",
                "EM orig", "EM dire", "EM real", "F1 orig", "F1 dire", "F1 real");
  out += line;
  for (int m = 0; m < kNumMetrics; ++m) {
    std::snprintf(line, sizeof line,
                  "%-12s %8.4f %8.4f %8.4f %8.4f %8.4f %8.4f\n",
                  std::string(metric_name(m)).c_str(), em[m].original,
                  em[m].dire, em[m].real, f1[m].original, f1[m].dire,
                  f1[m].real);
    out += line;
  }
  std::snprintf(line, sizeof line, "examples %zu, probe pairs %zu\n",
                num_examples, num_pairs);
  out += line;
  return out;
}

void emit_report(const MetricReport& report, const std::filesystem::path& stem,
                 const json& meta) {
  json j = report.to_json();
  if (!meta.is_null()) j["meta"] = meta;
  auto json_path = stem;
  json_path += ".json";
  auto text_path = stem;
  text_path += ".txt";
  {
    std::ofstream out(json_path, std::ios::binary);
    if (!out) throw Error("cannot write " + json_path.string());
    out << j.dump(2) << '\n';
  }
  std::ofstream out(text_path, std::ios::binary);
  if (!out) throw Error("cannot write " + text_path.string());
  out << report.to_table();
}

}  // namespace cfqa
