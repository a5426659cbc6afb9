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

// Brute-force reference scorer, written without the metrics module, and
// random prediction sets to feed both.

#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <string>
#include <vector>

#include "cfqa/metrics.hpp"
#include "cfqa/probe.hpp"
#include "cfqa/random.hpp"

namespace cfqa::testing {

struct OracleCell {
  double em_orig = 0, em_dire = 0, f1_orig = 0, f1_dire = 0;
};

struct OracleScore {
  double em = 0, f1 = 0, p = 0, r = 0;
};

inline std::vector<std::string> oracle_words(const std::string& text) {
  std::string cleaned;
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (std::ispunct(u)) continue;
    cleaned += std::isspace(u) ? ' ' : static_cast<char>(std::tolower(u));
  }
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < cleaned.size()) {
    while (i < cleaned.size() && cleaned[i] == ' ') ++i;
    std::size_t j = i;
    while (j < cleaned.size() && cleaned[j] != ' ') ++j;
    const auto w = cleaned.substr(i, j - i);
    if (!w.empty() && w != "a" && w != "an" && w != "the") words.push_back(w);
    i = j;
  }
  return words;
}

inline OracleScore oracle_answer(const std::string& pred, const std::string& gold) {
  auto pw = oracle_words(pred);
  auto gw = oracle_words(gold);
  OracleScore s;
  s.em = pw == gw ? 1 : 0;
  auto joined = [](const std::vector<std::string>& w) {
    std::string out;
    for (const auto& x : w) out += (out.empty() ? "" : " ") + x;
    return out;
  };
  const auto pj = joined(pw), gj = joined(gw);
  for (const char* lit : {"yes", "no", "noanswer"}) {
    if ((pj == lit || gj == lit) && pj != gj) return s;
  }
  if (pw.empty() && gw.empty()) return {s.em, 1, 1, 1};
  std::sort(pw.begin(), pw.end());
  std::sort(gw.begin(), gw.end());
  std::vector<std::string> common;
  std::set_intersection(pw.begin(), pw.end(), gw.begin(), gw.end(),
                        std::back_inserter(common));
  if (common.empty()) return s;
  s.p = static_cast<double>(common.size()) / pw.size();
  s.r = static_cast<double>(common.size()) / gw.size();
  s.f1 = 2 * s.p * s.r / (s.p + s.r);
  return s;
}

template <typename T>
OracleScore oracle_set(const std::set<T>& pred, const std::set<T>& gold) {
  std::vector<T> p(pred.begin(), pred.end()), g(gold.begin(), gold.end());
  OracleScore s;
  s.em = p == g ? 1 : 0;
  double hits = 0;
  for (const auto& x : p) hits += std::count(g.begin(), g.end(), x);
  if (p.empty() && g.empty()) {
    s.p = s.r = 1;
  } else {
    s.p = p.empty() ? 0 : hits / p.size();
    s.r = g.empty() ? 0 : hits / g.size();
  }
  s.f1 = s.p + s.r == 0 ? 0 : 2 * s.p * s.r / (s.p + s.r);
  return s;
}

inline OracleScore oracle_joint(const OracleScore& a, const OracleScore& b) {
  OracleScore s;
  s.em = a.em * b.em;
  s.p = a.p * b.p;
  s.r = a.r * b.r;
  s.f1 = s.p + s.r == 0 ? 0 : 2 * s.p * s.r / (s.p + s.r);
  return s;
}

// Per metric (Ans, Supp_p, Supp_s, joints); nullopt when not applicable.
inline std::array<std::optional<OracleScore>, 5> oracle_instance(
    const Example& gold, const Prediction& pred, const Vocabulary& vocab) {
  std::array<std::optional<OracleScore>, 5> out;
  out[1] = oracle_set(pred.supp_paragraphs, gold.gold_para_titles);
  out[2] = oracle_set(pred.supp_sentences, gold.gold_sentence_ids);
  const bool labeled = gold.answer_type != AnswerType::kSpan || gold.answer_span;
  if (labeled) {
    std::string text;
    for (auto t : gold.answer_text) text += (text.empty() ? "" : " ") + vocab.token(t);
    out[0] = oracle_answer(pred.answer, text);
    out[3] = oracle_joint(*out[0], *out[1]);
    out[4] = oracle_joint(*out[0], *out[2]);
  }
  return out;
}

inline std::array<OracleCell, 5> oracle_report(
    const std::vector<Example>& dataset, const std::vector<Prediction>& preds,
    const std::vector<ProbePair>& probe, const std::vector<Prediction>& probe_preds,
    const Vocabulary& vocab) {
  std::map<std::string, Prediction> by_id;
  for (const auto& p : preds) by_id[p.id] = p;
  for (const auto& p : probe_preds) by_id[p.id] = p;
  std::array<OracleCell, 5> cells{};
  std::array<double, 5> n{};
  for (const auto& ex : dataset) {
    const auto s = oracle_instance(ex, by_id.at(ex.id), vocab);
    for (int m = 0; m < 5; ++m) {
      if (!s[m]) continue;
      cells[m].em_orig += s[m]->em;
      cells[m].f1_orig += s[m]->f1;
      n[m] += 1;
    }
  }
  for (int m = 0; m < 5; ++m) {
    if (n[m] > 0) {
      cells[m].em_orig /= n[m];
      cells[m].f1_orig /= n[m];
    }
  }
  n = {};
  for (const auto& pair : probe) {
    auto a = oracle_instance(pair.instance_a, by_id.at(pair.instance_a.id), vocab);
    auto b = oracle_instance(pair.instance_b, by_id.at(pair.instance_b.id), vocab);
    // Joint metrics of an unlabeled instance use its supporting score.
    for (auto* s : {&a, &b}) {
      if (!(*s)[3]) (*s)[3] = (*s)[1];
      if (!(*s)[4]) (*s)[4] = (*s)[2];
    }
    for (int m = 0; m < 5; ++m) {
      std::vector<OracleScore> present;
      if (a[m]) present.push_back(*a[m]);
      if (b[m]) present.push_back(*b[m]);
      if (present.empty()) continue;
      double em = 1, f1 = 1;
      for (const auto& s : present) {
        em = std::min(em, s.em);
        f1 = std::min(f1, s.f1);
      }
      cells[m].em_dire += em;
      cells[m].f1_dire += f1;
      n[m] += 1;
    }
  }
  for (int m = 0; m < 5; ++m) {
    if (n[m] > 0) {
      cells[m].em_dire /= n[m];
      cells[m].f1_dire /= n[m];
    }
  }
  return cells;
}

// A prediction for `ex` mixing right, partial and wrong parts.
inline Prediction random_prediction(const Example& ex, const Vocabulary& vocab, Rng& rng) {
  Prediction p;
  p.id = ex.id;
  std::vector<std::string> gold_words;
  for (auto t : ex.answer_text) gold_words.push_back(vocab.token(t));
  const auto choice = uniform_int(rng, 0, 6);
  if (choice == 0) {
    p.answer = "yes";
  } else if (choice == 1) {
    p.answer = "No.";
  } else if (choice == 2 || gold_words.empty()) {
    p.answer = "The " + vocab.token(static_cast<TokenId>(
                            uniform_int<std::size_t>(rng, Vocabulary::kNumSpecial,
                                                     vocab.size() - 1)));
  } else {
    for (const auto& w : gold_words) {
      if (uniform01(rng) < 0.8) p.answer += (p.answer.empty() ? "" : " ") + w;
    }
    if (uniform01(rng) < 0.3) p.answer += " extra";
    if (uniform01(rng) < 0.3) p.answer = "  A " + p.answer + "!";
  }
  if (ex.answer_type == AnswerType::kYes && uniform01(rng) < 0.5) p.answer = "yes";
  for (const auto& para : ex.paragraphs) {
    const double keep = para.is_gold ? 0.8 : 0.2;
    if (uniform01(rng) < keep) p.supp_paragraphs.insert(para.title);
    for (std::size_t j = 0; j < para.sentences.size(); ++j) {
      const bool gold = ex.gold_sentence_ids.count({para.title, j}) > 0;
      if (uniform01(rng) < (gold ? 0.8 : 0.1)) p.supp_sentences.emplace(para.title, j);
    }
  }
  return p;
}

// The original prediction restricted to the paragraphs an instance keeps.
inline Prediction restrict_prediction(const Prediction& original, const Example& instance) {
  Prediction p = original;
  p.id = instance.id;
  std::set<std::string> titles;
  for (const auto& para : instance.paragraphs) titles.insert(para.title);
  std::erase_if(p.supp_paragraphs, [&](const auto& t) { return !titles.count(t); });
  std::erase_if(p.supp_sentences, [&](const auto& s) { return !titles.count(s.first); });
  return p;
}

}  // namespace cfqa::testing
