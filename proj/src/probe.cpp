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

#include "cfqa/probe.hpp"

#include <fstream>
#include <map>

namespace cfqa {

using nlohmann::json;

std::string probe_instance_id(const std::string& origin_id, char slot) {
  return origin_id + "#" + slot;
}

namespace {

Example keep_gold(const Example& ex, const std::string& kept_title,
                  const std::string& dropped_title, char slot) {
  Example out;
  out.id = probe_instance_id(ex.id, slot);
  out.question = ex.question;
  for (const auto& p : ex.paragraphs) {
    if (p.title != dropped_title) out.paragraphs.push_back(p);
  }
  out.gold_para_titles = {kept_title};
  for (const auto& ref : ex.gold_sentence_ids) {
    if (ref.first == kept_title) out.gold_sentence_ids.insert(ref);
  }
  out.answer_type = ex.answer_type;
  if (ex.answer_type != AnswerType::kSpan ||
      (ex.answer_span && ex.answer_span->title == kept_title)) {
    out.answer_span = ex.answer_span;
    out.answer_text = ex.answer_text;
  }
  return out;
}

}  // namespace

ProbePair make_probe_pair(const Example& example) {
  std::vector<std::string> gold;
  for (const auto& p : example.paragraphs) {
    if (p.is_gold) gold.push_back(p.title);
  }
  if (gold.size() != 2 || example.gold_para_titles.size() != 2) {
    throw Error("probe: example " + example.id +
                " does not have exactly 2 gold paragraphs");
  }
  ProbePair pair;
  pair.origin_id = example.id;
  pair.instance_a = keep_gold(example, gold[0], gold[1], 'a');
  pair.instance_b = keep_gold(example, gold[1], gold[0], 'b');
  return pair;
}

std::vector<ProbePair> build_probe(std::span<const Example> dataset) {
  std::vector<ProbePair> pairs;
  pairs.reserve(dataset.size());
  for (const auto& ex : dataset) pairs.push_back(make_probe_pair(ex));
  return pairs;
}

void write_probe(const std::filesystem::path& path,
                 std::span<const ProbePair> pairs, const json& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  if (!meta.is_null()) out << json{{"meta", meta}}.dump() << '\n';
  for (const auto& pair : pairs) {
    for (const auto* inst : {&pair.instance_a, &pair.instance_b}) {
      json record = to_json(*inst);
      record["pair_id"] = pair.origin_id;
      record["slot"] = inst == &pair.instance_a ? "a" : "b";
      out << record.dump() << '\n';
    }
  }
  if (!out) throw Error("write failed: " + path.string());
}

std::vector<ProbePair> read_probe(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::vector<std::string> order;
  std::map<std::string, std::pair<std::optional<Example>, std::optional<Example>>> slots;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (record.contains("meta")) continue;
    if (!record.contains("pair_id") || !record.contains("slot")) {
      throw Error(path.string() + ":" + std::to_string(lineno) +
                  ": probe record without pair_id/slot");
    }
    const auto pair_id = record["pair_id"].get<std::string>();
    const auto slot = record["slot"].get<std::string>();
    auto [it, fresh] = slots.try_emplace(pair_id);
    if (fresh) order.push_back(pair_id);
    auto& target = slot == "a" ? it->second.first : it->second.second;
    if ((slot != "a" && slot != "b") || target) {
      throw Error("probe: bad or repeated slot '" + slot + "' for " + pair_id);
    }
    target = example_from_json(record);
  }
  std::vector<ProbePair> pairs;
  for (const auto& id : order) {
    auto& [a, b] = slots[id];
    if (!a || !b) throw Error("probe: unpaired instance for " + id);
    pairs.push_back({id, std::move(*a), std::move(*b)});
  }
  return pairs;
}

}  // namespace cfqa
