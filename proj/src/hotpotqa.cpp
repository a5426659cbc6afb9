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

#include <algorithm>
#include <fstream>
#include <sstream>

#include "cfqa/corpus.hpp"

namespace cfqa {
namespace {

using nlohmann::json;

TokenSeq encode(std::string_view text, Vocabulary& vocab, bool grow) {
  TokenSeq ids;
  for (const auto& w : split_words(text)) {
    ids.push_back(grow ? vocab.add(w) : vocab.id(w));
  }
  return ids;
}

const json& field(const json& record, const char* name, const std::string& id) {
  if (!record.is_object() || !record.contains(name)) {
    throw Error("record " + id + ": missing field '" + name + "'");
  }
  return record[name];
}

// First whole-token occurrence of `needle` in `hay`.
std::optional<std::size_t> find_tokens(const TokenSeq& hay,
                                       const TokenSeq& needle) {
  if (needle.empty() || needle.size() > hay.size()) return std::nullopt;
  for (std::size_t i = 0; i + needle.size() <= hay.size(); ++i) {
    if (std::equal(needle.begin(), needle.end(), hay.begin() + static_cast<long>(i))) {
      return i;
    }
  }
  return std::nullopt;
}

}  // namespace

LoadReport load_hotpotqa_text(std::string_view text, Vocabulary& vocab,
                              bool grow_vocab) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("malformed HotpotQA JSON: ") + e.what());
  }
  if (!root.is_array()) throw Error("HotpotQA input must be a JSON array");

  LoadReport report;
  std::vector<Example> examples;
  for (const auto& record : root) {
    ++report.records;
    std::string id = "<record " + std::to_string(report.records - 1) + ">";
    if (record.is_object() && record.contains("_id") &&
        record["_id"].is_string()) {
      id = record["_id"].get<std::string>();
    }
    Example ex;
    std::string answer;
    try {
      ex.id = field(record, "_id", id).get<std::string>();
      ex.question = encode(field(record, "question", id).get<std::string>(),
                           vocab, grow_vocab);
      std::set<std::string> supporting_titles;
      for (const auto& sf : field(record, "supporting_facts", id)) {
        auto title = sf.at(0).get<std::string>();
        auto j = sf.at(1).get<std::size_t>();
        supporting_titles.insert(title);
        ex.gold_sentence_ids.emplace(title, j);
      }
      for (const auto& entry : field(record, "context", id)) {
        Paragraph p;
        p.title = entry.at(0).get<std::string>();
        for (const auto& s : entry.at(1)) {
          auto ids = encode(s.get<std::string>(), vocab, grow_vocab);
          // Sentences that tokenize to nothing keep their index as one UNK.
          if (ids.empty()) ids.push_back(Vocabulary::kUnk);
          p.sentences.push_back(std::move(ids));
        }
        p.is_gold = supporting_titles.count(p.title) > 0;
        ex.paragraphs.push_back(std::move(p));
      }
      answer = field(record, "answer", id).get<std::string>();
    } catch (const json::exception& e) {
      throw Error("record " + id + ": " + e.what());
    }

    bool usable = true;
    std::set<std::string> titles;
    std::set<std::string> gold;
    for (const auto& p : ex.paragraphs) {
      if (p.sentences.empty() || !titles.insert(p.title).second) usable = false;
      if (p.is_gold) gold.insert(p.title);
    }
    // Supporting facts may point past the sentence list in noisy records.
    std::erase_if(ex.gold_sentence_ids, [&](const SentenceRef& ref) {
      auto idx = ex.paragraph_index(ref.first);
      return !idx || ref.second >= ex.paragraphs[*idx].sentences.size();
    });
    if (!usable || gold.size() != 2 || ex.paragraphs.size() < 2) {
      ++report.skipped_structure;
      report.skipped_ids.push_back(ex.id);
      continue;
    }
    ex.gold_para_titles = gold;

    const auto words = split_words(answer);
    if (words.size() == 1 && (words[0] == "yes" || words[0] == "no")) {
      ex.answer_type = words[0] == "yes" ? AnswerType::kYes : AnswerType::kNo;
      ex.answer_text = {grow_vocab ? vocab.add(words[0]) : vocab.id(words[0])};
    } else {
      ex.answer_type = AnswerType::kSpan;
      ex.answer_text = encode(answer, vocab, grow_vocab);
      for (const auto& p : ex.paragraphs) {
        if (!p.is_gold) continue;
        if (auto pos = find_tokens(p.flat(), ex.answer_text)) {
          ex.answer_span =
              AnswerSpan{p.title, *pos, *pos + ex.answer_text.size() - 1};
          break;
        }
      }
      if (!ex.answer_span) {
        ++report.skipped_unlocatable;
        report.skipped_ids.push_back(ex.id);
        continue;
      }
    }
    validate_example(ex, vocab.size());
    examples.push_back(std::move(ex));
  }
  report.examples = std::move(examples);
  return report;
}

LoadReport load_hotpotqa(const std::filesystem::path& path, Vocabulary& vocab,
                         bool grow_vocab) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return load_hotpotqa_text(buffer.str(), vocab, grow_vocab);
}

}  // namespace cfqa
