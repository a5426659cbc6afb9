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

#include "cfqa/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "cfqa/hash.hpp"

namespace cfqa {

using nlohmann::json;

const std::vector<std::string>& Vocabulary::special_tokens() {
  static const std::vector<std::string> kSpecials = {
      "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[PARA]", "[MASK]"};
  return kSpecials;
}

Vocabulary::Vocabulary() {
  for (const auto& t : special_tokens()) add(t);
}

Vocabulary::Vocabulary(std::vector<std::string> tokens) {
  const auto& specials = special_tokens();
  if (tokens.size() < specials.size() ||
      !std::equal(specials.begin(), specials.end(), tokens.begin())) {
    throw Error("vocabulary must start with the special tokens in order");
  }
  for (auto& t : tokens) {
    if (index_.count(t)) throw Error("duplicate vocabulary token: " + t);
    index_.emplace(t, static_cast<TokenId>(tokens_.size()));
    tokens_.push_back(std::move(t));
  }
}

TokenId Vocabulary::add(std::string_view token) {
  std::string key(token);
  auto it = index_.find(key);
  if (it != index_.end()) return it->second;
  auto id = static_cast<TokenId>(tokens_.size());
  index_.emplace(key, id);
  tokens_.push_back(std::move(key));
  return id;
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocabulary::id(std::string_view token) const {
  return find(token).value_or(kUnk);
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw Error("token id out of range: " + std::to_string(id));
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::uint64_t Vocabulary::fingerprint() const {
  Fnv1a h;
  for (const auto& t : tokens_) {
    h.update(t);
    h.update(std::string_view("\0", 1));
  }
  return h.digest();
}

namespace {

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

bool is_punct(unsigned char c) {
  return c < 0x80 && std::ispunct(c);
}

}  // namespace

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) words.push_back(std::move(current));
    current.clear();
  };
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (is_space(c)) {
      flush();
    } else if (is_punct(c)) {
      flush();
      words.emplace_back(1, ch);
    } else {
      current.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
    }
  }
  flush();
  return words;
}

TokenSeq tokenize(std::string_view text, const Vocabulary& vocab) {
  TokenSeq ids;
  for (const auto& w : split_words(text)) ids.push_back(vocab.id(w));
  return ids;
}

std::string detokenize(std::span<const TokenId> ids, const Vocabulary& vocab) {
  std::string out;
  for (TokenId id : ids) {
    if (!out.empty()) out.push_back(' ');
    out += vocab.token(id);
  }
  return out;
}

std::size_t Paragraph::num_tokens() const {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.size();
  return n;
}

TokenSeq Paragraph::flat() const {
  TokenSeq out;
  out.reserve(num_tokens());
  for (const auto& s : sentences) out.insert(out.end(), s.begin(), s.end());
  return out;
}

std::size_t Paragraph::sentence_offset(std::size_t j) const {
  std::size_t off = 0;
  for (std::size_t k = 0; k < j && k < sentences.size(); ++k) {
    off += sentences[k].size();
  }
  return off;
}

std::string_view to_string(AnswerType type) {
  switch (type) {
    case AnswerType::kSpan: return "span";
    case AnswerType::kYes: return "yes";
    case AnswerType::kNo: return "no";
  }
  return "span";
}

AnswerType answer_type_from_string(std::string_view name) {
  if (name == "span") return AnswerType::kSpan;
  if (name == "yes") return AnswerType::kYes;
  if (name == "no") return AnswerType::kNo;
  throw Error("unknown answer type: " + std::string(name));
}

std::optional<std::size_t> Example::paragraph_index(
    std::string_view title) const {
  for (std::size_t i = 0; i < paragraphs.size(); ++i) {
    if (paragraphs[i].title == title) return i;
  }
  return std::nullopt;
}

void validate_example(const Example& ex, std::size_t vocab_size,
                      std::size_t expected_gold) {
  auto fail = [&](const std::string& what) {
    throw Error("example " + ex.id + ": " + what);
  };
  if (ex.paragraphs.size() < expected_gold || ex.paragraphs.size() < 1) {
    fail("too few paragraphs");
  }
  if (expected_gold == 2 && ex.paragraphs.size() < 2) {
    fail("needs at least 2 paragraphs");
  }
  auto check_ids = [&](const TokenSeq& seq) {
    for (TokenId t : seq) {
      if (t < 0 || static_cast<std::size_t>(t) >= vocab_size) {
        fail("token id out of range");
      }
    }
  };
  check_ids(ex.question);
  std::set<std::string> titles;
  std::set<std::string> gold;
  for (const auto& p : ex.paragraphs) {
    if (!titles.insert(p.title).second) fail("duplicate title " + p.title);
    if (p.sentences.empty()) fail("paragraph without sentences: " + p.title);
    for (const auto& s : p.sentences) {
      if (s.empty()) fail("empty sentence in " + p.title);
      check_ids(s);
    }
    if (p.is_gold) gold.insert(p.title);
  }
  if (gold.size() != expected_gold) {
    fail("expected " + std::to_string(expected_gold) + " gold paragraphs, got " +
         std::to_string(gold.size()));
  }
  if (gold != ex.gold_para_titles) fail("gold_para_titles disagree with flags");
  for (const auto& [title, j] : ex.gold_sentence_ids) {
    auto idx = ex.paragraph_index(title);
    if (!idx) fail("supporting sentence references unknown title " + title);
    if (j >= ex.paragraphs[*idx].sentences.size()) {
      fail("supporting sentence index out of range in " + title);
    }
  }
  if (ex.answer_span) {
    if (ex.answer_type != AnswerType::kSpan) fail("yes/no answer with a span");
    auto idx = ex.paragraph_index(ex.answer_span->title);
    if (!idx || !ex.paragraphs[*idx].is_gold) {
      fail("answer span outside the gold paragraphs");
    }
    const auto n = ex.paragraphs[*idx].num_tokens();
    if (ex.answer_span->start > ex.answer_span->end ||
        ex.answer_span->end >= n) {
      fail("answer span offsets out of range");
    }
  } else if (ex.answer_type == AnswerType::kSpan && expected_gold == 2) {
    fail("span answer without a span");
  }
  check_ids(ex.answer_text);
}

json to_json(const Example& ex) {
  json paragraphs = json::array();
  for (const auto& p : ex.paragraphs) {
    paragraphs.push_back(
        {{"title", p.title}, {"sentences", p.sentences}, {"is_gold", p.is_gold}});
  }
  json sents = json::array();
  for (const auto& [t, j] : ex.gold_sentence_ids) sents.push_back({t, j});
  json record = {
      {"id", ex.id},
      {"question", ex.question},
      {"paragraphs", paragraphs},
      {"gold_para_titles", ex.gold_para_titles},
      {"gold_sentence_ids", sents},
      {"answer_type", to_string(ex.answer_type)},
      {"answer_span", nullptr},
      {"answer_text", ex.answer_text},
  };
  if (ex.answer_span) {
    record["answer_span"] = {{"title", ex.answer_span->title},
                             {"start", ex.answer_span->start},
                             {"end", ex.answer_span->end}};
  }
  return record;
}

Example example_from_json(const json& r) {
  Example ex;
  try {
    ex.id = r.at("id").get<std::string>();
    ex.question = r.at("question").get<TokenSeq>();
    for (const auto& p : r.at("paragraphs")) {
      Paragraph para;
      para.title = p.at("title").get<std::string>();
      para.sentences = p.at("sentences").get<std::vector<TokenSeq>>();
      para.is_gold = p.at("is_gold").get<bool>();
      ex.paragraphs.push_back(std::move(para));
    }
    ex.gold_para_titles = r.at("gold_para_titles").get<std::set<std::string>>();
    for (const auto& s : r.at("gold_sentence_ids")) {
      ex.gold_sentence_ids.emplace(s.at(0).get<std::string>(),
                                   s.at(1).get<std::size_t>());
    }
    ex.answer_type =
        answer_type_from_string(r.at("answer_type").get<std::string>());
    const auto& span = r.at("answer_span");
    if (!span.is_null()) {
      ex.answer_span = AnswerSpan{span.at("title").get<std::string>(),
                                  span.at("start").get<std::size_t>(),
                                  span.at("end").get<std::size_t>()};
    }
    ex.answer_text = r.at("answer_text").get<TokenSeq>();
  } catch (const json::exception& e) {
    std::string id = r.is_object() && r.contains("id") && r["id"].is_string()
                         ? r["id"].get<std::string>()
                         : std::string("<unknown>");
    throw Error("malformed example " + id + ": " + e.what());
  }
  return ex;
}

void write_jsonl(const std::filesystem::path& path,
                 std::span<const Example> examples, const json& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  if (!meta.is_null()) out << json{{"meta", meta}}.dump() << '\n';
  for (const auto& ex : examples) out << to_json(ex).dump() << '\n';
  if (!out) throw Error("write failed: " + path.string());
}

std::vector<Example> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::vector<Example> examples;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": " +
                  e.what());
    }
    if (record.contains("meta")) continue;
    examples.push_back(example_from_json(record));
  }
  return examples;
}

void write_vocabulary(const std::filesystem::path& path,
                      const Vocabulary& vocab) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << json(vocab.tokens()).dump() << '\n';
}

Vocabulary read_vocabulary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  try {
    return Vocabulary(json::parse(in).get<std::vector<std::string>>());
  } catch (const json::exception& e) {
    throw Error("malformed vocabulary " + path.string() + ": " + e.what());
  }
}

}  // namespace cfqa
