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

// Multi-hop QA examples, the closed vocabulary and the tokenizer.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"

namespace cfqa {

// Every failure surfaced by the library is an Error (or a subclass).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using TokenId = std::int32_t;
using TokenSeq = std::vector<TokenId>;

class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kUnk = 1;
  static constexpr TokenId kCls = 2;
  static constexpr TokenId kSep = 3;
  static constexpr TokenId kPara = 4;
  static constexpr TokenId kMask = 5;
  static constexpr int kNumSpecial = 6;

  // Only the special tokens.
  Vocabulary();
  // Specials must lead the list in canonical order; duplicates are rejected.
  explicit Vocabulary(std::vector<std::string> tokens);

  // Returns the id of `token`, inserting it when new.
  TokenId add(std::string_view token);
  std::optional<TokenId> find(std::string_view token) const;
  // UNK when absent.
  TokenId id(std::string_view token) const;
  const std::string& token(TokenId id) const;

  std::size_t size() const { return tokens_.size(); }
  bool is_special(TokenId id) const { return id >= 0 && id < kNumSpecial; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  // Stable 64-bit fingerprint of the token list (FNV-1a).
  std::uint64_t fingerprint() const;

  static const std::vector<std::string>& special_tokens();

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

// Lowercased split on whitespace; every ASCII punctuation character is its
// own word. Bytes >= 0x80 are treated as word characters.
std::vector<std::string> split_words(std::string_view text);
TokenSeq tokenize(std::string_view text, const Vocabulary& vocab);
std::string detokenize(std::span<const TokenId> ids, const Vocabulary& vocab);

struct Paragraph {
  std::string title;
  std::vector<TokenSeq> sentences;
  bool is_gold = false;

  std::size_t num_tokens() const;
  // Sentences concatenated in order.
  TokenSeq flat() const;
  // Token offset of sentence `j` in flat().
  std::size_t sentence_offset(std::size_t j) const;
};

enum class AnswerType { kSpan, kYes, kNo };

std::string_view to_string(AnswerType type);
AnswerType answer_type_from_string(std::string_view name);

// Inclusive token offsets into the flattened paragraph.
struct AnswerSpan {
  std::string title;
  std::size_t start = 0;
  std::size_t end = 0;

  friend bool operator==(const AnswerSpan&, const AnswerSpan&) = default;
};

using SentenceRef = std::pair<std::string, std::size_t>;

struct Example {
  std::string id;
  TokenSeq question;
  std::vector<Paragraph> paragraphs;
  std::set<std::string> gold_para_titles;
  std::set<SentenceRef> gold_sentence_ids;
  AnswerType answer_type = AnswerType::kSpan;
  std::optional<AnswerSpan> answer_span;
  TokenSeq answer_text;

  // Span questions whose span was removed (probe instances) carry no answer
  // label.
  bool has_answer_label() const {
    return answer_type != AnswerType::kSpan || answer_span.has_value();
  }
  std::optional<std::size_t> paragraph_index(std::string_view title) const;
};

// Checks the structural invariants. `expected_gold` is 2 for corpus
// examples and 1 for probe instances.
void validate_example(const Example& example, std::size_t vocab_size,
                      std::size_t expected_gold = 2);

// JSON Lines dataset I/O. One Example per line, field names as in Example.
nlohmann::json to_json(const Example& example);
Example example_from_json(const nlohmann::json& record);
void write_jsonl(const std::filesystem::path& path,
                 std::span<const Example> examples,
                 const nlohmann::json& meta = nullptr);
std::vector<Example> read_jsonl(const std::filesystem::path& path);

void write_vocabulary(const std::filesystem::path& path,
                      const Vocabulary& vocab);
Vocabulary read_vocabulary(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Synthetic 2-hop generator.

struct GenConfig {
  std::size_t num_examples = 1000;
  std::size_t num_paragraphs = 6;
  std::size_t entity_pool = 1200;
  std::size_t num_relations = 6;
  std::size_t num_attributes = 6;
  double yes_no_fraction = 0.2;
  // Probability that a distractor carries a sentence of the asked attribute
  // type, which defeats the question-type shortcut for that example.
  double hard_distractor_fraction = 0.3;
  std::uint64_t seed = 1;

  void validate() const;
  nlohmann::json to_json() const;
};

// Closed vocabulary shared by every dataset generated with the same pool
// and template counts (independent of the seed).
Vocabulary synthetic_vocabulary(const GenConfig& config);

struct SyntheticCorpus {
  Vocabulary vocab;
  std::vector<Example> examples;
};

SyntheticCorpus generate_dataset(const GenConfig& config);

// ---------------------------------------------------------------------------
// HotpotQA distractor-setting ingestion.

struct LoadReport {
  std::vector<Example> examples;
  std::size_t records = 0;
  std::size_t skipped_unlocatable = 0;
  // Not exactly 2 gold paragraphs, duplicate titles or empty paragraphs.
  std::size_t skipped_structure = 0;
  std::vector<std::string> skipped_ids;
};

// Parses a JSON array of HotpotQA records. New words are added to `vocab`
// when `grow_vocab` is set, otherwise they map to UNK.
LoadReport load_hotpotqa(const std::filesystem::path& path, Vocabulary& vocab,
                         bool grow_vocab = true);
LoadReport load_hotpotqa_text(std::string_view text, Vocabulary& vocab,
                              bool grow_vocab = true);

}  // namespace cfqa
