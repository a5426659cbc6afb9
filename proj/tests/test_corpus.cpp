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
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "cfqa/corpus.hpp"
#include "test_util.hpp"

namespace cfqa {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path temp_path(const std::string& name) {
  auto dir = fs::temp_directory_path() / "cfqa_test_corpus";
  fs::create_directories(dir);
  return dir / name;
}

bool contains(const TokenSeq& seq, TokenId t) {
  return std::find(seq.begin(), seq.end(), t) != seq.end();
}

TEST_CASE("vocabulary keeps specials first and ids dense") {
  Vocabulary v;
  CHECK(v.size() == Vocabulary::kNumSpecial);
  for (int i = 0; i < Vocabulary::kNumSpecial; ++i) {
    CHECK(v.id(Vocabulary::special_tokens()[i]) == i);
  }
  const auto a = v.add("apple");
  CHECK(v.add("apple") == a);
  CHECK(v.token(a) == "apple");
  CHECK(v.id("pear") == Vocabulary::kUnk);
  for (std::size_t i = 0; i < v.size(); ++i) {
    CHECK(v.id(v.token(static_cast<TokenId>(i))) == static_cast<TokenId>(i));
  }
  CHECK_THROWS_AS(Vocabulary({"[PAD]", "x"}), Error);
  auto tokens = v.tokens();
  tokens.push_back("apple");
  CHECK_THROWS_AS(Vocabulary{tokens}, Error);
}

TEST_CASE("vocabulary fingerprint depends on the token list") {
  Vocabulary a, b;
  a.add("x");
  b.add("x");
  CHECK(a.fingerprint() == b.fingerprint());
  b.add("y");
  CHECK(a.fingerprint() != b.fingerprint());
}

TEST_CASE("tokenize splits on whitespace and punctuation") {
  Vocabulary v;
  for (auto w : {"from", "2005", "to", "2008"}) v.add(w);
  CHECK(tokenize("", v).empty());
  const auto ids = tokenize("From 2005 to 2008", v);
  REQUIRE(ids.size() == 4);
  for (auto t : ids) {
    CHECK(t >= 0);
    CHECK(static_cast<std::size_t>(t) < v.size());
    CHECK(t != Vocabulary::kUnk);
  }
  CHECK(split_words("Hello,world!") == std::vector<std::string>{"hello", ",", "world", "!"});
  CHECK(tokenize("unknown", v) == TokenSeq{Vocabulary::kUnk});
}

TEST_CASE("detokenize inverts tokenize over the whole synthetic vocabulary") {
  const auto vocab = synthetic_vocabulary(GenConfig{});
  for (std::size_t i = Vocabulary::kNumSpecial; i < vocab.size(); ++i) {
    const auto& w = vocab.token(static_cast<TokenId>(i));
    CHECK(detokenize(tokenize(w, vocab), vocab) == w);
  }
}

TEST_CASE("synthetic vocabulary is a closed set of modest size") {
  const auto vocab = synthetic_vocabulary(GenConfig{});
  CHECK(vocab.size() > 1000);
  CHECK(vocab.size() < 2500);
}

TEST_CASE("generation is byte-identical for a fixed seed") {
  GenConfig config;
  config.num_examples = 100;
  config.seed = 7;
  const auto a = generate_dataset(config);
  const auto b = generate_dataset(config);
  write_jsonl(temp_path("a.jsonl"), a.examples);
  write_jsonl(temp_path("b.jsonl"), b.examples);
  CHECK(slurp(temp_path("a.jsonl")) == slurp(temp_path("b.jsonl")));
  config.seed = 8;
  write_jsonl(temp_path("c.jsonl"), generate_dataset(config).examples);
  CHECK(slurp(temp_path("a.jsonl")) != slurp(temp_path("c.jsonl")));
}

TEST_CASE("every generated example has exactly two gold paragraphs") {
  GenConfig config;
  config.num_examples = 300;
  const auto corpus = generate_dataset(config);
  for (const auto& ex : corpus.examples) {
    CHECK(std::count_if(ex.paragraphs.begin(), ex.paragraphs.end(),
                        [](const Paragraph& p) { return p.is_gold; }) == 2);
    CHECK(ex.paragraphs.size() == config.num_paragraphs);
    CHECK_NOTHROW(validate_example(ex, corpus.vocab.size()));
  }
}

TEST_CASE("answer spans lie inside a gold paragraph and match the answer text") {
  GenConfig config;
  config.num_examples = 2000;
  config.num_paragraphs = 6;
  const auto corpus = generate_dataset(config);
  std::size_t spans = 0;
  for (const auto& ex : corpus.examples) {
    if (ex.answer_type != AnswerType::kSpan) {
      CHECK_FALSE(ex.answer_span.has_value());
      continue;
    }
    REQUIRE(ex.answer_span.has_value());
    const auto idx = ex.paragraph_index(ex.answer_span->title);
    REQUIRE(idx.has_value());
    const auto& p = ex.paragraphs[*idx];
    CHECK(p.is_gold);
    const auto flat = p.flat();
    REQUIRE(ex.answer_span->end < flat.size());
    const TokenSeq text(flat.begin() + static_cast<long>(ex.answer_span->start),
                        flat.begin() + static_cast<long>(ex.answer_span->end) + 1);
    CHECK(text == ex.answer_text);
    ++spans;
  }
  CHECK(spans > 1000);
}

TEST_CASE("the bridge entity links the gold paragraphs and no distractor") {
  GenConfig config;
  config.num_examples = 500;
  const auto corpus = generate_dataset(config);
  for (const auto& ex : corpus.examples) {
    std::vector<const Paragraph*> gold;
    for (const auto& p : ex.paragraphs) {
      if (p.is_gold) gold.push_back(&p);
    }
    REQUIRE(gold.size() == 2);
    // The bridge paragraph is titled by the entity the other one mentions.
    int bridges = 0;
    for (int k = 0; k < 2; ++k) {
      const auto bridge = corpus.vocab.id(gold[k]->title);
      const auto other = gold[1 - k]->flat();
      if (!contains(other, bridge)) continue;
      ++bridges;
      for (const auto& p : ex.paragraphs) {
        if (!p.is_gold) CHECK_FALSE(contains(p.flat(), bridge));
      }
    }
    CHECK(bridges == 1);
  }
}

TEST_CASE("distractors carry answer-type-compatible spans") {
  GenConfig config;
  config.num_examples = 400;
  config.hard_distractor_fraction = 1.0;
  config.yes_no_fraction = 0.0;
  const auto corpus = generate_dataset(config);
  for (const auto& ex : corpus.examples) {
    const auto& span = *ex.answer_span;
    const auto& b = ex.paragraphs[*ex.paragraph_index(span.title)];
    // Sentence holding the answer, and the answer offsets inside it.
    std::size_t j = 0;
    while (b.sentence_offset(j) + b.sentences[j].size() <= span.start) ++j;
    const auto& sentence = b.sentences[j];
    const auto base = b.sentence_offset(j);
    // Same template: equal tokens everywhere except the entity and values.
    auto same_template = [&](const TokenSeq& other) {
      if (other.size() != sentence.size()) return false;
      for (std::size_t k = 1; k < other.size(); ++k) {
        const bool value = base + k >= span.start && base + k <= span.end;
        const bool year_range = sentence.size() == 7 && (k == 3 || k == 5);
        if (!value && !year_range && other[k] != sentence[k]) return false;
      }
      return true;
    };
    bool found = false;
    for (const auto& p : ex.paragraphs) {
      if (p.is_gold) continue;
      for (const auto& s : p.sentences) found = found || same_template(s);
    }
    CHECK(found);
  }
}

TEST_CASE("generator rejects invalid configurations") {
  GenConfig c;
  c.num_paragraphs = 1;
  CHECK_THROWS_AS(generate_dataset(c), Error);
  c = GenConfig{};
  c.yes_no_fraction = 1.5;
  CHECK_THROWS_AS(generate_dataset(c), Error);
  c = GenConfig{};
  c.num_examples = 0;
  CHECK_THROWS_AS(generate_dataset(c), Error);
  c = GenConfig{};
  c.entity_pool = 5;
  CHECK_THROWS_AS(generate_dataset(c), Error);
}

TEST_CASE("jsonl round trip preserves examples and skips the meta line") {
  Vocabulary v;
  const auto ex = testing::toy_example(v);
  const auto path = temp_path("rt.jsonl");
  write_jsonl(path, std::span<const Example>(&ex, 1), json{{"k", 1}});
  const auto back = read_jsonl(path);
  REQUIRE(back.size() == 1);
  CHECK(to_json(back[0]) == to_json(ex));

  write_vocabulary(temp_path("v.json"), v);
  CHECK(read_vocabulary(temp_path("v.json")).tokens() == v.tokens());
}

json hotpot_record(const std::string& id, const std::string& answer) {
  return {{"_id", id},
          {"question", "Which year did the band form ?"},
          {"answer", answer},
          {"supporting_facts", json::array({json::array({"Band", 0}),
                                            json::array({"Label", 1})})},
          {"context",
           json::array(
               {json::array({"Other", {"Nothing here .", "Still nothing ."}}),
                json::array({"Band", {"The band formed in 1999 .", "They toured ."}}),
                json::array({"Label", {"The label is old .",
                                       "It signed the band in 1999 ."}})})}};
}

TEST_CASE("hotpotqa ingestion infers answer types and locates spans") {
  Vocabulary v;
  json data = json::array({hotpot_record("r1", "yes"), hotpot_record("r2", "1999")});
  const auto report = load_hotpotqa_text(data.dump(), v);
  REQUIRE(report.examples.size() == 2);
  const auto& yes = report.examples[0];
  CHECK(yes.answer_type == AnswerType::kYes);
  CHECK_FALSE(yes.answer_span.has_value());
  const auto& span = report.examples[1];
  CHECK(span.answer_type == AnswerType::kSpan);
  REQUIRE(span.answer_span.has_value());
  // "1999" occurs in both gold paragraphs; the first in context order wins.
  CHECK(span.answer_span->title == "Band");
  CHECK(span.answer_span->start == 4);
  CHECK(span.gold_para_titles == std::set<std::string>{"Band", "Label"});
  CHECK(span.gold_sentence_ids.count({"Label", 1}) == 1);
}

TEST_CASE("hotpotqa ingestion reports unusable records") {
  Vocabulary v;
  json data = json::array({hotpot_record("r1", "2042"), hotpot_record("r2", "1999")});
  const auto report = load_hotpotqa_text(data.dump(), v);
  CHECK(report.records == 2);
  CHECK(report.skipped_unlocatable == 1);
  CHECK(report.examples.size() == 1);
  CHECK(report.skipped_ids == std::vector<std::string>{"r1"});

  Vocabulary v2;
  CHECK_THROWS_AS(load_hotpotqa_text("[{", v2), Error);
  json missing = hotpot_record("bad-7", "1999");
  missing.erase("question");
  try {
    load_hotpotqa_text(json::array({missing}).dump(), v2);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("bad-7") != std::string::npos);
  }
}

}  // namespace
}  // namespace cfqa
