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

#include "doctest.h"
#include "cfqa/probe.hpp"
#include "test_util.hpp"

namespace cfqa {
namespace {

namespace fs = std::filesystem;

TEST_CASE("a probe pair splits the gold paragraphs") {
  Vocabulary v;
  const auto ex = testing::toy_example(v);
  const auto pair = make_probe_pair(ex);
  CHECK(pair.origin_id == "toy-0");
  CHECK(pair.instance_a.id == "toy-0#a");
  CHECK(pair.instance_b.id == "toy-0#b");
  CHECK(pair.instance_a.gold_para_titles == std::set<std::string>{"alpha"});
  CHECK(pair.instance_b.gold_para_titles == std::set<std::string>{"beta"});
  CHECK(pair.instance_a.paragraphs.size() == 3);
  CHECK(pair.instance_a.gold_sentence_ids == std::set<SentenceRef>{{"alpha", 0}});
  // The answer lives in "beta": instance a has no span label.
  CHECK_FALSE(pair.instance_a.has_answer_label());
  CHECK(pair.instance_a.answer_type == AnswerType::kSpan);
  CHECK(pair.instance_b.answer_span == ex.answer_span);
  CHECK(pair.instance_b.answer_text == ex.answer_text);
  CHECK(pair.instance_a.question == ex.question);
}

TEST_CASE("yes/no answers stay on both instances") {
  Vocabulary v;
  auto ex = testing::toy_example(v);
  ex.answer_type = AnswerType::kNo;
  ex.answer_span.reset();
  ex.answer_text = testing::words(v, "no");
  const auto pair = make_probe_pair(ex);
  CHECK(pair.instance_a.has_answer_label());
  CHECK(pair.instance_b.has_answer_label());
}

TEST_CASE("probe instances reconstruct their origin") {
  GenConfig gc;
  gc.num_examples = 200;
  const auto corpus = generate_dataset(gc);
  const auto probe = build_probe(corpus.examples);
  REQUIRE(probe.size() == corpus.examples.size());
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const auto& ex = corpus.examples[i];
    const auto& a = probe[i].instance_a;
    const auto& b = probe[i].instance_b;
    CHECK(a.paragraphs.size() == ex.paragraphs.size() - 1);
    std::set<std::string> gold = a.gold_para_titles;
    gold.insert(b.gold_para_titles.begin(), b.gold_para_titles.end());
    CHECK(gold == ex.gold_para_titles);
    std::set<SentenceRef> sents = a.gold_sentence_ids;
    sents.insert(b.gold_sentence_ids.begin(), b.gold_sentence_ids.end());
    CHECK(sents == ex.gold_sentence_ids);
    CHECK(a.has_answer_label() + b.has_answer_label() >=
          (ex.answer_type == AnswerType::kSpan ? 1 : 2));
  }
}

TEST_CASE("examples without two gold paragraphs are rejected") {
  Vocabulary v;
  auto ex = testing::toy_example(v);
  ex.paragraphs[1].is_gold = false;
  CHECK_THROWS_AS(make_probe_pair(ex), Error);
}

TEST_CASE("probe files round trip and reject orphans") {
  GenConfig gc;
  gc.num_examples = 20;
  const auto corpus = generate_dataset(gc);
  const auto probe = build_probe(corpus.examples);
  const auto dir = fs::temp_directory_path() / "cfqa_test_probe";
  fs::create_directories(dir);
  write_probe(dir / "p.jsonl", probe, nlohmann::json{{"k", 1}});
  const auto back = read_probe(dir / "p.jsonl");
  REQUIRE(back.size() == probe.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].origin_id == probe[i].origin_id);
    CHECK(to_json(back[i].instance_a) == to_json(probe[i].instance_a));
    CHECK(to_json(back[i].instance_b) == to_json(probe[i].instance_b));
  }
  std::ifstream in(dir / "p.jsonl");
  std::string line, all;
  std::getline(in, line);
  all = line + "\n";
  std::getline(in, line);
  all += line + "\n";
  std::ofstream(dir / "orphan.jsonl") << all;
  CHECK_THROWS_AS(read_probe(dir / "orphan.jsonl"), Error);
}

}  // namespace
}  // namespace cfqa
