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

// Templated 2-hop pseudo-language.
//
// Paragraph A (first hop):  "<subject> works for <bridge> ."
// Paragraph B (second hop): "<bridge> was born in <city> ."
// Question:                 "where was the employer of <subject> born ?"
//
// Distractors talk about unrelated entities with the same templates. Unless
// the example is "hard", no distractor carries the attribute type the
// question asks about, so the question type alone points at B.

#include <algorithm>
#include <array>
#include <string>
#include <unordered_set>

#include "cfqa/corpus.hpp"
#include "cfqa/random.hpp"

namespace cfqa {
namespace {

struct Relation {
  const char* verb;
  const char* noun;
};

constexpr std::array<Relation, 6> kRelations = {{
    {"works for", "employer"},
    {"is married to", "spouse"},
    {"studied under", "teacher"},
    {"was founded by", "founder"},
    {"is managed by", "manager"},
    {"is a friend of", "friend"},
}};

enum class ValueKind { kYearRange, kCity, kInstrument, kColor, kYear };

struct Attribute {
  ValueKind kind;
  // "{e}" entity, "{v}" value ("{v1} to {v2}" for year ranges).
  const char* sentence;
  const char* question;
  const char* yes_no;
};

constexpr std::array<Attribute, 6> kAttributes = {{
    {ValueKind::kYearRange, "{e} served from {v1} to {v2} .",
     "until when did the {r} of {s} serve ?",
     "did the {r} of {s} serve until {v} ?"},
    {ValueKind::kCity, "{e} was born in {v} .",
     "where was the {r} of {s} born ?", "was the {r} of {s} born in {v} ?"},
    {ValueKind::kInstrument, "{e} plays the {v} .",
     "which instrument does the {r} of {s} play ?",
     "does the {r} of {s} play the {v} ?"},
    {ValueKind::kColor, "{e} likes the color {v} .",
     "which color does the {r} of {s} like ?",
     "does the {r} of {s} like the color {v} ?"},
    {ValueKind::kYear, "{e} was founded in {v} .",
     "when was the {r} of {s} founded ?",
     "was the {r} of {s} founded in {v} ?"},
    {ValueKind::kCity, "{e} lives in {v} .",
     "where does the {r} of {s} live ?",
     "does the {r} of {s} live in {v} ?"},
}};

// Year-range questions alternatively ask for the whole range.
constexpr const char* kRangeQuestion =
    "during which years did the {r} of {s} serve ?";

constexpr std::array<const char*, 12> kColors = {
    "red",   "blue",  "green", "yellow", "purple", "orange",
    "black", "white", "grey",  "pink",   "brown",  "teal"};
constexpr std::array<const char*, 12> kInstruments = {
    "piano",   "violin", "cello", "flute", "guitar", "drums",
    "harp",    "oboe",   "trumpet", "banjo", "organ", "viola"};
constexpr int kFirstYear = 1900;
constexpr int kLastYear = 2029;
constexpr std::size_t kNumCities = 60;

constexpr const char* kConsonants = "bdfgklmnprstvz";
constexpr const char* kVowels = "aeiou";

std::vector<std::string> syllables() {
  std::vector<std::string> out;
  for (const char* c = kConsonants; *c; ++c) {
    for (const char* v = kVowels; *v; ++v) out.push_back({*c, *v});
  }
  return out;
}

std::vector<std::string> template_words() {
  std::vector<std::string> words = {"yes", "no"};
  auto add_text = [&](std::string_view text) {
    for (auto& w : split_words(text)) words.push_back(w);
  };
  for (const auto& r : kRelations) {
    add_text(r.verb);
    add_text(r.noun);
  }
  for (const auto& a : kAttributes) {
    add_text(a.sentence);
    add_text(a.question);
    add_text(a.yes_no);
  }
  add_text(kRangeQuestion);
  // Drop template placeholders, which split into "{", "x", "}".
  std::erase_if(words, [](const std::string& w) {
    return w == "{" || w == "}" || w == "e" || w == "v" || w == "v1" ||
           w == "v2" || w == "r" || w == "s";
  });
  return words;
}

struct Lexicon {
  std::vector<std::string> entities;
  std::vector<std::string> cities;
};

Lexicon build_lexicon(const GenConfig& config, const Vocabulary& reserved) {
  const auto syl = syllables();
  Lexicon lex;
  // Fixed permutation so entity names carry no alphabetical pattern.
  Rng shuffle_rng(0x5eedULL);
  std::vector<std::string> two;
  for (const auto& a : syl) {
    for (const auto& b : syl) two.push_back(a + b);
  }
  std::shuffle(two.begin(), two.end(), shuffle_rng);
  for (const auto& name : two) {
    if (lex.entities.size() == config.entity_pool) break;
    if (!reserved.find(name)) lex.entities.push_back(name);
  }
  if (lex.entities.size() < config.entity_pool) {
    throw Error("entity pool larger than the name space");
  }
  std::vector<std::string> three;
  for (std::size_t k = 0; three.size() < kNumCities; ++k) {
    three.push_back(syl[(k * 7) % syl.size()] + syl[(k * 13 + 3) % syl.size()] +
                    "ton");
  }
  lex.cities = std::move(three);
  return lex;
}

std::string year(int y) { return std::to_string(y); }

// Everything except entity and city names.
Vocabulary base_vocabulary() {
  Vocabulary vocab;
  auto words = template_words();
  std::sort(words.begin(), words.end());
  words.erase(std::unique(words.begin(), words.end()), words.end());
  for (const auto& w : words) vocab.add(w);
  for (int y = kFirstYear; y <= kLastYear; ++y) vocab.add(year(y));
  for (const char* c : kColors) vocab.add(c);
  for (const char* i : kInstruments) vocab.add(i);
  return vocab;
}

struct Generator {
  const GenConfig& config;
  const Vocabulary& vocab;
  const Lexicon& lex;

  TokenSeq render(std::string_view pattern,
                  const std::vector<std::pair<std::string, std::string>>& slots)
      const {
    std::string text(pattern);
    for (const auto& [key, value] : slots) {
      const std::string needle = "{" + key + "}";
      for (auto pos = text.find(needle); pos != std::string::npos;
           pos = text.find(needle, pos + value.size())) {
        text.replace(pos, needle.size(), value);
      }
    }
    TokenSeq ids = tokenize(text, vocab);
    for (TokenId t : ids) {
      if (t == Vocabulary::kUnk) throw Error("template produced OOV: " + text);
    }
    return ids;
  }

  // Value strings for one attribute instance (two for year ranges).
  std::vector<std::string> draw_value(ValueKind kind, Rng& rng) const {
    switch (kind) {
      case ValueKind::kYearRange: {
        int y1 = uniform_int(rng, kFirstYear, kLastYear - 10);
        int y2 = y1 + uniform_int(rng, 1, 9);
        return {year(y1), year(y2)};
      }
      case ValueKind::kCity:
        return {lex.cities[uniform_int<std::size_t>(rng, 0, lex.cities.size() - 1)]};
      case ValueKind::kInstrument:
        return {kInstruments[uniform_int<std::size_t>(rng, 0, kInstruments.size() - 1)]};
      case ValueKind::kColor:
        return {kColors[uniform_int<std::size_t>(rng, 0, kColors.size() - 1)]};
      case ValueKind::kYear:
        return {year(uniform_int(rng, kFirstYear, kLastYear))};
    }
    return {};
  }

  TokenSeq attribute_sentence(std::size_t type, const std::string& entity,
                              const std::vector<std::string>& value) const {
    const auto& attr = kAttributes[type];
    if (attr.kind == ValueKind::kYearRange) {
      return render(attr.sentence,
                    {{"e", entity}, {"v1", value[0]}, {"v2", value[1]}});
    }
    return render(attr.sentence, {{"e", entity}, {"v", value[0]}});
  }

  TokenSeq relation_sentence(std::size_t rel, const std::string& subject,
                             const std::string& object) const {
    return render(std::string("{e} ") + kRelations[rel].verb + " {o} .",
                  {{"e", subject}, {"o", object}});
  }

  std::size_t other_attribute(std::size_t avoid, Rng& rng) const {
    if (config.num_attributes == 1) return avoid;
    std::size_t a = uniform_int<std::size_t>(rng, 0, config.num_attributes - 2);
    return a >= avoid ? a + 1 : a;
  }

  Example make(std::size_t index) const {
    Rng rng(mix_seed(config.seed, index));
    Example ex;
    ex.id = "syn-" + std::to_string(config.seed) + "-" + std::to_string(index);

    const std::size_t type =
        uniform_int<std::size_t>(rng, 0, config.num_attributes - 1);
    const std::size_t rel =
        uniform_int<std::size_t>(rng, 0, config.num_relations - 1);
    const bool yes_no = uniform01(rng) < config.yes_no_fraction;
    const bool hard = uniform01(rng) < config.hard_distractor_fraction;

    // Distinct entities: subject, bridge, then distractor titles, then
    // relation objects for distractors.
    const std::size_t num_distractors = config.num_paragraphs - 2;
    std::unordered_set<std::size_t> used;
    auto fresh = [&] {
      for (;;) {
        auto e = uniform_int<std::size_t>(rng, 0, lex.entities.size() - 1);
        if (used.insert(e).second) return lex.entities[e];
      }
    };
    const std::string subject = fresh();
    const std::string bridge = fresh();
    std::vector<std::string> distractor_titles;
    for (std::size_t k = 0; k < num_distractors; ++k) {
      distractor_titles.push_back(fresh());
    }

    const auto& attr = kAttributes[type];
    const auto value = draw_value(attr.kind, rng);

    // First hop.
    Paragraph a{subject, {}, true};
    std::size_t a_support = 0;
    a.sentences.push_back(relation_sentence(rel, subject, bridge));
    if (uniform01(rng) < 0.5) {
      auto filler_type = other_attribute(type, rng);
      auto filler = attribute_sentence(
          filler_type, subject, draw_value(kAttributes[filler_type].kind, rng));
      if (uniform01(rng) < 0.5) {
        a.sentences.insert(a.sentences.begin(), std::move(filler));
        a_support = 1;
      } else {
        a.sentences.push_back(std::move(filler));
      }
    }

    // Second hop.
    Paragraph b{bridge, {}, true};
    std::size_t b_support = 0;
    b.sentences.push_back(attribute_sentence(type, bridge, value));
    if (uniform01(rng) < 0.5) {
      auto filler_type = other_attribute(type, rng);
      auto filler = attribute_sentence(
          filler_type, bridge, draw_value(kAttributes[filler_type].kind, rng));
      if (uniform01(rng) < 0.5) {
        b.sentences.insert(b.sentences.begin(), std::move(filler));
        b_support = 1;
      } else {
        b.sentences.push_back(std::move(filler));
      }
    }

    std::vector<Paragraph> paragraphs;
    const std::size_t hard_slot =
        hard && num_distractors > 0
            ? uniform_int<std::size_t>(rng, 0, num_distractors - 1)
            : num_distractors;
    for (std::size_t k = 0; k < num_distractors; ++k) {
      const auto& x = distractor_titles[k];
      Paragraph d{x, {}, false};
      if (uniform01(rng) < 0.5) {
        auto r = uniform_int<std::size_t>(rng, 0, config.num_relations - 1);
        d.sentences.push_back(relation_sentence(r, x, fresh()));
      } else {
        auto t = other_attribute(type, rng);
        d.sentences.push_back(
            attribute_sentence(t, x, draw_value(kAttributes[t].kind, rng)));
      }
      if (uniform01(rng) < 0.5) {
        auto t = other_attribute(type, rng);
        d.sentences.push_back(
            attribute_sentence(t, x, draw_value(kAttributes[t].kind, rng)));
      }
      if (k == hard_slot) {
        auto decoy = draw_value(attr.kind, rng);
        auto pos = uniform_int<std::size_t>(rng, 0, d.sentences.size());
        d.sentences.insert(d.sentences.begin() + static_cast<long>(pos),
                           attribute_sentence(type, x, decoy));
      }
      paragraphs.push_back(std::move(d));
    }

    // Question and answer.
    const std::string rel_noun = kRelations[rel].noun;
    if (yes_no) {
      const bool truth = uniform01(rng) < 0.5;
      std::string asked = attr.kind == ValueKind::kYearRange ? value[1] : value[0];
      if (!truth) {
        for (;;) {
          auto other = draw_value(attr.kind, rng);
          const auto& cand =
              attr.kind == ValueKind::kYearRange ? other[1] : other[0];
          if (cand != asked) {
            asked = cand;
            break;
          }
        }
      }
      ex.question =
          render(attr.yes_no, {{"r", rel_noun}, {"s", subject}, {"v", asked}});
      ex.answer_type = truth ? AnswerType::kYes : AnswerType::kNo;
      ex.answer_text = {vocab.id(truth ? "yes" : "no")};
    } else {
      const auto& support = b.sentences[b_support];
      // Offset of the value inside the supporting sentence.
      const auto base = b.sentence_offset(b_support);
      std::size_t start = 0;
      std::size_t end = 0;
      const char* question = attr.question;
      if (attr.kind == ValueKind::kYearRange) {
        // "<e> served from <v1> to <v2> ."
        if (uniform01(rng) < 0.5) {
          question = kRangeQuestion;
          start = base + 2;
          end = base + 5;
        } else {
          start = end = base + 5;
        }
      } else {
        // Every other template ends in "<value> .".
        start = end = base + support.size() - 2;
      }
      ex.question = render(question, {{"r", rel_noun}, {"s", subject}});
      ex.answer_type = AnswerType::kSpan;
      ex.answer_span = AnswerSpan{bridge, start, end};
      const auto flat = b.flat();
      ex.answer_text.assign(flat.begin() + static_cast<long>(start),
                            flat.begin() + static_cast<long>(end) + 1);
    }

    ex.gold_para_titles = {subject, bridge};
    ex.gold_sentence_ids = {{subject, a_support}, {bridge, b_support}};
    paragraphs.push_back(std::move(a));
    paragraphs.push_back(std::move(b));
    std::shuffle(paragraphs.begin(), paragraphs.end(), rng);
    ex.paragraphs = std::move(paragraphs);
    return ex;
  }
};

}  // namespace

void GenConfig::validate() const {
  if (num_examples == 0) throw Error("num_examples must be positive");
  if (num_paragraphs < 2) throw Error("num_paragraphs must be at least 2");
  if (num_relations < 1 || num_relations > kRelations.size()) {
    throw Error("num_relations must be in [1, " +
                std::to_string(kRelations.size()) + "]");
  }
  if (num_attributes < 2 || num_attributes > kAttributes.size()) {
    throw Error("num_attributes must be in [2, " +
                std::to_string(kAttributes.size()) + "]");
  }
  // Subject, bridge, distractor titles and one relation object each.
  if (entity_pool < 2 + 2 * (num_paragraphs - 2) + 1) {
    throw Error("entity_pool too small for num_paragraphs");
  }
  auto fraction = [](double f, const char* name) {
    if (!(f >= 0.0 && f <= 1.0)) {
      throw Error(std::string(name) + " must be in [0, 1]");
    }
  };
  fraction(yes_no_fraction, "yes_no_fraction");
  fraction(hard_distractor_fraction, "hard_distractor_fraction");
}

nlohmann::json GenConfig::to_json() const {
  return {{"num_examples", num_examples},
          {"num_paragraphs", num_paragraphs},
          {"entity_pool", entity_pool},
          {"num_relations", num_relations},
          {"num_attributes", num_attributes},
          {"yes_no_fraction", yes_no_fraction},
          {"hard_distractor_fraction", hard_distractor_fraction},
          {"seed", seed}};
}

Vocabulary synthetic_vocabulary(const GenConfig& config) {
  Vocabulary vocab = base_vocabulary();
  const auto lex = build_lexicon(config, vocab);
  for (const auto& c : lex.cities) vocab.add(c);
  for (const auto& e : lex.entities) vocab.add(e);
  return vocab;
}

SyntheticCorpus generate_dataset(const GenConfig& config) {
  config.validate();
  SyntheticCorpus corpus;
  corpus.vocab = synthetic_vocabulary(config);
  const auto lex = build_lexicon(config, base_vocabulary());
  Generator gen{config, corpus.vocab, lex};
  corpus.examples.reserve(config.num_examples);
  for (std::size_t k = 0; k < config.num_examples; ++k) {
    corpus.examples.push_back(gen.make(k));
  }
  return corpus;
}

}  // namespace cfqa
