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


#include "cfqa/factorize.hpp"

namespace cfqa {

std::vector<FactoredTriple> factor_example(const Example& example) {
  std::vector<FactoredTriple> triples;
  triples.reserve(example.paragraphs.size());
  for (std::size_t i = 0; i < example.paragraphs.size(); ++i) {
    FactoredTriple t;
    t.example_id = example.id;
    t.index = i;
    t.question = example.question;
    t.focal = example.paragraphs[i];
    for (std::size_t k = 0; k < example.paragraphs.size(); ++k) {
      if (k != i) t.context.push_back(example.paragraphs[k]);
    }
    t.supporting = t.focal.is_gold;
    t.answer_type = example.answer_type;
    t.answer_span = example.answer_span;
    triples.push_back(std::move(t));
  }
  return triples;
}

std::vector<Paragraph> reassemble(const FactoredTriple& triple) {
  std::vector<Paragraph> out = triple.context;
  const auto at = std::min(triple.index, out.size());
  out.insert(out.begin() + static_cast<long>(at), triple.focal);
  return out;
}

CounterfactualTriple sample_cf_context(std::span<const FactoredTriple> batch,
                                       std::size_t i, Rng& rng) {
  if (i >= batch.size()) throw Error("sample_cf_context: index out of range");
  std::vector<std::size_t> candidates;
  for (std::size_t j = 0; j < batch.size(); ++j) {
    if (j != i && batch[j].example_id != batch[i].example_id) {
      candidates.push_back(j);
    }
  }
  if (candidates.empty()) {
    throw Error(
        "sample_cf_context: batch has no triple from another example; enlarge "
        "the batch to at least 2 examples or sample c* from the dataset");
  }
  const auto j = candidates[uniform_int<std::size_t>(rng, 0, candidates.size() - 1)];
  CounterfactualTriple cf;
  cf.base = batch[i];
  cf.kind = CounterfactualKind::kContext;
  cf.payload = batch[j].context;
  cf.source = j;
  return cf;
}

TokenSeq perturb_tokens(std::span<const TokenId> tokens, Rng& rng,
                        const Vocabulary& vocab, PerturbStats* stats) {
  if (vocab.size() <= static_cast<std::size_t>(Vocabulary::kNumSpecial)) {
    throw Error("perturb_tokens: vocabulary has no regular tokens");
  }
  const auto last = static_cast<TokenId>(vocab.size() - 1);
  PerturbStats local;
  TokenSeq out(tokens.begin(), tokens.end());
  for (auto& t : out) {
    ++local.tokens;
    if (uniform01(rng) >= kPerturbRate) continue;
    ++local.selected;
    const double u = uniform01(rng);
    if (u < kPerturbRandomShare) {
      t = uniform_int<TokenId>(rng, Vocabulary::kNumSpecial, last);
      ++local.randomized;
    } else if (u < kPerturbRandomShare + kPerturbMaskShare) {
      t = Vocabulary::kMask;
      ++local.masked;
    } else {
      ++local.kept;
    }
  }
  if (stats) *stats += local;
  return out;
}

CounterfactualTriple perturb_focal(const FactoredTriple& triple, Rng& rng,
                                   const Vocabulary& vocab,
                                   PerturbStats* stats) {
  Paragraph s = triple.focal;
  for (auto& sentence : s.sentences) {
    sentence = perturb_tokens(sentence, rng, vocab, stats);
  }
  CounterfactualTriple cf;
  cf.base = triple;
  cf.kind = CounterfactualKind::kFocal;
  cf.payload = std::move(s);
  return cf;
}

}  // namespace cfqa
