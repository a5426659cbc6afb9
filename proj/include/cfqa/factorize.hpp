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


// Per-paragraph factorization of an example and the two counterfactual
// rewrites of a factored triple.

#pragma once

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "cfqa/corpus.hpp"
#include "cfqa/random.hpp"

namespace cfqa {

// (q, s, c) with s the paragraph at `index` and c the remaining paragraphs
// in their original order.
struct FactoredTriple {
  std::string example_id;
  std::size_t index = 0;
  TokenSeq question;
  Paragraph focal;
  std::vector<Paragraph> context;
  // Is `focal` a supporting paragraph.
  bool supporting = false;
  AnswerType answer_type = AnswerType::kSpan;
  std::optional<AnswerSpan> answer_span;
};

std::vector<FactoredTriple> factor_example(const Example& example);

// Inverse of factor_example for one triple: s re-inserted at `index`.
std::vector<Paragraph> reassemble(const FactoredTriple& triple);

enum class CounterfactualKind {
  kContext,  // c -> c*
  kFocal,    // s -> s*
};

struct CounterfactualTriple {
  FactoredTriple base;
  CounterfactualKind kind = CounterfactualKind::kContext;
  // c* for kContext, s* for kFocal.
  std::variant<std::vector<Paragraph>, Paragraph> payload;
  // Batch position that supplied c* (kContext only).
  std::size_t source = 0;

  const std::vector<Paragraph>& context() const {
    return std::get<std::vector<Paragraph>>(payload);
  }
  const Paragraph& focal() const { return std::get<Paragraph>(payload); }
};

// Replaces the context of batch[i] with the context of a uniformly chosen
// batch element from a different example. Throws when no such element
// exists (e.g. a batch of one).
CounterfactualTriple sample_cf_context(std::span<const FactoredTriple> batch,
                                       std::size_t i, Rng& rng);

inline constexpr double kPerturbRate = 0.15;
inline constexpr double kPerturbRandomShare = 0.8;
inline constexpr double kPerturbMaskShare = 0.1;

struct PerturbStats {
  std::size_t tokens = 0;
  std::size_t selected = 0;
  std::size_t randomized = 0;
  std::size_t masked = 0;
  std::size_t kept = 0;

  PerturbStats& operator+=(const PerturbStats& o) {
    tokens += o.tokens;
    selected += o.selected;
    randomized += o.randomized;
    masked += o.masked;
    kept += o.kept;
    return *this;
  }
};

// Each token is selected with probability 0.15; a selected token becomes a
// uniformly drawn non-special token (80%), MASK (10%) or stays as is (10%).
TokenSeq perturb_tokens(std::span<const TokenId> tokens, Rng& rng,
                        const Vocabulary& vocab, PerturbStats* stats = nullptr);

// s -> s*, preserving sentence boundaries. q and c are untouched.
CounterfactualTriple perturb_focal(const FactoredTriple& triple, Rng& rng,
                                   const Vocabulary& vocab,
                                   PerturbStats* stats = nullptr);

}  // namespace cfqa
