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


// Token layout of one encoder input:
//
//   [CLS] question [SEP] [PARA] p_1 ... [PARA] p_m
//
// with a position map from (paragraph, sentence) to row offsets.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cfqa/corpus.hpp"

namespace cfqa {

struct ParagraphRows {
  // Inclusive rows; `start` is the [PARA] marker.
  int start = 0;
  int end = 0;
  // First and last row of every surviving sentence. Truncation only drops
  // tails, so surviving sentences are a prefix of the paragraph's sentences.
  std::vector<int> sentence_starts;
  std::vector<int> sentence_ends;

  int length() const { return end - start + 1; }
  // First token of the paragraph (its title in the synthetic corpus), or the
  // marker when truncation left the paragraph empty.
  int head_row() const { return end > start ? start + 1 : start; }
};

struct Layout {
  TokenSeq tokens;
  std::vector<ParagraphRows> paragraphs;
  // Tokens kept per paragraph (excluding the marker).
  std::vector<std::size_t> kept;

  std::size_t size() const { return tokens.size(); }
  int context_begin() const {
    return paragraphs.empty() ? static_cast<int>(tokens.size())
                              : paragraphs.front().start;
  }
  std::size_t num_sentences() const;
  // 1 for rows that may hold an answer token (paragraph tokens, not markers).
  std::vector<std::uint8_t> answerable() const;
  // Row of token `offset` of paragraph `p`, if it survived truncation.
  std::optional<int> token_row(std::size_t p, std::size_t offset) const;
};

// Tokens to keep per paragraph so that the layout fits in `max_len`.
// Non-gold paragraphs lose their tails first (last paragraph first), then
// gold ones. A paragraph keeps at least one token while that is possible.
// `pinned` fixes the kept count of one paragraph.
std::vector<std::size_t> plan_truncation(
    std::size_t question_len, std::span<const Paragraph* const> paragraphs,
    std::size_t max_len,
    std::optional<std::pair<std::size_t, std::size_t>> pinned = std::nullopt);

Layout build_layout(std::span<const TokenId> question,
                    std::span<const Paragraph* const> paragraphs,
                    std::span<const std::size_t> kept);

Layout build_layout(std::span<const TokenId> question,
                    std::span<const Paragraph* const> paragraphs,
                    std::size_t max_len);

}  // namespace cfqa
