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


#include "cfqa/layout.hpp"

#include <numeric>

namespace cfqa {

std::size_t Layout::num_sentences() const {
  std::size_t n = 0;
  for (const auto& p : paragraphs) n += p.sentence_starts.size();
  return n;
}

std::vector<std::uint8_t> Layout::answerable() const {
  std::vector<std::uint8_t> mask(tokens.size(), 0);
  for (const auto& p : paragraphs) {
    for (int r = p.start + 1; r <= p.end; ++r) mask[static_cast<std::size_t>(r)] = 1;
  }
  return mask;
}

std::optional<int> Layout::token_row(std::size_t p, std::size_t offset) const {
  if (p >= paragraphs.size() || offset >= kept[p]) return std::nullopt;
  return paragraphs[p].start + 1 + static_cast<int>(offset);
}

std::vector<std::size_t> plan_truncation(
    std::size_t question_len, std::span<const Paragraph* const> paragraphs,
    std::size_t max_len,
    std::optional<std::pair<std::size_t, std::size_t>> pinned) {
  const std::size_t fixed = 2 + question_len + paragraphs.size();
  if (fixed > max_len) {
    throw Error("question and paragraph markers exceed max sequence length");
  }
  std::vector<std::size_t> kept;
  for (const auto* p : paragraphs) kept.push_back(p->num_tokens());
  if (pinned) {
    if (pinned->first >= kept.size()) throw Error("pinned paragraph out of range");
    kept[pinned->first] = std::min(pinned->second, kept[pinned->first]);
  }
  std::size_t total = std::accumulate(kept.begin(), kept.end(), std::size_t{0});
  const std::size_t budget = max_len - fixed;
  if (total <= budget) return kept;

  auto shrink = [&](bool gold, std::size_t floor) {
    for (std::size_t k = paragraphs.size(); k-- > 0 && total > budget;) {
      if (paragraphs[k]->is_gold != gold) continue;
      if (pinned && pinned->first == k) continue;
      if (kept[k] <= floor) continue;
      const auto cut = std::min(kept[k] - floor, total - budget);
      kept[k] -= cut;
      total -= cut;
    }
  };
  shrink(false, 1);
  shrink(true, 1);
  shrink(false, 0);
  shrink(true, 0);
  if (total > budget) {
    throw Error("pinned paragraph does not fit in max sequence length");
  }
  return kept;
}

Layout build_layout(std::span<const TokenId> question,
                    std::span<const Paragraph* const> paragraphs,
                    std::span<const std::size_t> kept) {
  if (question.empty()) throw Error("encode: empty question");
  if (kept.size() != paragraphs.size()) throw Error("kept/paragraph mismatch");
  Layout layout;
  layout.tokens.push_back(Vocabulary::kCls);
  layout.tokens.insert(layout.tokens.end(), question.begin(), question.end());
  layout.tokens.push_back(Vocabulary::kSep);
  layout.kept.assign(kept.begin(), kept.end());
  for (std::size_t k = 0; k < paragraphs.size(); ++k) {
    ParagraphRows rows;
    rows.start = static_cast<int>(layout.tokens.size());
    layout.tokens.push_back(Vocabulary::kPara);
    std::size_t remaining = kept[k];
    for (const auto& sentence : paragraphs[k]->sentences) {
      if (remaining == 0) break;
      const auto take = std::min(remaining, sentence.size());
      if (take == 0) continue;
      rows.sentence_starts.push_back(static_cast<int>(layout.tokens.size()));
      layout.tokens.insert(layout.tokens.end(), sentence.begin(),
                           sentence.begin() + static_cast<long>(take));
      rows.sentence_ends.push_back(static_cast<int>(layout.tokens.size()) - 1);
      remaining -= take;
    }
    rows.end = static_cast<int>(layout.tokens.size()) - 1;
    layout.paragraphs.push_back(std::move(rows));
  }
  return layout;
}

Layout build_layout(std::span<const TokenId> question,
                    std::span<const Paragraph* const> paragraphs,
                    std::size_t max_len) {
  auto kept = plan_truncation(question.size(), paragraphs, max_len);
  return build_layout(question, paragraphs, kept);
}

}  // namespace cfqa
