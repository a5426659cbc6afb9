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

#include "cfqa/predict.hpp"

#include <fstream>
#include <sstream>

#include "cfqa/parallel.hpp"

namespace cfqa {

using nlohmann::json;

namespace {

constexpr const char* kMetaKey = "__meta__";
constexpr std::string_view kTypeNames[kNumTypes] = {"yes", "no", "span", "entity"};

Layout factual_layout(const Example& ex, std::size_t max_len) {
  std::vector<const Paragraph*> ptrs;
  for (const auto& p : ex.paragraphs) ptrs.push_back(&p);
  return build_layout(ex.question, ptrs, max_len);
}

}  // namespace

std::string_view type_name(int type_class) {
  if (type_class < 0 || type_class >= kNumTypes) throw Error("bad type class");
  return kTypeNames[type_class];
}

int type_from_name(std::string_view name) {
  for (int k = 0; k < kNumTypes; ++k) {
    if (kTypeNames[k] == name) return k;
  }
  throw Error("unknown answer type '" + std::string(name) + "'");
}

Prediction decode(const Example& example, const Layout& layout,
                  const HeadOutputs& scores, const Vocabulary& vocab) {
  Prediction pred;
  pred.id = example.id;
  std::size_t k = 0;
  for (std::size_t p = 0; p < layout.paragraphs.size(); ++p) {
    const auto& title = example.paragraphs[p].title;
    const auto r = static_cast<Eigen::Index>(p);
    if (scores.para(r, 1) > scores.para(r, 0)) pred.supp_paragraphs.insert(title);
    for (std::size_t j = 0; j < layout.paragraphs[p].sentence_starts.size(); ++j, ++k) {
      const auto s = static_cast<Eigen::Index>(k);
      if (scores.sent(s, 1) > scores.sent(s, 0)) pred.supp_sentences.emplace(title, j);
    }
  }
  Eigen::Index best_type = 0;
  scores.type.maxCoeff(&best_type);
  pred.type = static_cast<int>(best_type);
  if (pred.type == kTypeYes || pred.type == kTypeNo) {
    pred.answer = std::string(type_name(pred.type));
    return pred;
  }
  double best = kNegInf;
  int best_i = -1, best_j = -1;
  for (const auto& rows : layout.paragraphs) {
    for (int i = rows.start + 1; i <= rows.end; ++i) {
      const int last = std::min(rows.end, i + static_cast<int>(kMaxAnswerTokens) - 1);
      for (int j = i; j <= last; ++j) {
        const double v = scores.start(i) + scores.end(j);
        if (v > best) {
          best = v;
          best_i = i;
          best_j = j;
        }
      }
    }
  }
  if (best_i >= 0) {
    std::span<const TokenId> tokens(layout.tokens);
    pred.answer = detokenize(
        tokens.subspan(static_cast<std::size_t>(best_i),
                       static_cast<std::size_t>(best_j - best_i + 1)),
        vocab);
  }
  return pred;
}

Prediction predict(const Model& model, const CounterfactualBias& bias,
                   const Example& example, const Vocabulary& vocab) {
  Layout layout = factual_layout(example, static_cast<std::size_t>(model.config().max_len));
  EncodedSequence rep = model.encode(layout);
  HeadOutputs scores = infer(model.factual_heads(rep), bias);
  return decode(example, rep.layout, scores, vocab);
}

std::vector<Prediction> predict_all(const Model& model,
                                    const CounterfactualBias& bias,
                                    std::span<const Example> examples,
                                    const Vocabulary& vocab,
                                    std::size_t threads) {
  std::vector<Prediction> out(examples.size());
  parallel_for(examples.size(), threads, [&](std::size_t i) {
    out[i] = predict(model, bias, examples[i], vocab);
  });
  return out;
}

json predictions_to_json(std::span<const Prediction> predictions,
                         const json& meta) {
  json out = json::object();
  if (!meta.is_null()) out[kMetaKey] = meta;
  for (const auto& p : predictions) {
    if (out.contains(p.id)) throw Error("duplicate prediction id " + p.id);
    json sents = json::array();
    for (const auto& [t, j] : p.supp_sentences) sents.push_back({t, j});
    out[p.id] = {{"answer", p.answer},
                 {"supp_paragraphs", p.supp_paragraphs},
                 {"supp_sentences", sents},
                 {"type", type_name(p.type)}};
  }
  return out;
}

std::vector<Prediction> predictions_from_text(std::string_view text) {
  std::set<std::string> seen;
  std::vector<std::string> duplicates;
  json::parser_callback_t check = [&](int depth, json::parse_event_t event,
                                      json& parsed) {
    if (event == json::parse_event_t::key && depth == 1) {
      const auto key = parsed.get<std::string>();
      if (!seen.insert(key).second) duplicates.push_back(key);
    }
    return true;
  };
  json root;
  try {
    root = json::parse(text, check);
  } catch (const json::exception& e) {
    throw Error(std::string("malformed predictions: ") + e.what());
  }
  if (!duplicates.empty()) {
    std::string ids;
    for (const auto& d : duplicates) ids += (ids.empty() ? "" : ", ") + d;
    throw Error("duplicate prediction ids: " + ids);
  }
  if (!root.is_object()) throw Error("predictions must be a JSON object");
  std::vector<Prediction> out;
  for (const auto& [id, v] : root.items()) {
    if (id == kMetaKey) continue;
    try {
      Prediction p;
      p.id = id;
      p.answer = v.at("answer").get<std::string>();
      p.supp_paragraphs = v.at("supp_paragraphs").get<std::set<std::string>>();
      for (const auto& s : v.at("supp_sentences")) {
        p.supp_sentences.emplace(s.at(0).get<std::string>(), s.at(1).get<std::size_t>());
      }
      p.type = type_from_name(v.at("type").get<std::string>());
      out.push_back(std::move(p));
    } catch (const json::exception& e) {
      throw Error("malformed prediction " + id + ": " + e.what());
    }
  }
  return out;
}

void write_predictions(const std::filesystem::path& path,
                       std::span<const Prediction> predictions,
                       const json& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << predictions_to_json(predictions, meta).dump(1) << '\n';
  if (!out) throw Error("write failed: " + path.string());
}

std::vector<Prediction> read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return predictions_from_text(buffer.str());
}

}  // namespace cfqa
