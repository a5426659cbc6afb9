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

#include "cfqa/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "cfqa/hash.hpp"

namespace cfqa {
namespace {

std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw Error("config: bad value '" + value + "' for " + key);
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw Error("config: bad boolean '" + value + "' for " + key);
}

using Setter = std::function<void(const std::string&, const std::string&)>;

void apply_table(const KeyValues& values, const std::map<std::string, Setter>& table) {
  for (const auto& [key, value] : values) {
    auto it = table.find(key);
    if (it == table.end()) throw Error("config: unknown key '" + key + "'");
    it->second(key, value);
  }
}

}  // namespace

KeyValues parse_key_values(std::string_view text) {
  KeyValues out;
  std::size_t lineno = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    auto line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++lineno;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw Error("config line " + std::to_string(lineno) + ": empty key");
    if (!out.emplace(key, value).second) {
      throw Error("config line " + std::to_string(lineno) + ": repeated key " + key);
    }
  }
  return out;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_key_values(buffer.str());
}

void apply_config(const KeyValues& values, GenConfig& c) {
  using S = std::size_t;
  apply_table(values, {
      {"num_examples", [&](auto& k, auto& v) { c.num_examples = parse_number<S>(k, v); }},
      {"num_paragraphs", [&](auto& k, auto& v) { c.num_paragraphs = parse_number<S>(k, v); }},
      {"entity_pool", [&](auto& k, auto& v) { c.entity_pool = parse_number<S>(k, v); }},
      {"num_relations", [&](auto& k, auto& v) { c.num_relations = parse_number<S>(k, v); }},
      {"num_attributes", [&](auto& k, auto& v) { c.num_attributes = parse_number<S>(k, v); }},
      {"yes_no_fraction", [&](auto& k, auto& v) { c.yes_no_fraction = parse_number<double>(k, v); }},
      {"hard_distractor_fraction",
       [&](auto& k, auto& v) { c.hard_distractor_fraction = parse_number<double>(k, v); }},
      {"seed", [&](auto& k, auto& v) { c.seed = parse_number<std::uint64_t>(k, v); }},
  });
  c.validate();
}

void apply_config(const KeyValues& values, TrainConfig& c) {
  using S = std::size_t;
  auto& b = c.backbone;
  apply_table(values, {
      {"lambda", [&](auto& k, auto& v) { c.lambda = parse_number<double>(k, v); }},
      {"optimizer", [&](auto&, auto& v) { c.optimizer = optimizer_from_string(v); }},
      {"lr", [&](auto& k, auto& v) { c.lr = parse_number<double>(k, v); }},
      {"momentum", [&](auto& k, auto& v) { c.momentum = parse_number<double>(k, v); }},
      {"clip", [&](auto& k, auto& v) { c.clip = parse_number<double>(k, v); }},
      {"batch_size", [&](auto& k, auto& v) { c.batch_size = parse_number<S>(k, v); }},
      {"epochs", [&](auto& k, auto& v) { c.epochs = parse_number<S>(k, v); }},
      {"seed",
       [&](auto& k, auto& v) { c.seed = b.seed = parse_number<std::uint64_t>(k, v); }},
      {"mode", [&](auto&, auto& v) { c.mode = train_mode_from_string(v); }},
      {"bias", [&](auto&, auto& v) { c.bias_mode = bias_mode_from_string(v); }},
      {"ablate", [&](auto&, auto& v) { c.ablate = ablation_from_string(v); }},
      {"resample_perturbation",
       [&](auto& k, auto& v) { c.resample_perturbation = parse_bool(k, v); }},
      {"detach_branches",
       [&](auto& k, auto& v) { c.detach_branches = parse_bool(k, v); }},
      {"hidden", [&](auto& k, auto& v) { b.hidden = parse_number<int>(k, v); }},
      {"layers", [&](auto& k, auto& v) { b.layers = parse_number<int>(k, v); }},
      {"heads", [&](auto& k, auto& v) { b.heads = parse_number<int>(k, v); }},
      {"ffn", [&](auto& k, auto& v) { b.ffn = parse_number<int>(k, v); }},
      {"max_len", [&](auto& k, auto& v) { b.max_len = parse_number<int>(k, v); }},
      {"max_segments", [&](auto& k, auto& v) { b.max_segments = parse_number<int>(k, v); }},
      {"head_hidden", [&](auto& k, auto& v) { b.head_hidden = parse_number<int>(k, v); }},
  });
  c.validate();
}

std::string config_hash(const nlohmann::json& config) {
  return hex64(fnv1a(config.dump()));
}

}  // namespace cfqa
