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

#include "cfqa/checkpoint.hpp"

#include <fstream>

#include "cfqa/hash.hpp"

namespace cfqa {

using nlohmann::json;

json checkpoint_to_json(const Model& model, const CounterfactualBias& bias,
                        const TrainConfig& config, const Vocabulary& vocab,
                        const json& meta) {
  json tensors = json::array();
  for (const auto& [name, m] : model.params().tensors()) {
    tensors.push_back({{"name", name},
                       {"shape", {m->rows(), m->cols()}},
                       {"data", std::vector<double>(m->data(), m->data() + m->size())}});
  }
  json out = {{"format", kCheckpointFormat},
              {"config", config.to_json()},
              {"vocab_hash", hex64(vocab.fingerprint())},
              {"vocab_size", vocab.size()},
              {"bias", bias.to_json()},
              {"tensors", tensors}};
  if (!meta.is_null()) out["meta"] = meta;
  return out;
}

Checkpoint checkpoint_from_json(const json& j, const Vocabulary* vocab) {
  try {
    if (j.at("format").get<std::string>() != kCheckpointFormat) {
      throw Error("unsupported checkpoint format '" +
                  j.at("format").get<std::string>() + "'");
    }
    const auto config = TrainConfig::from_json(j.at("config"));
    const auto vocab_size = j.at("vocab_size").get<std::size_t>();
    const auto hash = j.at("vocab_hash").get<std::string>();
    if (vocab && (vocab->size() != vocab_size || hex64(vocab->fingerprint()) != hash)) {
      throw Error("checkpoint vocabulary does not match the given vocabulary");
    }
    Checkpoint ck{config, Model(config.backbone, vocab_size),
                  CounterfactualBias::from_json(j.at("bias")), 0,
                  j.value("meta", json())};
    ck.vocab_fingerprint = std::stoull(hash, nullptr, 16);
    const auto& stored = j.at("tensors");
    auto tensors = ck.model.params().tensors();
    if (stored.size() != tensors.size()) throw Error("checkpoint tensor count mismatch");
    for (std::size_t k = 0; k < tensors.size(); ++k) {
      const auto& t = stored[k];
      auto& [name, m] = tensors[k];
      if (t.at("name").get<std::string>() != name) {
        throw Error("checkpoint tensor " + std::to_string(k) + " should be " + name);
      }
      const auto rows = t.at("shape").at(0).get<Eigen::Index>();
      const auto cols = t.at("shape").at(1).get<Eigen::Index>();
      const auto data = t.at("data").get<std::vector<double>>();
      if (rows != m->rows() || cols != m->cols() ||
          static_cast<Eigen::Index>(data.size()) != rows * cols) {
        throw Error("checkpoint tensor " + name + " has the wrong shape");
      }
      std::copy(data.begin(), data.end(), m->data());
      if (!m->allFinite()) throw Error("checkpoint tensor " + name + " is not finite");
    }
    return ck;
  } catch (const json::exception& e) {
    throw Error(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Model& model,
                     const CounterfactualBias& bias, const TrainConfig& config,
                     const Vocabulary& vocab, const json& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << checkpoint_to_json(model, bias, config, vocab, meta).dump() << '\n';
  if (!out) throw Error("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const Vocabulary* vocab) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error("malformed checkpoint " + path.string() + ": " + e.what());
  }
  return checkpoint_from_json(j, vocab);
}

}  // namespace cfqa
