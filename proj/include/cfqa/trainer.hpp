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

// Loss composition over fused head outputs and the training loop for the
// counterfactual model, its single-branch ablations and the plain baseline.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "cfqa/effects.hpp"
#include "cfqa/factorize.hpp"
#include "cfqa/model.hpp"

namespace cfqa {

enum class TrainMode { kCounterfactual, kBaseline };
// Counterfactual branch removed from the fusion.
enum class Ablation { kNone, kFocal, kContext };
enum class Optimizer { kSgd, kAdam };

std::string_view to_string(TrainMode mode);
TrainMode train_mode_from_string(std::string_view name);
std::string_view to_string(Ablation ablation);
Ablation ablation_from_string(std::string_view name);
std::string_view to_string(Optimizer optimizer);
Optimizer optimizer_from_string(std::string_view name);

struct TrainConfig {
  double lambda = 1.0;
  Optimizer optimizer = Optimizer::kSgd;
  double lr = 0.05;
  // SGD momentum, or Adam's first-moment decay.
  double momentum = 0.9;
  // Global gradient-norm clip; 0 disables.
  double clip = 5.0;
  std::size_t batch_size = 8;
  std::size_t epochs = 4;
  std::uint64_t seed = 1;
  TrainMode mode = TrainMode::kCounterfactual;
  BiasMode bias_mode = BiasMode::kRandom;
  Ablation ablate = Ablation::kNone;
  // Fresh s* every epoch; otherwise s* is a fixed function of (seed, example).
  bool resample_perturbation = true;
  BackboneConfig backbone;
  // Worker threads for per-example gradients (0: one per core). Results do
  // not depend on it, so it is not part of the serialized config.
  std::size_t threads = 0;

  // Branch passes contribute to the fused logits but receive no gradient.
  bool detach_branches = false;

  // Test hooks: replace both branch outputs by zeros / keep C at its value.
  bool zero_branches = false;
  bool freeze_bias = false;

  bool uses_focal() const {
    return mode == TrainMode::kCounterfactual && ablate != Ablation::kFocal;
  }
  bool uses_context() const {
    return mode == TrainMode::kCounterfactual && ablate != Ablation::kContext;
  }

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

// Labels of one example projected onto its factual layout.
struct GoldLabels {
  std::vector<int> para;  // per layout paragraph
  std::vector<int> sent;  // per surviving sentence, layout order
  int type = kTypeSpan;
  std::optional<int> start;  // rows
  std::optional<int> end;
  // A span answer whose span was cut by truncation.
  bool span_out_of_range = false;
};

GoldLabels gold_labels(const Example& example, const Layout& layout);

struct LossParts {
  double start = 0.0;
  double end = 0.0;
  double sent = 0.0;
  double para = 0.0;
  double type = 0.0;
  double total = 0.0;

  LossParts& operator+=(const LossParts& o);
  LossParts& operator/=(double k);
  nlohmann::json to_json() const;
};

// Cross-entropy terms; `grad`, when given, receives dL/d(fused).
LossParts compute_loss(const HeadOutputs& fused, const GoldLabels& gold,
                       double lambda, HeadOutputs* grad = nullptr);

// s_i* and c_i* for every paragraph i of one example. Empty when the
// corresponding branch is off.
struct CounterfactualDraws {
  std::vector<Paragraph> focal;
  std::vector<std::vector<Paragraph>> context;
};

struct TrainCounters {
  std::size_t steps = 0;
  std::size_t examples = 0;
  std::size_t perturb_calls = 0;
  std::size_t context_samples = 0;
  std::size_t span_skipped = 0;
  std::size_t encoder_passes = 0;
  PerturbStats perturb;

  nlohmann::json to_json() const;
};

std::vector<CounterfactualDraws> sample_draws(
    std::span<const Example* const> batch, const Vocabulary& vocab,
    const TrainConfig& config, Rng& rng, TrainCounters* counters = nullptr);

// Encoder inputs of one example: O, then M_i and G_i per paragraph.
struct BranchLayouts {
  Layout factual;
  std::vector<Layout> focal;
  std::vector<Layout> context;
  // Index of s_i inside each G_i layout.
  std::vector<std::size_t> context_pos;
};

BranchLayouts branch_layouts(const Example& example,
                             const CounterfactualDraws* draws,
                             std::size_t max_len);

// Fused outputs of one example (factual only when `draws` is null).
LogitsBundle forward_bundle(const Model& model, const Example& example,
                            const CounterfactualDraws* draws,
                            const TrainConfig& config);

// Mean loss over a batch with fixed counterfactual draws; accumulates the
// gradients of that mean when `grads` / `bias_grads` are given.
LossParts batch_loss(const Model& model, const CounterfactualBias& bias,
                     std::span<const Example* const> batch,
                     std::span<const CounterfactualDraws> draws,
                     const TrainConfig& config, Parameters* grads = nullptr,
                     CounterfactualBias* bias_grads = nullptr,
                     TrainCounters* counters = nullptr);

struct EpochRecord {
  LossParts loss;
  std::size_t span_skipped = 0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  // Step-level totals, in order, for paired comparisons.
  std::vector<double> step_losses;
  TrainCounters counters;
  nlohmann::json final_metrics;
  double wall_time_s = 0.0;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t step, const std::string& what)
      : Error(what), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

struct TrainResult {
  Model model;
  CounterfactualBias bias;
  TrainReport report;
};

// Example order comes from a substream of the seed that is shared by all
// modes; counterfactual draws come from a separate substream.
TrainResult train(std::span<const Example> dataset, const Vocabulary& vocab,
                  const TrainConfig& config,
                  std::span<const Example> dev = {});

TrainResult ablate_branch(std::span<const Example> dataset,
                          const Vocabulary& vocab, TrainConfig config,
                          Ablation drop, std::span<const Example> dev = {});

// Batches of at least two examples: a trailing singleton joins the previous
// batch.
std::vector<std::vector<std::size_t>> make_batches(
    std::span<const std::size_t> order, std::size_t batch_size);

}  // namespace cfqa
