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

// Causal-effect fusion of the factual and counterfactual branches, the
// learnable counterfactual bias C, and the inference rule factual - C.

#pragma once

#include <cstddef>
#include <string_view>

#include "cfqa/model.hpp"

namespace cfqa {

struct LogitsBundle {
  HeadOutputs factual;     // Y(q, s, c)
  HeadOutputs cf_focal;    // Y(q, s*, c)
  HeadOutputs cf_context;  // Y(q, s, c*)
};

enum class BiasMode { kRandom, kUniform };

std::string_view to_string(BiasMode mode);
BiasMode bias_mode_from_string(std::string_view name);

// Random mode: c_ans has one entry per position (up to max_len, shared by
// the start and end heads), c_supp is a 2-vector shared by the paragraph
// and sentence heads, c_type a 4-vector. Uniform mode: three scalars.
struct CounterfactualBias {
  BiasMode mode = BiasMode::kRandom;
  Vector c_ans;
  Vector c_supp;
  Vector c_type;

  static CounterfactualBias zeros(BiasMode mode, std::size_t max_len);

  // C broadcast to a length-n answer vector / the 2 and 4 class vectors.
  Vector ans(std::size_t n) const;
  Vector supp() const;
  Vector type() const;

  std::size_t count() const;
  void set_zero();
  bool finite() const;
  CounterfactualBias& operator+=(const CounterfactualBias& other);

  nlohmann::json to_json() const;
  static CounterfactualBias from_json(const nlohmann::json& j);
};

// factual + cf_focal + cf_context - C, per head. A null branch is treated as
// absent (single-branch ablations).
HeadOutputs fuse(const HeadOutputs& factual, const HeadOutputs* cf_focal,
                 const HeadOutputs* cf_context, const CounterfactualBias& bias);
HeadOutputs fuse(const LogitsBundle& bundle, const CounterfactualBias& bias);

// factual - C.
HeadOutputs infer(const HeadOutputs& factual, const CounterfactualBias& bias);

// Adds dL/dC to `grads` given dL/d(fused outputs).
void bias_backward(const HeadOutputs& grad, CounterfactualBias& grads);

}  // namespace cfqa
