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

#include "cfqa/effects.hpp"

namespace cfqa {
namespace {

Vector vec_from_json(const nlohmann::json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

nlohmann::json vec_to_json(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

void check_aligned(const HeadOutputs& a, const HeadOutputs& b) {
  if (!a.same_shape(b)) throw Error("fuse: branch outputs have different shapes");
}

void add_into(HeadOutputs& acc, const HeadOutputs& other) {
  acc.para += other.para;
  acc.sent += other.sent;
  acc.start += other.start;
  acc.end += other.end;
  acc.type += other.type;
}

}  // namespace

std::string_view to_string(BiasMode mode) {
  return mode == BiasMode::kRandom ? "random" : "uniform";
}

BiasMode bias_mode_from_string(std::string_view name) {
  if (name == "random") return BiasMode::kRandom;
  if (name == "uniform") return BiasMode::kUniform;
  throw Error("unknown bias mode '" + std::string(name) + "'");
}

CounterfactualBias CounterfactualBias::zeros(BiasMode mode,
                                             std::size_t max_len) {
  CounterfactualBias b;
  b.mode = mode;
  const bool random = mode == BiasMode::kRandom;
  b.c_ans = Vector::Zero(random ? static_cast<Eigen::Index>(max_len) : 1);
  b.c_supp = Vector::Zero(random ? 2 : 1);
  b.c_type = Vector::Zero(random ? kNumTypes : 1);
  return b;
}

Vector CounterfactualBias::ans(std::size_t n) const {
  const auto len = static_cast<Eigen::Index>(n);
  if (mode == BiasMode::kUniform) return Vector::Constant(len, c_ans(0));
  if (len > c_ans.size()) throw Error("bias: sequence longer than c_ans");
  return c_ans.head(len);
}

Vector CounterfactualBias::supp() const {
  return mode == BiasMode::kUniform ? Vector::Constant(2, c_supp(0)) : c_supp;
}

Vector CounterfactualBias::type() const {
  return mode == BiasMode::kUniform ? Vector::Constant(kNumTypes, c_type(0))
                                    : c_type;
}

std::size_t CounterfactualBias::count() const {
  return static_cast<std::size_t>(c_ans.size() + c_supp.size() + c_type.size());
}

void CounterfactualBias::set_zero() {
  c_ans.setZero();
  c_supp.setZero();
  c_type.setZero();
}

bool CounterfactualBias::finite() const {
  return c_ans.allFinite() && c_supp.allFinite() && c_type.allFinite();
}

CounterfactualBias& CounterfactualBias::operator+=(
    const CounterfactualBias& other) {
  if (mode != other.mode || c_ans.size() != other.c_ans.size()) {
    throw Error("bias: mismatched modes");
  }
  c_ans += other.c_ans;
  c_supp += other.c_supp;
  c_type += other.c_type;
  return *this;
}

nlohmann::json CounterfactualBias::to_json() const {
  return {{"mode", to_string(mode)},
          {"c_ans", vec_to_json(c_ans)},
          {"c_supp", vec_to_json(c_supp)},
          {"c_type", vec_to_json(c_type)}};
}

CounterfactualBias CounterfactualBias::from_json(const nlohmann::json& j) {
  CounterfactualBias b;
  b.mode = bias_mode_from_string(j.at("mode").get<std::string>());
  b.c_ans = vec_from_json(j.at("c_ans"));
  b.c_supp = vec_from_json(j.at("c_supp"));
  b.c_type = vec_from_json(j.at("c_type"));
  const bool random = b.mode == BiasMode::kRandom;
  if (b.c_ans.size() < 1 || (!random && b.c_ans.size() != 1) ||
      b.c_supp.size() != (random ? 2 : 1) ||
      b.c_type.size() != (random ? kNumTypes : 1)) {
    throw Error("bias: shapes do not match mode " + std::string(to_string(b.mode)));
  }
  if (!b.finite()) throw Error("bias: non-finite values");
  return b;
}

HeadOutputs fuse(const HeadOutputs& factual, const HeadOutputs* cf_focal,
                 const HeadOutputs* cf_context,
                 const CounterfactualBias& bias) {
  HeadOutputs out = factual;
  for (const HeadOutputs* branch : {cf_focal, cf_context}) {
    if (!branch) continue;
    check_aligned(factual, *branch);
    add_into(out, *branch);
  }
  return infer(out, bias);
}

HeadOutputs fuse(const LogitsBundle& bundle, const CounterfactualBias& bias) {
  return fuse(bundle.factual, &bundle.cf_focal, &bundle.cf_context, bias);
}

HeadOutputs infer(const HeadOutputs& factual, const CounterfactualBias& bias) {
  HeadOutputs out = factual;
  const Eigen::RowVectorXd supp = bias.supp().transpose();
  out.para.rowwise() -= supp;
  out.sent.rowwise() -= supp;
  const Vector ans = bias.ans(static_cast<std::size_t>(out.start.size()));
  out.start -= ans;
  out.end -= ans;
  out.type -= bias.type();
  return out;
}

void bias_backward(const HeadOutputs& grad, CounterfactualBias& grads) {
  const auto n = grad.start.size();
  Vector d_supp = -(grad.para.colwise().sum() + grad.sent.colwise().sum()).transpose();
  if (grads.mode == BiasMode::kUniform) {
    grads.c_ans(0) -= grad.start.sum() + grad.end.sum();
    grads.c_supp(0) += d_supp.sum();
    grads.c_type(0) -= grad.type.sum();
    return;
  }
  if (n > grads.c_ans.size()) throw Error("bias: sequence longer than c_ans");
  grads.c_ans.head(n) -= grad.start + grad.end;
  grads.c_supp += d_supp;
  grads.c_type -= grad.type;
}

}  // namespace cfqa
