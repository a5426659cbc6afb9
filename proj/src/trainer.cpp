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

#include "cfqa/trainer.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include "cfqa/hash.hpp"
#include "cfqa/metrics.hpp"
#include "cfqa/parallel.hpp"
#include "cfqa/predict.hpp"

namespace cfqa {

using nlohmann::json;

namespace {

// Substreams of the training seed.
constexpr std::uint64_t kOrderStream = 1;
constexpr std::uint64_t kCounterfactualStream = 2;
constexpr std::uint64_t kFixedPerturbStream = 3;

// Cross-entropy of softmax(logits) at `target` over the positions where
// `mask` is set (all positions when empty). Adds scale * dL/dlogits into
// `grad` when given.
double cross_entropy(const Eigen::Ref<const Vector>& logits, int target,
                     std::span<const std::uint8_t> mask, double scale,
                     Eigen::Ref<Vector> grad, bool want_grad) {
  const auto n = logits.size();
  auto allowed = [&](Eigen::Index i) {
    return mask.empty() || mask[static_cast<std::size_t>(i)] != 0;
  };
  double mx = kNegInf;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (allowed(i)) mx = std::max(mx, logits(i));
  }
  double z = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (allowed(i)) z += std::exp(logits(i) - mx);
  }
  const double log_z = mx + std::log(z);
  if (want_grad) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (allowed(i)) grad(i) += scale * std::exp(logits(i) - log_z);
    }
    grad(target) -= scale;
  }
  return log_z - logits(target);
}

double rows_cross_entropy(const Matrix& logits, const std::vector<int>& labels,
                          double weight, Matrix* grad) {
  if (labels.empty()) return 0.0;
  const double scale = weight / static_cast<double>(labels.size());
  double total = 0.0;
  Vector row_grad(logits.cols());
  for (std::size_t k = 0; k < labels.size(); ++k) {
    const auto r = static_cast<Eigen::Index>(k);
    row_grad.setZero();
    total += cross_entropy(logits.row(r).transpose(), labels[k], {}, scale,
                           row_grad, grad != nullptr);
    if (grad) grad->row(r) += row_grad.transpose();
  }
  return total / static_cast<double>(labels.size());
}

std::vector<const Paragraph*> pointers(const std::vector<Paragraph>& ps) {
  std::vector<const Paragraph*> out;
  out.reserve(ps.size());
  for (const auto& p : ps) out.push_back(&p);
  return out;
}

double global_norm(const Parameters& g, const CounterfactualBias* b) {
  double sq = 0.0;
  for (const auto& [name, m] : g.tensors()) sq += m->squaredNorm();
  if (b) sq += b->c_ans.squaredNorm() + b->c_supp.squaredNorm() + b->c_type.squaredNorm();
  return std::sqrt(sq);
}

struct Pass {
  EncoderTape tape;
  EncodedSequence rep;
};

// Encodes every layout with a tape.
std::vector<Pass> encode_all(const Model& model, const Example& ex,
                             const std::vector<Layout>& layouts,
                             const std::vector<std::size_t>& focal) {
  std::vector<Pass> passes(layouts.size());
  for (std::size_t i = 0; i < layouts.size(); ++i) {
    passes[i].rep = model.encode(layouts[i], &passes[i].tape);
    passes[i].rep.example_id = ex.id;
    passes[i].rep.focal = focal[i];
  }
  return passes;
}

struct Branch {
  std::vector<Pass> passes;
  HeadPlan plan;
  HeadCache cache;
  HeadOutputs out;
};

Branch run_branch(const Model& model, const Example& ex,
                  const std::vector<Layout>& layouts,
                  const std::vector<std::size_t>& focal, const Layout& target,
                  bool keep_cache) {
  Branch b;
  b.passes = encode_all(model, ex, layouts, focal);
  std::vector<const EncodedSequence*> reps;
  std::vector<const Matrix*> rows;
  std::vector<int> ids;
  for (std::size_t i = 0; i < b.passes.size(); ++i) {
    reps.push_back(&b.passes[i].rep);
    rows.push_back(&b.passes[i].rep.rows);
    ids.push_back(static_cast<int>(i));
  }
  b.plan = branch_plan(reps, ids, target);
  b.out = model.heads(b.plan, rows, keep_cache ? &b.cache : nullptr);
  return b;
}

void branch_backward(const Model& model, const Branch& b, const HeadOutputs& grad,
                     Parameters& grads) {
  std::vector<Matrix> d_reps;
  d_reps.reserve(b.passes.size());
  for (const auto& p : b.passes) {
    d_reps.push_back(Matrix::Zero(p.rep.rows.rows(), p.rep.rows.cols()));
  }
  model.heads_backward(b.plan, b.cache, grad, d_reps, grads);
  for (std::size_t i = 0; i < b.passes.size(); ++i) {
    model.encode_backward(b.passes[i].tape, d_reps[i], grads);
  }
}

// (parameter, gradient) data pointers of every tensor, as begin/end pairs.
std::vector<std::pair<double*, const double*>> zip_tensors(Parameters& params,
                                                           const Parameters& grads) {
  std::vector<std::pair<double*, const double*>> out;
  auto p = params.tensors();
  auto g = grads.tensors();
  for (std::size_t k = 0; k < p.size(); ++k) {
    out.emplace_back(p[k].second->data(), g[k].second->data());
    out.emplace_back(p[k].second->data() + p[k].second->size(),
                     g[k].second->data() + g[k].second->size());
  }
  return out;
}

// SGD with momentum or Adam over flat parameter ranges. `slots` holds
// (param begin, grad begin), (param end, grad end) pairs.
class OptimizerState {
 public:
  OptimizerState(const TrainConfig& config,
                 std::vector<std::pair<double*, const double*>> slots)
      : config_(config), slots_(std::move(slots)) {
    std::size_t total = 0;
    for (std::size_t k = 0; k + 1 < slots_.size(); k += 2) {
      total += static_cast<std::size_t>(slots_[k + 1].first - slots_[k].first);
    }
    first_.assign(total, 0.0);
    if (config_.optimizer == Optimizer::kAdam) second_.assign(total, 0.0);
  }

  void step(double grad_scale) {
    ++t_;
    constexpr double kBeta2 = 0.999;
    constexpr double kEps = 1e-8;
    const double b1 = config_.momentum;
    const double lr = config_.lr;
    const bool adam = config_.optimizer == Optimizer::kAdam;
    const double c1 = adam ? 1.0 - std::pow(b1, static_cast<double>(t_)) : 1.0;
    const double c2 = adam ? 1.0 - std::pow(kBeta2, static_cast<double>(t_)) : 1.0;
    std::size_t at = 0;
    for (std::size_t k = 0; k + 1 < slots_.size(); k += 2) {
      double* p = slots_[k].first;
      const double* g = slots_[k].second;
      const auto n = static_cast<std::size_t>(slots_[k + 1].first - p);
      for (std::size_t i = 0; i < n; ++i, ++at) {
        const double gi = grad_scale * g[i];
        if (adam) {
          first_[at] = b1 * first_[at] + (1.0 - b1) * gi;
          second_[at] = kBeta2 * second_[at] + (1.0 - kBeta2) * gi * gi;
          p[i] -= lr * (first_[at] / c1) / (std::sqrt(second_[at] / c2) + kEps);
        } else {
          first_[at] = b1 * first_[at] + gi;
          p[i] -= lr * first_[at];
        }
      }
    }
  }

 private:
  const TrainConfig& config_;
  std::vector<std::pair<double*, const double*>> slots_;
  std::vector<double> first_, second_;
  std::size_t t_ = 0;
};

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

}  // namespace

std::string_view to_string(TrainMode mode) {
  return mode == TrainMode::kCounterfactual ? "counterfactual" : "baseline";
}

TrainMode train_mode_from_string(std::string_view name) {
  if (name == "counterfactual") return TrainMode::kCounterfactual;
  if (name == "baseline") return TrainMode::kBaseline;
  throw Error("unknown training mode '" + std::string(name) + "'");
}

std::string_view to_string(Ablation ablation) {
  switch (ablation) {
    case Ablation::kNone: return "none";
    case Ablation::kFocal: return "cf_focal";
    case Ablation::kContext: return "cf_context";
  }
  return "none";
}

std::string_view to_string(Optimizer optimizer) {
  return optimizer == Optimizer::kAdam ? "adam" : "sgd";
}

Optimizer optimizer_from_string(std::string_view name) {
  if (name == "sgd") return Optimizer::kSgd;
  if (name == "adam") return Optimizer::kAdam;
  throw Error("unknown optimizer '" + std::string(name) + "'");
}

Ablation ablation_from_string(std::string_view name) {
  if (name == "none") return Ablation::kNone;
  if (name == "cf_focal") return Ablation::kFocal;
  if (name == "cf_context") return Ablation::kContext;
  throw Error("unknown ablation '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
  backbone.validate();
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw Error("lambda must be >= 0");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw Error("lr must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw Error("momentum must be in [0, 1)");
  if (!(clip >= 0.0)) throw Error("clip must be >= 0");
  if (epochs == 0) throw Error("epochs must be positive");
  if (batch_size == 0) throw Error("batch_size must be positive");
  if (mode == TrainMode::kCounterfactual && batch_size < 2) {
    throw Error("counterfactual training needs batch_size >= 2 for c* sampling");
  }
  if (mode == TrainMode::kBaseline && ablate != Ablation::kNone) {
    throw Error("ablations apply to counterfactual mode only");
  }
}

json TrainConfig::to_json() const {
  return {{"lambda", lambda},
          {"optimizer", to_string(optimizer)},
          {"lr", lr},
          {"momentum", momentum},
          {"clip", clip},
          {"batch_size", batch_size},
          {"epochs", epochs},
          {"seed", seed},
          {"mode", to_string(mode)},
          {"bias", to_string(bias_mode)},
          {"ablate", to_string(ablate)},
          {"resample_perturbation", resample_perturbation},
          {"detach_branches", detach_branches},
          {"backbone", backbone.to_json()}};
}

TrainConfig TrainConfig::from_json(const json& j) {
  TrainConfig c;
  c.lambda = j.at("lambda").get<double>();
  c.optimizer = optimizer_from_string(j.at("optimizer").get<std::string>());
  c.lr = j.at("lr").get<double>();
  c.momentum = j.at("momentum").get<double>();
  c.clip = j.at("clip").get<double>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.mode = train_mode_from_string(j.at("mode").get<std::string>());
  c.bias_mode = bias_mode_from_string(j.at("bias").get<std::string>());
  c.ablate = ablation_from_string(j.at("ablate").get<std::string>());
  c.resample_perturbation = j.at("resample_perturbation").get<bool>();
  c.detach_branches = j.value("detach_branches", false);
  c.backbone = BackboneConfig::from_json(j.at("backbone"));
  c.validate();
  return c;
}

GoldLabels gold_labels(const Example& ex, const Layout& layout) {
  GoldLabels gold;
  for (std::size_t p = 0; p < layout.paragraphs.size(); ++p) {
    const auto& para = ex.paragraphs[p];
    gold.para.push_back(para.is_gold ? 1 : 0);
    for (std::size_t j = 0; j < layout.paragraphs[p].sentence_starts.size(); ++j) {
      gold.sent.push_back(ex.gold_sentence_ids.count({para.title, j}) ? 1 : 0);
    }
  }
  gold.type = type_class(ex.answer_type);
  if (ex.answer_type == AnswerType::kSpan && ex.answer_span) {
    const auto p = ex.paragraph_index(ex.answer_span->title);
    std::optional<int> s, e;
    if (p) {
      s = layout.token_row(*p, ex.answer_span->start);
      e = layout.token_row(*p, ex.answer_span->end);
    }
    if (s && e) {
      gold.start = s;
      gold.end = e;
    } else {
      gold.span_out_of_range = true;
    }
  }
  return gold;
}

LossParts& LossParts::operator+=(const LossParts& o) {
  start += o.start;
  end += o.end;
  sent += o.sent;
  para += o.para;
  type += o.type;
  total += o.total;
  return *this;
}

LossParts& LossParts::operator/=(double k) {
  start /= k;
  end /= k;
  sent /= k;
  para /= k;
  type /= k;
  total /= k;
  return *this;
}

json LossParts::to_json() const {
  return {{"start", start}, {"end", end},   {"sent", sent},
          {"para", para},   {"type", type}, {"total", total}};
}

LossParts compute_loss(const HeadOutputs& fused, const GoldLabels& gold,
                       double lambda, HeadOutputs* grad) {
  if (static_cast<std::size_t>(fused.para.rows()) != gold.para.size() ||
      static_cast<std::size_t>(fused.sent.rows()) != gold.sent.size()) {
    throw Error("compute_loss: labels do not match head outputs");
  }
  const bool want = grad != nullptr;
  if (want) *grad = HeadOutputs::zeros_like(fused);
  LossParts loss;
  Vector scratch;
  if (gold.start && gold.end) {
    Vector& gs = want ? grad->start : (scratch = Vector::Zero(fused.start.size()));
    loss.start = cross_entropy(fused.start, *gold.start, fused.answerable, 1.0, gs, want);
    Vector& ge = want ? grad->end : (scratch = Vector::Zero(fused.end.size()));
    loss.end = cross_entropy(fused.end, *gold.end, fused.answerable, 1.0, ge, want);
  }
  loss.para = rows_cross_entropy(fused.para, gold.para, 1.0, want ? &grad->para : nullptr);
  loss.sent = rows_cross_entropy(fused.sent, gold.sent, lambda, want ? &grad->sent : nullptr);
  Vector& gt = want ? grad->type : (scratch = Vector::Zero(fused.type.size()));
  loss.type = cross_entropy(fused.type, gold.type, {}, 1.0, gt, want);
  loss.total = loss.start + loss.end + lambda * loss.sent + loss.para + loss.type;
  return loss;
}

json TrainCounters::to_json() const {
  return {{"steps", steps},
          {"examples", examples},
          {"perturb_calls", perturb_calls},
          {"context_samples", context_samples},
          {"span_skipped", span_skipped},
          {"encoder_passes", encoder_passes},
          {"perturb_tokens", perturb.tokens},
          {"perturb_selected", perturb.selected}};
}

std::vector<CounterfactualDraws> sample_draws(
    std::span<const Example* const> batch, const Vocabulary& vocab,
    const TrainConfig& config, Rng& rng, TrainCounters* counters) {
  std::vector<CounterfactualDraws> draws(batch.size());
  if (config.mode != TrainMode::kCounterfactual) return draws;
  std::vector<FactoredTriple> triples;
  std::vector<std::size_t> owner;
  for (std::size_t e = 0; e < batch.size(); ++e) {
    for (auto& t : factor_example(*batch[e])) {
      triples.push_back(std::move(t));
      owner.push_back(e);
    }
  }
  if (config.uses_context()) {
    for (std::size_t k = 0; k < triples.size(); ++k) {
      auto cf = sample_cf_context(triples, k, rng);
      draws[owner[k]].context.push_back(std::move(std::get<std::vector<Paragraph>>(cf.payload)));
      if (counters) ++counters->context_samples;
    }
  }
  if (config.uses_focal()) {
    for (std::size_t k = 0; k < triples.size(); ++k) {
      PerturbStats* stats = counters ? &counters->perturb : nullptr;
      CounterfactualTriple cf;
      if (config.resample_perturbation) {
        cf = perturb_focal(triples[k], rng, vocab, stats);
      } else {
        Rng fixed(mix_seed(config.seed ^ fnv1a(triples[k].example_id),
                           kFixedPerturbStream + triples[k].index));
        cf = perturb_focal(triples[k], fixed, vocab, stats);
      }
      draws[owner[k]].focal.push_back(std::move(std::get<Paragraph>(cf.payload)));
      if (counters) ++counters->perturb_calls;
    }
  }
  return draws;
}

BranchLayouts branch_layouts(const Example& ex, const CounterfactualDraws* draws,
                             std::size_t max_len) {
  BranchLayouts out;
  const auto ptrs = pointers(ex.paragraphs);
  out.factual = build_layout(ex.question, ptrs, max_len);
  if (!draws) return out;
  const auto m = ex.paragraphs.size();
  if (!draws->focal.empty()) {
    if (draws->focal.size() != m) throw Error("draws: one s* per paragraph expected");
    for (std::size_t i = 0; i < m; ++i) {
      auto swapped = ptrs;
      if (draws->focal[i].num_tokens() != ex.paragraphs[i].num_tokens()) {
        throw Error("draws: s* length differs from s");
      }
      swapped[i] = &draws->focal[i];
      out.focal.push_back(build_layout(ex.question, swapped, out.factual.kept));
    }
  }
  if (!draws->context.empty()) {
    if (draws->context.size() != m) throw Error("draws: one c* per paragraph expected");
    for (std::size_t i = 0; i < m; ++i) {
      auto mixed = pointers(draws->context[i]);
      const auto pos = std::min(i, mixed.size());
      mixed.insert(mixed.begin() + static_cast<long>(pos), &ex.paragraphs[i]);
      const auto kept = plan_truncation(ex.question.size(), mixed, max_len,
                                        std::make_pair(pos, out.factual.kept[i]));
      out.context.push_back(build_layout(ex.question, mixed, kept));
      out.context_pos.push_back(pos);
    }
  }
  return out;
}

namespace {

struct ExampleResult {
  LossParts loss;
  bool span_skipped = false;
  std::size_t passes = 0;
};

ExampleResult example_step(const Model& model, const CounterfactualBias& bias,
                           const Example& ex, const CounterfactualDraws* draws,
                           const TrainConfig& config, Parameters* grads,
                           CounterfactualBias* bias_grads) {
  const auto max_len = static_cast<std::size_t>(model.config().max_len);
  const bool want = grads != nullptr;
  BranchLayouts layouts = branch_layouts(ex, draws, max_len);

  Pass factual;
  factual.rep = model.encode(layouts.factual, want ? &factual.tape : nullptr);
  factual.rep.example_id = ex.id;
  const HeadPlan fplan = factual_plan(factual.rep.layout);
  HeadCache fcache;
  const Matrix* frows[] = {&factual.rep.rows};
  HeadOutputs f_out = model.heads(fplan, frows, want ? &fcache : nullptr);

  std::optional<Branch> focal, context;
  const Layout& target = factual.rep.layout;
  if (!layouts.focal.empty()) {
    focal = run_branch(model, ex, layouts.focal, iota(layouts.focal.size()), target, want);
  }
  if (!layouts.context.empty()) {
    context = run_branch(model, ex, layouts.context, layouts.context_pos, target, want);
  }
  if (config.zero_branches) {
    if (focal) focal->out = HeadOutputs::zeros_like(focal->out);
    if (context) context->out = HeadOutputs::zeros_like(context->out);
  }

  const HeadOutputs fused = fuse(f_out, focal ? &focal->out : nullptr,
                                 context ? &context->out : nullptr, bias);
  const GoldLabels gold = gold_labels(ex, target);
  HeadOutputs g;
  ExampleResult result;
  result.loss = compute_loss(fused, gold, config.lambda, want ? &g : nullptr);
  result.span_skipped = gold.span_out_of_range;
  result.passes = 1 + layouts.focal.size() + layouts.context.size();
  if (!want) return result;

  if (bias_grads) bias_backward(g, *bias_grads);
  Matrix d_rows = Matrix::Zero(factual.rep.rows.rows(), factual.rep.rows.cols());
  std::span<Matrix> d_span(&d_rows, 1);
  model.heads_backward(fplan, fcache, g, d_span, *grads);
  model.encode_backward(factual.tape, d_rows, *grads);
  if (!config.zero_branches && !config.detach_branches) {
    if (focal) branch_backward(model, *focal, g, *grads);
    if (context) branch_backward(model, *context, g, *grads);
  }
  return result;
}

}  // namespace

LogitsBundle forward_bundle(const Model& model, const Example& ex,
                            const CounterfactualDraws* draws,
                            const TrainConfig& config) {
  const auto max_len = static_cast<std::size_t>(model.config().max_len);
  BranchLayouts layouts = branch_layouts(ex, draws, max_len);
  LogitsBundle bundle;
  EncodedSequence o = model.encode(layouts.factual);
  bundle.factual = model.factual_heads(o);
  bundle.cf_focal = HeadOutputs::zeros_like(bundle.factual);
  bundle.cf_context = HeadOutputs::zeros_like(bundle.factual);
  if (config.zero_branches) return bundle;
  if (!layouts.focal.empty()) {
    bundle.cf_focal = run_branch(model, ex, layouts.focal, iota(layouts.focal.size()),
                                 o.layout, false).out;
  }
  if (!layouts.context.empty()) {
    bundle.cf_context = run_branch(model, ex, layouts.context, layouts.context_pos,
                                   o.layout, false).out;
  }
  return bundle;
}

LossParts batch_loss(const Model& model, const CounterfactualBias& bias,
                     std::span<const Example* const> batch,
                     std::span<const CounterfactualDraws> draws,
                     const TrainConfig& config, Parameters* grads,
                     CounterfactualBias* bias_grads, TrainCounters* counters) {
  if (batch.empty()) throw Error("batch_loss: empty batch");
  if (!draws.empty() && draws.size() != batch.size()) {
    throw Error("batch_loss: one draw set per example expected");
  }
  const auto scale = 1.0 / static_cast<double>(batch.size());
  std::vector<Parameters> local(grads ? batch.size() : 0);
  std::vector<CounterfactualBias> local_bias(bias_grads ? batch.size() : 0);
  std::vector<ExampleResult> results(batch.size());
  parallel_for(batch.size(), config.threads, [&](std::size_t e) {
    if (grads) local[e] = grads->zeros_like();
    if (bias_grads) {
      local_bias[e] = *bias_grads;
      local_bias[e].set_zero();
    }
    const CounterfactualDraws* d = draws.empty() ? nullptr : &draws[e];
    results[e] = example_step(model, bias, *batch[e], d, config,
                              grads ? &local[e] : nullptr,
                              bias_grads ? &local_bias[e] : nullptr);
  });
  LossParts mean;
  for (std::size_t e = 0; e < batch.size(); ++e) {
    const auto& r = results[e];
    mean += r.loss;
    if (counters) {
      counters->span_skipped += r.span_skipped ? 1 : 0;
      counters->encoder_passes += r.passes;
      ++counters->examples;
    }
    if (grads) {
      for (auto& [name, m] : local[e].tensors()) *m *= scale;
      *grads += local[e];
    }
    if (bias_grads) {
      local_bias[e].c_ans *= scale;
      local_bias[e].c_supp *= scale;
      local_bias[e].c_type *= scale;
      *bias_grads += local_bias[e];
    }
  }
  mean /= static_cast<double>(batch.size());
  return mean;
}

json TrainReport::to_json() const {
  json epochs_json = json::array();
  for (std::size_t e = 0; e < epochs.size(); ++e) {
    json rec = epochs[e].loss.to_json();
    rec["epoch"] = e + 1;
    rec["span_skipped"] = epochs[e].span_skipped;
    epochs_json.push_back(rec);
  }
  return {{"epochs", epochs_json},
          {"counters", counters.to_json()},
          {"final_metrics", final_metrics},
          {"wall_time_s", wall_time_s},
          {"seed", seed}};
}

std::vector<std::vector<std::size_t>> make_batches(
    std::span<const std::size_t> order, std::size_t batch_size) {
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t k = 0; k < order.size(); k += batch_size) {
    const auto end = std::min(order.size(), k + batch_size);
    batches.emplace_back(order.begin() + static_cast<long>(k),
                         order.begin() + static_cast<long>(end));
  }
  if (batches.size() >= 2 && batches.back().size() == 1) {
    batches[batches.size() - 2].push_back(batches.back().front());
    batches.pop_back();
  }
  return batches;
}

TrainResult train(std::span<const Example> dataset, const Vocabulary& vocab,
                  const TrainConfig& config, std::span<const Example> dev) {
  config.validate();
  if (dataset.empty()) throw Error("train: empty dataset");
  if (config.mode == TrainMode::kCounterfactual && dataset.size() < 2) {
    throw Error("train: counterfactual mode needs at least 2 examples");
  }
  const auto t0 = std::chrono::steady_clock::now();
  TrainResult result{Model(config.backbone, vocab.size()),
                     CounterfactualBias::zeros(config.bias_mode,
                                               static_cast<std::size_t>(config.backbone.max_len)),
                     {}};
  auto& model = result.model;
  auto& bias = result.bias;
  auto& report = result.report;
  report.seed = config.seed;

  Rng order_rng(mix_seed(config.seed, kOrderStream));
  Rng cf_rng(mix_seed(config.seed, kCounterfactualStream));
  // Baseline mode has no counterfactual bias to learn.
  const bool train_bias =
      !config.freeze_bias && config.mode == TrainMode::kCounterfactual;
  Parameters grads = model.params().zeros_like();
  CounterfactualBias bias_grads = bias;
  bias_grads.set_zero();
  std::vector<std::pair<double*, const double*>> slots;
  for (auto [p, g] : zip_tensors(model.params(), grads)) slots.emplace_back(p, g);
  auto add_bias = [&](Vector& p, const Vector& g) {
    slots.emplace_back(p.data(), g.data());
    slots.emplace_back(p.data() + p.size(), g.data() + g.size());
  };
  if (train_bias) {
    add_bias(bias.c_ans, bias_grads.c_ans);
    add_bias(bias.c_supp, bias_grads.c_supp);
    add_bias(bias.c_type, bias_grads.c_type);
  }
  OptimizerState optimizer(config, slots);

  std::vector<std::size_t> order = iota(dataset.size());
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), order_rng);
    EpochRecord record;
    const auto skipped_before = report.counters.span_skipped;
    const auto batches = make_batches(order, config.batch_size);
    for (const auto& idx : batches) {
      std::vector<const Example*> batch;
      for (auto k : idx) batch.push_back(&dataset[k]);
      const auto draws = sample_draws(batch, vocab, config, cf_rng, &report.counters);
      grads.set_zero();
      bias_grads.set_zero();
      const auto loss = batch_loss(model, bias, batch, draws, config, &grads,
                                   &bias_grads, &report.counters);
      const auto step = report.counters.steps++;
      if (!std::isfinite(loss.total)) {
        throw DivergenceError(step, "training diverged: non-finite loss at step " +
                                        std::to_string(step));
      }
      report.step_losses.push_back(loss.total);
      record.loss += loss;

      const double norm = global_norm(grads, train_bias ? &bias_grads : nullptr);
      if (!std::isfinite(norm)) {
        throw DivergenceError(step, "training diverged: non-finite gradient at step " +
                                        std::to_string(step));
      }
      optimizer.step(config.clip > 0.0 && norm > config.clip ? config.clip / norm : 1.0);
    }
    record.loss /= static_cast<double>(batches.size());
    record.span_skipped = report.counters.span_skipped - skipped_before;
    report.epochs.push_back(record);
  }

  if (!dev.empty()) {
    const auto preds = predict_all(model, bias, dev, vocab, config.threads);
    const auto m = evaluate(dev, preds, {}, {}, vocab).to_json();
    json snapshot = json::object();
    for (const auto& [name, cell] : m.at("metrics").items()) {
      snapshot[name] = {{"em", cell.at("em").at("original")},
                        {"f1", cell.at("f1").at("original")}};
    }
    report.final_metrics = snapshot;
  }
  report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

TrainResult ablate_branch(std::span<const Example> dataset,
                          const Vocabulary& vocab, TrainConfig config,
                          Ablation drop, std::span<const Example> dev) {
  if (drop == Ablation::kNone) throw Error("ablate_branch: choose a branch to drop");
  config.mode = TrainMode::kCounterfactual;
  config.ablate = drop;
  return train(dataset, vocab, config, dev);
}

}  // namespace cfqa
