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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cfqa/effects.hpp"
#include "cfqa/factorize.hpp"
#include "cfqa/metrics.hpp"
#include "cfqa/predict.hpp"
#include "cfqa/probe.hpp"
#include "cfqa/trainer.hpp"
#include "oracle.hpp"
#include "pipeline.hpp"
#include "test_util.hpp"

namespace cfqa {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// Random HeadOutputs with random shapes; optionally dyadic values so that
// sums and differences are exact in double precision.
HeadOutputs shaped_heads(Rng& rng, int paras, int sents, int n, bool dyadic) {
  auto h = testing::random_heads(rng, paras, sents, n);
  if (dyadic) {
    auto round = [](double x) { return std::round(x * 1024.0) / 1024.0; };
    h.para = h.para.unaryExpr(round);
    h.sent = h.sent.unaryExpr(round);
    h.start = h.start.unaryExpr(round);
    h.end = h.end.unaryExpr(round);
    h.type = h.type.unaryExpr(round);
  }
  return h;
}

// 1. fuse / infer against an elementwise oracle, and the TIE identity.
Outcome fusion_algebra() {
  Rng rng(101);
  double worst = 0.0;
  bool identity_exact = true;
  double identity_worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int paras = uniform_int(rng, 1, 10);
    const int sents = uniform_int(rng, paras, 40);
    const int n = uniform_int(rng, 1, 128);
    const auto mode = trial % 2 ? BiasMode::kUniform : BiasMode::kRandom;
    const bool dyadic = trial % 4 < 2;
    LogitsBundle b{shaped_heads(rng, paras, sents, n, dyadic),
                   shaped_heads(rng, paras, sents, n, dyadic),
                   shaped_heads(rng, paras, sents, n, dyadic)};
    auto c = testing::random_bias(rng, mode, 128);
    if (dyadic) {
      auto round = [](double x) { return std::round(x * 1024.0) / 1024.0; };
      c.c_ans = c.c_ans.unaryExpr(round);
      c.c_supp = c.c_supp.unaryExpr(round);
      c.c_type = c.c_type.unaryExpr(round);
    }
    const auto fused = fuse(b, c);
    const auto inferred = infer(b.factual, c);
    auto cs = [&](int k) { return c.mode == BiasMode::kUniform ? c.c_supp(0) : c.c_supp(k); };
    auto ca = [&](int t) { return c.mode == BiasMode::kUniform ? c.c_ans(0) : c.c_ans(t); };
    auto ct = [&](int k) { return c.mode == BiasMode::kUniform ? c.c_type(0) : c.c_type(k); };
    auto track = [&](double got, double want) { worst = std::max(worst, std::abs(got - want)); };
    for (int i = 0; i < paras; ++i) {
      for (int k = 0; k < 2; ++k) {
        track(fused.para(i, k),
              b.factual.para(i, k) + b.cf_focal.para(i, k) + b.cf_context.para(i, k) - cs(k));
        track(inferred.para(i, k), b.factual.para(i, k) - cs(k));
      }
    }
    for (int i = 0; i < sents; ++i) {
      for (int k = 0; k < 2; ++k) {
        track(fused.sent(i, k),
              b.factual.sent(i, k) + b.cf_focal.sent(i, k) + b.cf_context.sent(i, k) - cs(k));
        track(inferred.sent(i, k), b.factual.sent(i, k) - cs(k));
      }
    }
    for (int t = 0; t < n; ++t) {
      track(fused.start(t), b.factual.start(t) + b.cf_focal.start(t) + b.cf_context.start(t) - ca(t));
      track(fused.end(t), b.factual.end(t) + b.cf_focal.end(t) + b.cf_context.end(t) - ca(t));
      track(inferred.start(t), b.factual.start(t) - ca(t));
      track(inferred.end(t), b.factual.end(t) - ca(t));
    }
    for (int k = 0; k < kNumTypes; ++k) {
      track(fused.type(k), b.factual.type(k) + b.cf_focal.type(k) + b.cf_context.type(k) - ct(k));
      track(inferred.type(k), b.factual.type(k) - ct(k));
    }
    // fuse - cf_focal - cf_context == factual - C.
    auto tie_para = fused.para - b.cf_focal.para - b.cf_context.para;
    auto tie_sent = fused.sent - b.cf_focal.sent - b.cf_context.sent;
    Vector tie_start = fused.start - b.cf_focal.start - b.cf_context.start;
    Vector tie_end = fused.end - b.cf_focal.end - b.cf_context.end;
    Vector tie_type = fused.type - b.cf_focal.type - b.cf_context.type;
    const double gap = std::max({(tie_para - inferred.para).cwiseAbs().maxCoeff(),
                                 (tie_sent - inferred.sent).cwiseAbs().maxCoeff(),
                                 (tie_start - inferred.start).cwiseAbs().maxCoeff(),
                                 (tie_end - inferred.end).cwiseAbs().maxCoeff(),
                                 (tie_type - inferred.type).cwiseAbs().maxCoeff()});
    if (dyadic && gap != 0.0) identity_exact = false;
    identity_worst = std::max(identity_worst, gap);
  }
  Outcome o;
  o.pass = worst <= 1e-12 && identity_exact && identity_worst <= 1e-12;
  o.detail = "max oracle gap " + fmt("%.3g", worst) + ", TIE gap " +
             fmt("%.3g", identity_worst) + (identity_exact ? ", exact on dyadic inputs" : ", NOT exact");
  return o;
}

// 2. Uniform C never changes an argmax.
Eigen::Index row_argmax(const Matrix& m, Eigen::Index r) {
  Eigen::Index k = 0;
  m.row(r).maxCoeff(&k);
  return k;
}

Eigen::Index vec_argmax(const Vector& v) {
  Eigen::Index k = 0;
  v.maxCoeff(&k);
  return k;
}

Outcome uniform_invariance() {
  Rng rng(202);
  std::size_t decisions = 0, flips = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const int paras = uniform_int(rng, 1, 10);
    const int sents = uniform_int(rng, paras, 40);
    const int n = uniform_int(rng, 2, 128);
    const auto h = testing::random_heads(rng, paras, sents, n);
    const auto c = testing::random_bias(rng, BiasMode::kUniform, 128);
    const auto y = infer(h, c);
    for (Eigen::Index i = 0; i < h.para.rows(); ++i, ++decisions) {
      flips += row_argmax(h.para, i) != row_argmax(y.para, i);
    }
    for (Eigen::Index i = 0; i < h.sent.rows(); ++i, ++decisions) {
      flips += row_argmax(h.sent, i) != row_argmax(y.sent, i);
    }
    flips += vec_argmax(masked(h.start, h.answerable)) != vec_argmax(masked(y.start, y.answerable));
    flips += vec_argmax(masked(h.end, h.answerable)) != vec_argmax(masked(y.end, y.answerable));
    flips += vec_argmax(h.type) != vec_argmax(y.type);
    decisions += 3;
  }
  return {flips == 0, std::to_string(decisions) + " decisions, " + std::to_string(flips) + " changed"};
}

// 3. s* perturbation statistics; q and c untouched.
Outcome perturbation_statistics() {
  GenConfig gc;
  gc.num_examples = 2000;
  gc.seed = 3;
  const auto corpus = generate_dataset(gc);
  Rng rng(303);
  PerturbStats stats;
  std::size_t mask_tokens = 0, changed = 0;
  bool untouched = true;
  while (stats.tokens < 1000000) {
    for (const auto& ex : corpus.examples) {
      for (const auto& t : factor_example(ex)) {
        const auto cf = perturb_focal(t, rng, corpus.vocab, &stats);
        untouched = untouched && cf.base.question == t.question &&
                    cf.base.context.size() == t.context.size();
        for (std::size_t k = 0; untouched && k < t.context.size(); ++k) {
          untouched = cf.base.context[k].sentences == t.context[k].sentences &&
                      cf.base.context[k].title == t.context[k].title;
        }
        const auto& s = t.focal.sentences;
        const auto& s_star = cf.focal().sentences;
        for (std::size_t j = 0; j < s.size(); ++j) {
          for (std::size_t k = 0; k < s[j].size(); ++k) {
            if (s_star[j][k] == Vocabulary::kMask) ++mask_tokens;
            else if (s_star[j][k] != s[j][k]) ++changed;
          }
        }
      }
      if (stats.tokens >= 1000000) break;
    }
  }
  const double sel = static_cast<double>(stats.selected) / static_cast<double>(stats.tokens);
  const double rnd = static_cast<double>(stats.randomized) / static_cast<double>(stats.selected);
  const double msk = static_cast<double>(stats.masked) / static_cast<double>(stats.selected);
  const double kpt = static_cast<double>(stats.kept) / static_cast<double>(stats.selected);
  Outcome o;
  o.pass = stats.tokens >= 1000000 && std::abs(sel - 0.15) <= 0.005 &&
           std::abs(rnd - 0.8) <= 0.01 && std::abs(msk - 0.1) <= 0.01 &&
           std::abs(kpt - 0.1) <= 0.01 && untouched && mask_tokens == stats.masked &&
           changed <= stats.randomized;
  o.detail = std::to_string(stats.tokens) + " tokens, selected " + fmt("%.4f", sel) +
             ", random/mask/keep " + fmt("%.4f", rnd) + "/" + fmt("%.4f", msk) + "/" +
             fmt("%.4f", kpt) + (untouched ? ", q and c identical" : ", q or c CHANGED");
  return o;
}

// 4. Probe construction.
Outcome probe_construction() {
  GenConfig gc;
  gc.num_examples = 1000;
  gc.seed = 4;
  const auto corpus = generate_dataset(gc);
  const auto probe = build_probe(corpus.examples);
  std::size_t bad = 0;
  bool two_each = probe.size() == corpus.examples.size();
  for (std::size_t i = 0; two_each && i < probe.size(); ++i) {
    const auto& ex = corpus.examples[i];
    const auto& pair = probe[i];
    bool ok = pair.origin_id == ex.id;
    std::map<std::string, const Paragraph*> seen;
    for (const auto* inst : {&pair.instance_a, &pair.instance_b}) {
      const auto gold = std::count_if(inst->paragraphs.begin(), inst->paragraphs.end(),
                                      [](const Paragraph& p) { return p.is_gold; });
      ok = ok && gold == 1 && inst->gold_para_titles.size() == 1 &&
           inst->question == ex.question;
      for (const auto& p : inst->paragraphs) {
        auto [it, fresh] = seen.emplace(p.title, &p);
        if (!fresh) ok = ok && it->second->sentences == p.sentences;
      }
    }
    // Every original paragraph comes back, content and gold flag included.
    ok = ok && seen.size() == ex.paragraphs.size();
    for (const auto& p : ex.paragraphs) {
      auto it = seen.find(p.title);
      ok = ok && it != seen.end() && it->second->sentences == p.sentences &&
           it->second->is_gold == p.is_gold;
    }
    std::set<std::string> gold = pair.instance_a.gold_para_titles;
    gold.insert(pair.instance_b.gold_para_titles.begin(), pair.instance_b.gold_para_titles.end());
    std::set<SentenceRef> sents = pair.instance_a.gold_sentence_ids;
    sents.insert(pair.instance_b.gold_sentence_ids.begin(), pair.instance_b.gold_sentence_ids.end());
    ok = ok && gold == ex.gold_para_titles && sents == ex.gold_sentence_ids;
    if (!ok) ++bad;
  }
  return {two_each && bad == 0,
          std::to_string(probe.size()) + " pairs from " + std::to_string(corpus.examples.size()) +
              " examples, " + std::to_string(bad) + " failed reconstruction"};
}

// 5. Metrics against the brute-force scorer.
Outcome metric_oracle() {
  GenConfig gc;
  gc.num_examples = 50;
  gc.seed = 5;
  const auto corpus = generate_dataset(gc);
  const auto probe = build_probe(corpus.examples);
  const auto& vocab = corpus.vocab;
  Rng rng(505);
  double worst = 0.0;
  std::size_t violations = 0;
  for (int set = 0; set < 200; ++set) {
    std::vector<Prediction> preds, random_probe, restricted_probe;
    for (const auto& ex : corpus.examples) preds.push_back(testing::random_prediction(ex, vocab, rng));
    for (std::size_t i = 0; i < probe.size(); ++i) {
      for (const auto* inst : {&probe[i].instance_a, &probe[i].instance_b}) {
        random_probe.push_back(testing::random_prediction(*inst, vocab, rng));
        restricted_probe.push_back(testing::restrict_prediction(preds[i], *inst));
      }
    }
    for (const auto* probe_preds : {&random_probe, &restricted_probe}) {
      const auto r = evaluate(corpus.examples, preds, probe, *probe_preds, vocab);
      const auto o = testing::oracle_report(corpus.examples, preds, probe, *probe_preds, vocab);
      for (int m = 0; m < kNumMetrics; ++m) {
        worst = std::max({worst, std::abs(r.em[m].original - o[m].em_orig),
                          std::abs(r.f1[m].original - o[m].f1_orig),
                          std::abs(r.em[m].dire - o[m].em_dire),
                          std::abs(r.f1[m].dire - o[m].f1_dire)});
        if (probe_preds == &restricted_probe &&
            (r.em[m].dire > r.em[m].original + 1e-12 || r.f1[m].dire > r.f1[m].original + 1e-12)) {
          ++violations;
        }
      }
    }
  }
  return {worst <= 1e-9 && violations == 0,
          "400 reports, max gap " + fmt("%.3g", worst) + ", " + std::to_string(violations) +
              " dire > original"};
}

// 6. Finite differences on a 3-example batch.
Outcome gradient_check() {
  GenConfig gc;
  gc.num_examples = 3;
  gc.seed = 6;
  const auto corpus = generate_dataset(gc);
  TrainConfig config;
  config.threads = 1;
  const Model model(config.backbone, corpus.vocab.size());
  Rng rng(606);
  std::vector<const Example*> batch;
  for (const auto& ex : corpus.examples) batch.push_back(&ex);
  const auto draws = sample_draws(batch, corpus.vocab, config, rng);
  double worst = 0.0;
  std::size_t checked = 0;
  const double eps = 1e-5;
  auto rel = [](double a, double b) { return testing::relative_error(a, b, 1e-5); };
  for (auto mode : {BiasMode::kRandom, BiasMode::kUniform}) {
    config.bias_mode = mode;
    auto bias = testing::random_bias(rng, mode, static_cast<std::size_t>(config.backbone.max_len));
    bias.c_ans *= 0.1;
    auto grads = model.params().zeros_like();
    auto bias_grads = CounterfactualBias::zeros(mode, static_cast<std::size_t>(config.backbone.max_len));
    batch_loss(model, bias, batch, draws, config, &grads, &bias_grads);
    for (auto [v, g] : {std::pair{&bias.c_ans, &bias_grads.c_ans},
                        std::pair{&bias.c_supp, &bias_grads.c_supp},
                        std::pair{&bias.c_type, &bias_grads.c_type}}) {
      for (Eigen::Index i = 0; i < v->size(); ++i) {
        const double orig = (*v)(i);
        (*v)(i) = orig + eps;
        const double up = batch_loss(model, bias, batch, draws, config).total;
        (*v)(i) = orig - eps;
        const double down = batch_loss(model, bias, batch, draws, config).total;
        (*v)(i) = orig;
        worst = std::max(worst, rel((up - down) / (2 * eps), (*g)(i)));
        ++checked;
      }
    }
    if (mode == BiasMode::kUniform) break;
    // 100 weights: a random tensor, then a random entry; embedding rows are
    // drawn among those the batch uses.
    Model work = model;
    auto tensors = work.params().tensors();
    auto gt = grads.tensors();
    int sampled = 0;
    while (sampled < 100) {
      const auto t = uniform_int<std::size_t>(rng, 0, tensors.size() - 1);
      Matrix& w = *tensors[t].second;
      const auto i = uniform_int<Eigen::Index>(rng, 0, w.size() - 1);
      const bool embedding = tensors[t].first.find("emb") != std::string::npos;
      if (embedding && gt[t].second->row(i / w.cols()).isZero(0.0)) continue;
      const double orig = w.data()[i];
      w.data()[i] = orig + eps;
      const double up = batch_loss(work, bias, batch, draws, config).total;
      w.data()[i] = orig - eps;
      const double down = batch_loss(work, bias, batch, draws, config).total;
      w.data()[i] = orig;
      worst = std::max(worst, rel((up - down) / (2 * eps), gt[t].second->data()[i]));
      ++checked;
      ++sampled;
    }
  }
  return {worst < 1e-4, std::to_string(checked) + " entries, max relative error " + fmt("%.3g", worst)};
}

// 7. Directional end-to-end comparison.
struct RunResult {
  MetricReport report;
  double seconds = 0.0;
};

double median3(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

Outcome end_to_end() {
  GenConfig gc;
  gc.num_examples = 2000;
  gc.num_paragraphs = 4;
  gc.entity_pool = 100;
  gc.seed = 1;
  const auto corpus = generate_dataset(gc);
  const std::vector<Example> train_set(corpus.examples.begin(), corpus.examples.begin() + 1600);
  const std::vector<Example> dev(corpus.examples.begin() + 1600, corpus.examples.end());
  const auto probe = build_probe(dev);
  std::vector<Example> instances;
  for (const auto& p : probe) {
    instances.push_back(p.instance_a);
    instances.push_back(p.instance_b);
  }
  struct Variant {
    const char* name;
    TrainMode mode;
    Ablation ablate;
  };
  const Variant variants[] = {{"baseline", TrainMode::kBaseline, Ablation::kNone},
                              {"counterfactual", TrainMode::kCounterfactual, Ablation::kNone},
                              {"-cf_focal", TrainMode::kCounterfactual, Ablation::kFocal},
                              {"-cf_context", TrainMode::kCounterfactual, Ablation::kContext}};
  std::map<std::string, std::vector<RunResult>> runs;
  double slowest = 0.0;
  for (std::uint64_t seed : {1, 2, 3}) {
    for (const auto& v : variants) {
      TrainConfig c;
      c.seed = seed;
      c.mode = v.mode;
      c.ablate = v.ablate;
      c.optimizer = Optimizer::kAdam;
      c.lr = 0.002;
      c.epochs = 8;
      const auto t0 = Clock::now();
      const auto r = train(train_set, corpus.vocab, c);
      const auto preds = predict_all(r.model, r.bias, dev, corpus.vocab);
      const auto probe_preds = predict_all(r.model, r.bias, instances, corpus.vocab);
      RunResult rr{evaluate(dev, preds, probe, probe_preds, corpus.vocab), seconds_since(t0)};
      slowest = std::max(slowest, rr.seconds);
      std::printf("  seed %llu %-15s %6.0fs  Ans F1 %.4f  Supp_p EM dire %.4f  Supp_s EM dire %.4f\n",
                  static_cast<unsigned long long>(seed), v.name, rr.seconds,
                  rr.report.f1[kAns].original, rr.report.em[kSuppP].dire,
                  rr.report.em[kSuppS].dire);
      std::fflush(stdout);
      runs[v.name].push_back(rr);
    }
  }
  auto med = [&](const std::string& name, auto get) {
    std::vector<double> v;
    for (const auto& r : runs[name]) v.push_back(get(r.report));
    return median3(v);
  };
  auto dire_em = [](int m) { return [m](const MetricReport& r) { return r.em[m].dire; }; };
  auto dire_f1 = [](int m) { return [m](const MetricReport& r) { return r.f1[m].dire; }; };
  auto ans_f1 = [](const MetricReport& r) { return r.f1[kAns].original; };
  const double base = med("baseline", dire_em(kSuppP));
  const double full = med("counterfactual", dire_em(kSuppP));
  const bool relative = full <= 0.8 * base;
  const double ans_gap = std::abs(med("counterfactual", ans_f1) - med("baseline", ans_f1));
  // Reduction of dire relative to baseline on the four supp cells.
  auto reductions = [&](const std::string& name) {
    return std::vector<double>{med("baseline", dire_em(kSuppP)) - med(name, dire_em(kSuppP)),
                               med("baseline", dire_f1(kSuppP)) - med(name, dire_f1(kSuppP)),
                               med("baseline", dire_em(kSuppS)) - med(name, dire_em(kSuppS)),
                               med("baseline", dire_f1(kSuppS)) - med(name, dire_f1(kSuppS))};
  };
  const auto full_red = reductions("counterfactual");
  bool ablations = true;
  for (const char* name : {"-cf_focal", "-cf_context"}) {
    const auto red = reductions(name);
    bool any = false;
    for (std::size_t k = 0; k < red.size(); ++k) any = any || red[k] < full_red[k];
    ablations = ablations && any;
  }
  Outcome o;
  o.pass = relative && ans_gap <= 0.05 && ablations && slowest < 900.0;
  o.detail = "median dire Supp_p EM " + fmt("%.4f", full) + " vs baseline " + fmt("%.4f", base) +
             (relative ? " (>=20% lower)" : " (NOT 20% lower)") + ", Ans F1 gap " +
             fmt("%.4f", ans_gap) + (ablations ? ", ablations weaker" : ", ablations NOT weaker") +
             ", slowest run " + fmt("%.0fs", slowest);
  return o;
}

// 8. Full pipeline twice, byte-identical reports.
Outcome determinism() {
  const std::string config =
      "gen.num_examples = 300\n"
      "gen.num_paragraphs = 4\n"
      "gen.seed = 8\n"
      "train.epochs = 1\n"
      "train.optimizer = adam\n"
      "train.lr = 0.002\n"
      "train.seed = 8\n";
  const auto a = testing::make_workspace("cfqa_accept_det_a", config);
  const auto b = testing::make_workspace("cfqa_accept_det_b", config);
  testing::run_pipeline(a, {"--threads", "1"});
  testing::run_pipeline(b, {"--threads", "2"});
  bool same = true;
  for (const char* f : {"report.json", "report.txt", "predictions.json", "probe_predictions.json"}) {
    same = same && testing::read_file(a / f) == testing::read_file(b / f) &&
           !testing::read_file(a / f).empty();
  }
  return {same, same ? "report.json, report.txt and predictions identical"
                     : "outputs differ between runs"};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace
}  // namespace cfqa

int main(int argc, char** argv) {
  using namespace cfqa;
  CLI::App app("cfqa acceptance suite");
  std::vector<int> selected;
  app.add_option("--criterion", selected, "Criteria to run (default: all)")
      ->check(CLI::Range(1, 8));
  CLI11_PARSE(app, argc, argv);
  const std::vector<Criterion> all = {
      {1, "fusion and TIE algebra", 10, fusion_algebra},
      {2, "uniform-C argmax invariance", 10, uniform_invariance},
      {3, "perturbation statistics", 30, perturbation_statistics},
      {4, "probe construction", 10, probe_construction},
      {5, "metric oracle", 30, metric_oracle},
      {6, "gradient check", 120, gradient_check},
      {7, "directional end-to-end", 12 * 900, end_to_end},
      {8, "determinism", 1200, determinism},
  };
  bool ok = true;
  for (const auto& c : all) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) {
      continue;
    }
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double s = seconds_since(t0);
    const bool in_time = s < c.budget_s;
    const bool pass = o.pass && in_time;
    ok = ok && pass;
    std::printf("criterion %d (%s): %s: %s; %.1fs of %.0fs%s\n", c.id, c.name,
                pass ? "PASS" : "FAIL", o.detail.c_str(), s, c.budget_s,
                in_time ? "" : " (over budget)");
    std::fflush(stdout);
  }
  return ok ? 0 : 1;
}
