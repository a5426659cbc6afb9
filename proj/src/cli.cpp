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

#include "cfqa/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "cfqa/checkpoint.hpp"
#include "cfqa/config.hpp"
#include "cfqa/corpus.hpp"
#include "cfqa/metrics.hpp"
#include "cfqa/predict.hpp"
#include "cfqa/probe.hpp"
#include "cfqa/trainer.hpp"

namespace cfqa {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kTrainFile = "train.jsonl";
constexpr const char* kDevFile = "dev.jsonl";
constexpr const char* kVocabFile = "vocab.json";

struct Workspace {
  fs::path root;

  // Relative paths only, and never above the root.
  fs::path resolve(const std::string& rel) const {
    const fs::path p(rel);
    if (rel.empty()) throw Error("empty path");
    if (p.is_absolute() || p.has_root_name()) {
      throw Error("path must be relative to the workspace: " + rel);
    }
    const auto norm = p.lexically_normal();
    if (norm.empty() || *norm.begin() == "..") {
      throw Error("path escapes the workspace: " + rel);
    }
    return root / norm;
  }

  fs::path output(const std::string& rel) const {
    auto path = resolve(rel);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    return path;
  }
};

// The invocation with --workspace removed, so that artifacts do not depend
// on where the workspace lives.
std::string command_line(const std::vector<std::string>& args) {
  std::string out;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--workspace") {
      ++i;
      continue;
    }
    if (args[i].rfind("--workspace=", 0) == 0) continue;
    if (!out.empty()) out += ' ';
    out += args[i];
  }
  return out;
}

json make_meta(const std::string& command, const json& config,
               std::optional<std::uint64_t> seed) {
  return {{"producer", "cfqa"},
          {"command", command},
          {"config_hash", config_hash(config)},
          {"seed", seed ? json(*seed) : json(nullptr)},
          {"config", config}};
}

struct ConfigSections {
  KeyValues gen;
  KeyValues train;
};

// Config keys are "gen.<key>" or "train.<key>".
ConfigSections load_config(const Workspace& ws, const std::optional<std::string>& path) {
  ConfigSections out;
  if (!path) return out;
  for (const auto& [key, value] : read_key_values(ws.resolve(*path))) {
    const auto dot = key.find('.');
    const auto section = key.substr(0, dot);
    const auto name = dot == std::string::npos ? std::string() : key.substr(dot + 1);
    if (section == "gen" && !name.empty()) {
      out.gen[name] = value;
    } else if (section == "train" && !name.empty()) {
      out.train[name] = value;
    } else {
      throw Error("config: key '" + key + "' must start with gen. or train.");
    }
  }
  return out;
}

// Flag values, keyed like the config file, that override it.
using Overrides = std::vector<std::pair<std::string, std::optional<std::string>>>;

KeyValues merge(KeyValues base, const Overrides& flags) {
  for (const auto& [key, value] : flags) {
    if (value) base[key] = *value;
  }
  return base;
}

std::optional<std::uint64_t> meta_seed(const json& meta) {
  if (meta.is_object() && meta.contains("seed") && meta["seed"].is_number_unsigned()) {
    return meta["seed"].get<std::uint64_t>();
  }
  return std::nullopt;
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(1) << '\n';
  if (!out) throw Error("write failed: " + path.string());
}

std::vector<Example> probe_instances(std::span<const ProbePair> pairs) {
  std::vector<Example> out;
  out.reserve(pairs.size() * 2);
  for (const auto& p : pairs) {
    out.push_back(p.instance_a);
    out.push_back(p.instance_b);
  }
  return out;
}

struct Options {
  std::string workspace;
  std::optional<std::string> config;

  // gen-data
  std::string gen_out = "data";
  std::optional<std::string> hotpotqa;
  std::optional<std::string> num_examples, num_paragraphs, entity_pool, gen_seed;
  std::optional<std::string> dev_fraction;

  // train
  std::string data_dir = "data";
  std::string ckpt_out = "model.ckpt.json";
  std::optional<std::string> train_report;
  std::optional<std::string> mode, ablate, bias, lambda, train_seed, epochs, lr,
      optimizer, batch_size;
  std::size_t threads = 0;

  // eval
  std::string checkpoint = "model.ckpt.json";
  std::string vocab = "data/vocab.json";
  std::optional<std::string> eval_data, eval_probe;
  std::string preds_out = "predictions.json";

  // probe-gen
  std::string probe_data = "data/dev.jsonl";
  std::string probe_out = "probe.jsonl";

  // report
  std::string report_data = "data/dev.jsonl";
  std::string report_probe = "probe.jsonl";
  std::string predictions = "predictions.json";
  std::string probe_predictions = "probe_predictions.json";
  std::string report_out = "report";
};

json run_gen_data(const Options& o, const Workspace& ws, const std::string& cmd) {
  const auto sections = load_config(ws, o.config);
  KeyValues values = merge(sections.gen, {{"num_examples", o.num_examples},
                                          {"num_paragraphs", o.num_paragraphs},
                                          {"entity_pool", o.entity_pool},
                                          {"seed", o.gen_seed},
                                          {"dev_fraction", o.dev_fraction}});
  double dev_fraction = 0.2;
  if (auto it = values.find("dev_fraction"); it != values.end()) {
    try {
      std::size_t used = 0;
      dev_fraction = std::stod(it->second, &used);
      if (used != it->second.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw Error("config: bad value '" + it->second + "' for dev_fraction");
    }
    values.erase(it);
  }
  if (!(dev_fraction >= 0.0 && dev_fraction < 1.0)) {
    throw Error("dev_fraction must be in [0, 1)");
  }

  Vocabulary vocab;
  std::vector<Example> examples;
  json config;
  std::optional<std::uint64_t> seed;
  json extra = json::object();
  if (o.hotpotqa) {
    if (!values.empty()) {
      throw Error("generator settings do not apply to --hotpotqa ingestion");
    }
    auto report = load_hotpotqa(ws.resolve(*o.hotpotqa), vocab, true);
    examples = std::move(report.examples);
    config = {{"source", *o.hotpotqa}, {"dev_fraction", dev_fraction}};
    extra = {{"records", report.records},
             {"skipped_unlocatable", report.skipped_unlocatable},
             {"skipped_structure", report.skipped_structure}};
  } else {
    GenConfig gen;
    apply_config(values, gen);
    auto corpus = generate_dataset(gen);
    vocab = std::move(corpus.vocab);
    examples = std::move(corpus.examples);
    config = gen.to_json();
    config["dev_fraction"] = dev_fraction;
    seed = gen.seed;
  }

  const auto num_dev = static_cast<std::size_t>(
      std::llround(dev_fraction * static_cast<double>(examples.size())));
  const auto num_train = examples.size() - num_dev;
  const json meta = make_meta(cmd, config, seed);
  const std::span<const Example> all(examples);
  write_jsonl(ws.output(o.gen_out + "/" + kTrainFile), all.first(num_train), meta);
  write_jsonl(ws.output(o.gen_out + "/" + kDevFile), all.subspan(num_train), meta);
  write_vocabulary(ws.output(o.gen_out + "/" + kVocabFile), vocab);
  json summary = {{"train", num_train}, {"dev", num_dev}, {"vocab", vocab.size()},
                  {"config_hash", meta["config_hash"]}};
  summary.update(extra);
  return summary;
}

json run_train(const Options& o, const Workspace& ws, const std::string& cmd) {
  const auto sections = load_config(ws, o.config);
  const KeyValues values = merge(sections.train, {{"mode", o.mode},
                                                  {"ablate", o.ablate},
                                                  {"bias", o.bias},
                                                  {"lambda", o.lambda},
                                                  {"seed", o.train_seed},
                                                  {"epochs", o.epochs},
                                                  {"lr", o.lr},
                                                  {"optimizer", o.optimizer},
                                                  {"batch_size", o.batch_size}});
  TrainConfig config;
  apply_config(values, config);
  config.threads = o.threads;

  const auto vocab = read_vocabulary(ws.resolve(o.data_dir + "/" + kVocabFile));
  const auto train_set = read_jsonl(ws.resolve(o.data_dir + "/" + kTrainFile));
  std::vector<Example> dev;
  const auto dev_path = ws.resolve(o.data_dir + "/" + kDevFile);
  if (fs::exists(dev_path)) dev = read_jsonl(dev_path);

  auto result = train(train_set, vocab, config, dev);
  const json meta = make_meta(cmd, config.to_json(), config.seed);
  save_checkpoint(ws.output(o.ckpt_out), result.model, result.bias, config, vocab, meta);

  auto report_path = o.train_report;
  if (!report_path) {
    auto stem = o.ckpt_out;
    if (stem.size() > 5 && stem.ends_with(".json")) stem.resize(stem.size() - 5);
    report_path = stem + ".train.json";
  }
  json report = result.report.to_json();
  report["meta"] = meta;
  write_json_file(ws.output(*report_path), report);

  const auto& last = result.report.epochs.back().loss;
  return {{"checkpoint", o.ckpt_out},
          {"train_report", *report_path},
          {"final_loss", last.total},
          {"config_hash", meta["config_hash"]}};
}

json run_eval(const Options& o, const Workspace& ws, const std::string& cmd) {
  if (o.eval_data.has_value() == o.eval_probe.has_value()) {
    throw Error("eval needs exactly one of --data or --probe");
  }
  const auto vocab = read_vocabulary(ws.resolve(o.vocab));
  const auto ckpt = load_checkpoint(ws.resolve(o.checkpoint), &vocab);
  std::vector<Example> examples;
  if (o.eval_data) {
    examples = read_jsonl(ws.resolve(*o.eval_data));
  } else {
    examples = probe_instances(read_probe(ws.resolve(*o.eval_probe)));
  }
  const auto preds = predict_all(ckpt.model, ckpt.bias, examples, vocab, o.threads);
  const json meta = make_meta(cmd, ckpt.config.to_json(), ckpt.config.seed);
  write_predictions(ws.output(o.preds_out), preds, meta);
  return {{"predictions", o.preds_out},
          {"count", preds.size()},
          {"config_hash", meta["config_hash"]}};
}

json run_probe_gen(const Options& o, const Workspace& ws, const std::string& cmd) {
  const auto dataset = read_jsonl(ws.resolve(o.probe_data));
  const auto pairs = build_probe(dataset);
  const json config = {{"source", o.probe_data}};
  const json meta = make_meta(cmd, config, std::nullopt);
  write_probe(ws.output(o.probe_out), pairs, meta);
  return {{"probe", o.probe_out}, {"pairs", pairs.size()}};
}

json run_report(const Options& o, const Workspace& ws, const std::string& cmd) {
  const auto vocab = read_vocabulary(ws.resolve(o.vocab));
  const auto dataset = read_jsonl(ws.resolve(o.report_data));
  const auto probe = read_probe(ws.resolve(o.report_probe));
  const auto pred_path = ws.resolve(o.predictions);
  const auto probe_pred_path = ws.resolve(o.probe_predictions);
  const auto preds = read_predictions(pred_path);
  const auto probe_preds = read_predictions(probe_pred_path);
  const auto report = evaluate(dataset, preds, probe, probe_preds, vocab);

  const json producer = read_json_file(pred_path).value("__meta__", json());
  const json config = {{"data", o.report_data},
                       {"probe", o.report_probe},
                       {"predictions", o.predictions},
                       {"probe_predictions", o.probe_predictions},
                       {"model_config_hash", producer.value("config_hash", json())}};
  const json meta = make_meta(cmd, config, meta_seed(producer));
  emit_report(report, ws.output(o.report_out), meta);
  return {{"report", o.report_out + ".json"},
          {"table", o.report_out + ".txt"},
          {"examples", report.num_examples},
          {"pairs", report.num_pairs}};
}

std::string error_line(const std::string& message) {
  return json{{"error", message}}.dump();
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  Options o;
  CLI::App app{"Counterfactual multi-hop QA toolkit", "cfqa"};
  app.require_subcommand(1);
  app.add_option("--workspace", o.workspace, "Directory that holds every input and output")
      ->required();
  app.add_option("--config", o.config, "key=value config file (gen.* and train.* keys)")
      ->envname(kConfigEnv);

  auto* gen = app.add_subcommand("gen-data", "Generate (or ingest) a dataset and its vocabulary");
  gen->add_option("--out", o.gen_out, "Output directory")->capture_default_str();
  gen->add_option("--hotpotqa", o.hotpotqa, "Ingest a HotpotQA distractor-setting JSON file");
  gen->add_option("--num-examples", o.num_examples);
  gen->add_option("--num-paragraphs", o.num_paragraphs);
  gen->add_option("--entity-pool", o.entity_pool);
  gen->add_option("--seed", o.gen_seed);
  gen->add_option("--dev-fraction", o.dev_fraction);

  auto* tr = app.add_subcommand("train", "Train a model and write a checkpoint");
  tr->add_option("--data", o.data_dir, "Dataset directory from gen-data")->capture_default_str();
  tr->add_option("--out", o.ckpt_out, "Checkpoint path")->capture_default_str();
  tr->add_option("--report", o.train_report, "Training report path");
  tr->add_option("--mode", o.mode)->check(CLI::IsMember({"counterfactual", "baseline"}));
  tr->add_option("--ablate", o.ablate)
      ->check(CLI::IsMember({"none", "cf_focal", "cf_context"}));
  tr->add_option("--bias", o.bias)->check(CLI::IsMember({"random", "uniform"}));
  tr->add_option("--lambda", o.lambda);
  tr->add_option("--seed", o.train_seed);
  tr->add_option("--epochs", o.epochs);
  tr->add_option("--lr", o.lr);
  tr->add_option("--optimizer", o.optimizer)->check(CLI::IsMember({"sgd", "adam"}));
  tr->add_option("--batch-size", o.batch_size);
  tr->add_option("--threads", o.threads, "Worker threads (0: one per core)");

  auto* ev = app.add_subcommand("eval", "Predict on a dataset or a probe set");
  ev->add_option("--checkpoint", o.checkpoint)->capture_default_str();
  ev->add_option("--vocab", o.vocab)->capture_default_str();
  ev->add_option("--data", o.eval_data, "Dataset JSONL");
  ev->add_option("--probe", o.eval_probe, "Probe JSONL");
  ev->add_option("--out", o.preds_out)->capture_default_str();
  ev->add_option("--threads", o.threads, "Worker threads (0: one per core)");

  auto* pg = app.add_subcommand("probe-gen", "Split every example into a probe pair");
  pg->add_option("--data", o.probe_data)->capture_default_str();
  pg->add_option("--out", o.probe_out)->capture_default_str();

  auto* rp = app.add_subcommand("report", "Score original and probe predictions");
  rp->add_option("--data", o.report_data)->capture_default_str();
  rp->add_option("--probe", o.report_probe)->capture_default_str();
  rp->add_option("--predictions", o.predictions)->capture_default_str();
  rp->add_option("--probe-predictions", o.probe_predictions)->capture_default_str();
  rp->add_option("--vocab", o.vocab)->capture_default_str();
  rp->add_option("--out", o.report_out, "Output stem (.json and .txt)")
      ->capture_default_str();

  std::vector<const char*> argv{"cfqa"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << error_line(e.what()) << '\n';
    return 2;
  }

  const std::string cmd = command_line(args);
  using Runner = std::function<json(const Options&, const Workspace&, const std::string&)>;
  const std::vector<std::pair<CLI::App*, Runner>> runners = {
      {gen, run_gen_data}, {tr, run_train}, {ev, run_eval},
      {pg, run_probe_gen}, {rp, run_report}};
  try {
    const Workspace ws{o.workspace};
    if (!fs::is_directory(ws.root)) throw Error("workspace is not a directory: " + o.workspace);
    for (const auto& [sub, run] : runners) {
      if (!sub->parsed()) continue;
      json summary = run(o, ws, cmd);
      summary["command"] = sub->get_name();
      out << summary.dump() << '\n';
      return 0;
    }
    throw Error("no command given");
  } catch (const std::exception& e) {
    err << error_line(e.what()) << '\n';
    return 1;
  }
}

}  // namespace cfqa
