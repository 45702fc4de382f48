/* Copyright 2026 The seq2set Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "seq2set/config.hpp"
#include "seq2set/corpus.hpp"
#include "seq2set/metrics.hpp"
#include "seq2set/pipeline.hpp"

namespace {

using namespace seq2set;
using nlohmann::json;

std::string timestamp_utc() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

// Every primary output gets a sidecar manifest echoing the effective
// configuration; timestamps live only here so outputs stay byte-stable.
void write_manifest(const std::string& output_path, const std::string& command,
                    const json& effective_config) {
  json manifest;
  manifest["tool"] = "seq2set";
  manifest["command"] = command;
  manifest["created_at"] = timestamp_utc();
  manifest["config"] = effective_config;
  std::ofstream out(output_path + ".manifest.json");
  out << manifest.dump(2) << "\n";
}

// --key=value tokens left over after recognized options.
void apply_extra_overrides(RunConfig& config,
                           const std::vector<std::string>& extras) {
  for (const std::string& raw : extras) {
    if (raw.rfind("--", 0) != 0) {
      throw UsageError("unexpected argument '" + raw +
                       "' (overrides look like --key=value)");
    }
    auto eq = raw.find('=');
    if (eq == std::string::npos || eq == 2) {
      throw UsageError("override '" + raw + "' must look like --key=value");
    }
    config.apply_override(raw.substr(2, eq - 2), raw.substr(eq + 1));
  }
}

// Overlays only the keys present in the file onto an existing config.
void apply_json_overlay(RunConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw UsageError("config file " + path + ": " + e.what());
  }
  RunConfig probe = RunConfig::from_json(j);  // validates keys and types
  (void)probe;
  json merged = config.to_json();
  for (auto it = j.begin(); it != j.end(); ++it) merged[it.key()] = it.value();
  config = RunConfig::from_json(merged);
}

LabelVocabulary vocab_from_flags(const std::string& checkpoint_dir,
                                 const std::string& train_path,
                                 const std::string& tier_map_path) {
  if (!checkpoint_dir.empty()) {
    return load_checkpoint(checkpoint_dir).vocab;
  }
  if (train_path.empty() || tier_map_path.empty()) {
    throw UsageError(
        "need either --checkpoint or both --train and --tier-map for the "
        "label vocabulary");
  }
  return build_vocabulary(load_instances(train_path),
                          load_tier_map(tier_map_path));
}

std::vector<EvalPair> paired_sets(const std::string& pred_path,
                                  const std::string& gold_path,
                                  const LabelVocabulary& vocab) {
  std::vector<Instance> gold = load_instances(gold_path);
  std::vector<LoadedPrediction> preds = load_predictions(pred_path);
  std::map<std::string, const LoadedPrediction*> by_id;
  for (const LoadedPrediction& p : preds) by_id[p.id] = &p;

  std::vector<EvalPair> pairs;
  pairs.reserve(gold.size());
  for (const Instance& inst : gold) {
    auto it = by_id.find(inst.id);
    if (it == by_id.end()) {
      throw std::runtime_error("no prediction for instance '" + inst.id + "'");
    }
    EvalPair pair;
    for (const std::string& label : it->second->final_labels) {
      pair.first.insert(vocab.index(label));
    }
    for (const std::string& label : inst.gold_labels) {
      pair.second.insert(vocab.index(label));
    }
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

int run_train(const std::string& config_path,
              const std::vector<std::string>& extras) {
  RunConfig cfg = RunConfig::load(config_path);
  apply_extra_overrides(cfg, extras);
  cfg.validate();
  if (cfg.train_path.empty() || cfg.tier_map_path.empty() ||
      cfg.embedding_path.empty() || cfg.checkpoint_dir.empty()) {
    throw UsageError(
        "train needs train_path, tier_map_path, embedding_path and "
        "checkpoint_dir in the config");
  }
  std::vector<Instance> train = load_instances(cfg.train_path);
  std::vector<Instance> dev;
  if (!cfg.dev_path.empty()) dev = load_instances(cfg.dev_path);
  LabelVocabulary vocab =
      build_vocabulary(train, load_tier_map(cfg.tier_map_path));
  EmbeddingTable table = load_embedding_table(cfg.embedding_path);

  std::vector<Instance> token_source = train;
  token_source.insert(token_source.end(), dev.begin(), dev.end());
  Model model(cfg, std::move(vocab), std::move(table), token_source);
  AttributeResolver attrs(model.config);

  TrainStats stats = train_model(model, train, dev, attrs, std::cout);
  model.save(model.config.checkpoint_dir);
  std::cout << "done best_dev_macro_f1=" << stats.best_dev_f1
            << " best_epoch=" << stats.best_epoch
            << " checkpoint=" << model.config.checkpoint_dir << "\n";
  return 0;
}

int run_predict(const std::string& checkpoint_dir,
                const std::string& input_path, const std::string& output_path,
                const std::string& config_path,
                const std::vector<std::string>& extras) {
  Model model = Model::from_checkpoint(checkpoint_dir);
  if (!config_path.empty()) apply_json_overlay(model.config, config_path);
  apply_extra_overrides(model.config, extras);
  model.config.validate();

  std::vector<Instance> instances = load_instances(input_path);
  AttributeResolver attrs(model.config);
  std::ofstream out(output_path);
  if (!out) throw std::runtime_error("cannot write " + output_path);
  for (const Instance& inst : instances) {
    PredictionResult result =
        predict_instance(model, inst, attrs, model.config.theta_s);
    out << prediction_to_json(model.vocab, inst.id, result).dump() << "\n";
  }
  write_manifest(output_path, "predict", model.config.to_json());
  std::cout << "predicted " << instances.size() << " instances to "
            << output_path << "\n";
  return 0;
}

int run_eval(const std::string& pred_path, const std::string& gold_path,
             const std::string& checkpoint_dir, const std::string& train_path,
             const std::string& tier_map_path, const std::string& output_path,
             const std::string& tables_path, bool tier_empty_as_zero) {
  LabelVocabulary vocab =
      vocab_from_flags(checkpoint_dir, train_path, tier_map_path);
  std::vector<EvalPair> pairs = paired_sets(pred_path, gold_path, vocab);
  EvalReport report = evaluate(pairs, vocab, tier_empty_as_zero);

  std::string tables =
      render_tier_table(report) + "\n" + render_shot_table(report);
  std::cout << tables;
  if (!output_path.empty()) {
    std::ofstream out(output_path);
    if (!out) throw std::runtime_error("cannot write " + output_path);
    out << report_to_json(report) << "\n";
    json inv = {{"pred", pred_path},
                {"gold", gold_path},
                {"tier_empty_as_zero", tier_empty_as_zero}};
    write_manifest(output_path, "eval", inv);
  }
  if (!tables_path.empty()) {
    std::ofstream out(tables_path);
    if (!out) throw std::runtime_error("cannot write " + tables_path);
    out << tables;
  }
  return 0;
}

int run_build_bag(const std::string& config_path, const std::string& input_path,
                  const std::string& output_path,
                  const std::vector<std::string>& extras) {
  RunConfig cfg;
  if (!config_path.empty()) cfg = RunConfig::load(config_path);
  apply_extra_overrides(cfg, extras);
  cfg.attributes_path.clear();  // we are producing this file
  cfg.validate();

  std::vector<Instance> instances = load_instances(input_path);
  AttributeResolver attrs(cfg);
  PrecomputedAttributeStore store;
  for (const Instance& inst : instances) {
    store.put(inst.id, attrs.proposals_for(inst, false));
  }
  store.save(output_path);
  write_manifest(output_path, "build-bag", cfg.to_json());
  std::cout << "wrote attributes for " << instances.size() << " instances to "
            << output_path << "\n";
  return 0;
}

int run_report(const std::string& pred_path, const std::string& gold_path,
               const std::string& source, const std::string& checkpoint_dir,
               const std::string& train_path, const std::string& tier_map_path,
               const std::string& output_path) {
  LabelVocabulary vocab =
      vocab_from_flags(checkpoint_dir, train_path, tier_map_path);
  std::vector<std::set<int>> sets;
  if (source == "pred") {
    if (pred_path.empty()) throw UsageError("--source=pred needs --pred");
    for (const LoadedPrediction& p : load_predictions(pred_path)) {
      std::set<int> s;
      for (const std::string& label : p.final_labels) {
        s.insert(vocab.index(label));
      }
      sets.push_back(std::move(s));
    }
  } else if (source == "gold") {
    if (gold_path.empty()) throw UsageError("--source=gold needs --gold");
    for (const Instance& inst : load_instances(gold_path)) {
      std::set<int> s;
      for (const std::string& label : inst.gold_labels) {
        s.insert(vocab.index(label));
      }
      sets.push_back(std::move(s));
    }
  } else {
    throw UsageError("--source must be 'pred' or 'gold'");
  }
  Eigen::MatrixXi matrix = cooccurrence_matrix(sets, vocab.size());
  write_cooccurrence_csv(output_path, matrix, vocab);
  json inv = {{"pred", pred_path}, {"gold", gold_path}, {"source", source}};
  write_manifest(output_path, "report", inv);
  std::cout << "wrote co-occurrence matrix (" << source << ") to "
            << output_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sequence-to-set fine-grained entity typing toolkit"};
  app.require_subcommand(1);

  std::string config_path, checkpoint_dir, input_path, output_path;
  std::string pred_path, gold_path, train_path, tier_map_path, tables_path;
  std::string source = "pred";
  bool tier_empty_as_zero = false;

  CLI::App* train = app.add_subcommand("train", "train a model");
  train->add_option("--config", config_path, "run config json")->required();
  train->allow_extras();

  CLI::App* predict = app.add_subcommand("predict", "write predictions jsonl");
  predict->add_option("--checkpoint", checkpoint_dir)->required();
  predict->add_option("--input", input_path, "instances jsonl")->required();
  predict->add_option("--output", output_path)->required();
  predict->add_option("--config", config_path, "config overlay json");
  predict->allow_extras();

  CLI::App* eval = app.add_subcommand("eval", "score predictions against gold");
  eval->add_option("--pred", pred_path)->required();
  eval->add_option("--gold", gold_path)->required();
  eval->add_option("--checkpoint", checkpoint_dir);
  eval->add_option("--train", train_path);
  eval->add_option("--tier-map", tier_map_path);
  eval->add_option("--output", output_path, "report json path");
  eval->add_option("--tables", tables_path, "text tables path");
  eval->add_flag("--tier-empty-as-zero", tier_empty_as_zero,
                 "count tier-empty instances as zeros");

  CLI::App* bag = app.add_subcommand("build-bag",
                                     "precompute attribute proposals");
  bag->add_option("--config", config_path);
  bag->add_option("--input", input_path)->required();
  bag->add_option("--output", output_path)->required();
  bag->allow_extras();

  CLI::App* report = app.add_subcommand("report", "co-occurrence matrix csv");
  report->add_option("--pred", pred_path);
  report->add_option("--gold", gold_path);
  report->add_option("--source", source, "pred|gold");
  report->add_option("--checkpoint", checkpoint_dir);
  report->add_option("--train", train_path);
  report->add_option("--tier-map", tier_map_path);
  report->add_option("--output", output_path)->required();

  try {
    app.parse(argc, argv);
    if (train->parsed()) {
      return run_train(config_path, train->remaining());
    }
    if (predict->parsed()) {
      return run_predict(checkpoint_dir, input_path, output_path, config_path,
                         predict->remaining());
    }
    if (eval->parsed()) {
      return run_eval(pred_path, gold_path, checkpoint_dir, train_path,
                      tier_map_path, output_path, tables_path,
                      tier_empty_as_zero);
    }
    if (bag->parsed()) {
      return run_build_bag(config_path, input_path, output_path,
                           bag->remaining());
    }
    if (report->parsed()) {
      return run_report(pred_path, gold_path, source, checkpoint_dir,
                        train_path, tier_map_path, output_path);
    }
    return 1;
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
