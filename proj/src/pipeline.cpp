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

#include "seq2set/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <iostream>
#include <limits>
#include <set>

#include "seq2set/metrics.hpp"
#include "seq2set/rng.hpp"

namespace seq2set {

using tape::Tape;
using tape::Tensor;
using tape::VarId;

namespace {

Eigen::VectorXd softmax_value(const Eigen::VectorXd& logits) {
  Eigen::VectorXd y = (logits.array() - logits.maxCoeff()).exp();
  return y / y.sum();
}

std::vector<int> gold_ids_of(const Instance& instance,
                             const LabelVocabulary& vocab) {
  std::vector<int> ids;
  ids.reserve(instance.gold_labels.size());
  for (const std::string& label : instance.gold_labels) {
    auto id = vocab.find(label);
    if (!id) {
      throw std::runtime_error("instance '" + instance.id +
                               "': gold label '" + label +
                               "' not in vocabulary");
    }
    ids.push_back(*id);
  }
  // gold_labels is sorted lexicographically, and label ids are
  // lexicographic ranks, so ids arrive ascending: the canonical order.
  return ids;
}

}  // namespace

AttributeResolver::AttributeResolver(const RunConfig& config)
    : theta_c_(config.theta_c) {
  if (!config.attributes_path.empty()) {
    store_.emplace(config.attributes_path);
  }
  if (config.proposer == "table") {
    if (config.proposer_path.empty()) {
      throw UsageError("proposer=table requires proposer_path");
    }
    proposer_ = std::make_unique<LookupTableProposer>(config.proposer_path);
  }
}

AttributeResolver::AttributeResolver(
    double theta_c, std::optional<PrecomputedAttributeStore> store,
    std::unique_ptr<ContextAttributeProposer> proposer)
    : theta_c_(theta_c),
      store_(std::move(store)),
      proposer_(std::move(proposer)) {}

std::vector<AttributeProposal> AttributeResolver::proposals_for(
    const Instance& instance, bool degrade_on_failure) const {
  if (store_ && store_->contains(instance.id)) {
    return store_->get(instance.id);
  }
  std::vector<AttributeProposal> proposals;
  if (proposer_) {
    try {
      proposals = propose_context_attributes(instance, *proposer_, theta_c_);
    } catch (const std::exception& e) {
      if (!degrade_on_failure) throw;
      std::cerr << "warning: " << e.what()
                << "; falling back to entity attributes only\n";
    }
  }
  std::vector<AttributeProposal> entity = propose_entity_attributes(instance);
  proposals.insert(proposals.end(), entity.begin(), entity.end());
  return proposals;
}

Model::Model(RunConfig cfg, LabelVocabulary vocab_in, EmbeddingTable table_in,
             const std::vector<Instance>& token_source)
    : config(std::move(cfg)),
      vocab(std::move(vocab_in)),
      table(std::move(table_in)),
      w_s("bag.w_s", table.dimension(), config.d_s) {
  config.validate();
  if (config.d_g != table.dimension()) {
    std::cerr << "warning: embedding table dimension " << table.dimension()
              << " overrides configured d_g " << config.d_g << "\n";
  }
  Rng rng(config.seed);
  if (config.encoder == "toy") {
    std::vector<MarkedSequence> seqs;
    seqs.reserve(token_source.size());
    for (const Instance& inst : token_source) seqs.push_back(mark(inst));
    encoder = std::make_unique<ToyEncoder>(TokenVocab::build(seqs),
                                           config.resolved_d_h(), rng);
  } else {
    if (config.encodings_path.empty()) {
      throw UsageError("encoder=adapter requires encodings_path");
    }
    encoder = std::make_unique<PrecomputedEncoder>(config.encodings_path);
    if (encoder->hidden_size() != config.resolved_d_h()) {
      std::cerr << "warning: encodings file carries d_h "
                << encoder->hidden_size() << ", configured "
                << config.resolved_d_h() << "\n";
    }
  }
  DecoderDims dims{vocab.size(), encoder->hidden_size(), config.d_s,
                   config.d_s, config.d_e};
  decoder = std::make_unique<DecoderParameters>(dims, rng);
  double r = 1.0 / std::sqrt(static_cast<double>(config.d_s));
  rng.fill_uniform(w_s.value, -r, r);
}

Model Model::from_checkpoint(const std::string& dir) {
  LoadedCheckpoint ck = load_checkpoint(dir);
  RunConfig cfg = ck.config;
  EmbeddingTable table = load_embedding_table(cfg.embedding_path);

  Model model(std::in_place_t{}, std::move(cfg), std::move(ck.vocab),
              std::move(table));
  if (model.config.encoder == "toy") {
    if (!ck.token_vocab) {
      throw std::runtime_error("checkpoint lacks token_vocab.json");
    }
    model.encoder = std::make_unique<ToyEncoder>(
        *ck.token_vocab, model.config.resolved_d_h(), ck.tensors);
  } else {
    model.encoder =
        std::make_unique<PrecomputedEncoder>(model.config.encodings_path);
  }
  DecoderDims dims{model.vocab.size(), model.encoder->hidden_size(),
                   model.config.d_s, model.config.d_s, model.config.d_e};
  model.decoder = std::make_unique<DecoderParameters>(dims, ck.tensors);
  auto it = ck.tensors.find("bag.w_s");
  if (it == ck.tensors.end()) {
    throw std::runtime_error("checkpoint lacks tensor bag.w_s");
  }
  if (it->second.rows() != model.table.dimension() ||
      it->second.cols() != model.config.d_s) {
    throw std::runtime_error("bag.w_s shape does not match table/config");
  }
  model.w_s.value = it->second;
  return model;
}

Model::Model(std::in_place_t, RunConfig cfg, LabelVocabulary vocab_in,
             EmbeddingTable table_in)
    : config(std::move(cfg)),
      vocab(std::move(vocab_in)),
      table(std::move(table_in)),
      w_s("bag.w_s", table.dimension(), config.d_s) {}

void Model::collect_parameter_groups(std::vector<Tensor*>& encoder_group,
                                     std::vector<Tensor*>& other_group) {
  encoder->collect_parameters(encoder_group);
  decoder->collect_parameters(other_group);
  other_group.push_back(&w_s);
}

std::vector<const Tensor*> Model::all_tensors() const {
  std::vector<Tensor*> enc_group, other_group;
  const_cast<Model*>(this)->collect_parameter_groups(enc_group, other_group);
  std::vector<const Tensor*> all;
  all.insert(all.end(), enc_group.begin(), enc_group.end());
  all.insert(all.end(), other_group.begin(), other_group.end());
  return all;
}

void Model::save(const std::string& dir) const {
  const TokenVocab* tok = nullptr;
  if (const auto* toy = dynamic_cast<const ToyEncoder*>(encoder.get())) {
    tok = &toy->vocab();
  }
  save_checkpoint(dir, config, vocab, all_tensors(), tok);
}

namespace {

// Adam with bias correction; one learning rate per tensor group.
class AdamOptimizer {
 public:
  struct Group {
    std::vector<Tensor*> tensors;
    double lr;
  };

  explicit AdamOptimizer(std::vector<Group> groups)
      : groups_(std::move(groups)) {
    for (const Group& g : groups_) {
      for (Tensor* t : g.tensors) {
        state_.push_back({Eigen::MatrixXd::Zero(t->rows(), t->cols()),
                          Eigen::MatrixXd::Zero(t->rows(), t->cols())});
      }
    }
  }

  void zero_grad() {
    for (const Group& g : groups_) {
      for (Tensor* t : g.tensors) t->zero_grad();
    }
  }

  double global_grad_norm() const {
    double sq = 0.0;
    for (const Group& g : groups_) {
      for (const Tensor* t : g.tensors) sq += t->grad.squaredNorm();
    }
    return std::sqrt(sq);
  }

  void clip_global_norm(double max_norm) {
    double norm = global_grad_norm();
    if (norm > max_norm && norm > 0.0) {
      double s = max_norm / norm;
      for (const Group& g : groups_) {
        for (Tensor* t : g.tensors) t->grad *= s;
      }
    }
  }

  void step() {
    ++t_;
    double bc1 = 1.0 - std::pow(kBeta1, t_);
    double bc2 = 1.0 - std::pow(kBeta2, t_);
    std::size_t k = 0;
    for (const Group& g : groups_) {
      for (Tensor* t : g.tensors) {
        State& s = state_[k++];
        s.m = kBeta1 * s.m + (1.0 - kBeta1) * t->grad;
        s.v = kBeta2 * s.v +
              (1.0 - kBeta2) * t->grad.cwiseProduct(t->grad);
        Eigen::MatrixXd m_hat = s.m / bc1;
        Eigen::MatrixXd v_hat = s.v / bc2;
        t->value.array() -=
            g.lr * m_hat.array() / (v_hat.array().sqrt() + kEps);
      }
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  struct State {
    Eigen::MatrixXd m, v;
  };
  std::vector<Group> groups_;
  std::vector<State> state_;
  int t_ = 0;
};

struct InstanceLossParts {
  double total = 0.0;
  double set = 0.0;
  double bag = 0.0;
};

// Builds one instance's loss on a fresh tape and backpropagates with the
// given seed weight. The gold order is fixed by the Hungarian assignment
// over a matching pass (or over this pass's own unmasked distributions in
// single_pass mode) before the loss is formed.
InstanceLossParts instance_loss(Model& model, const Instance& instance,
                                const BipartiteAttributeGraph* graph,
                                Rng& rng, double seed_weight) {
  const RunConfig& cfg = model.config;
  DecoderParameters& dec = *model.decoder;
  const bool two_pass = cfg.matching_pass == "two_pass";
  const int eos = dec.eos_id();

  Tape t;
  auto [h_vars, g_var] = model.encoder->encode_on(t, mark(instance));

  std::vector<int> gold = gold_ids_of(instance, model.vocab);
  const int m = static_cast<int>(gold.size());

  // Target order.
  std::vector<int> targets = gold;  // canonical (ascending) to start
  if (m >= 1 && two_pass) {
    Tape scratch;
    std::vector<VarId> h_const;
    h_const.reserve(h_vars.size());
    for (VarId h : h_vars) h_const.push_back(scratch.constant(t.value(h)));
    VarId g_const = scratch.constant(t.value(g_var));
    std::vector<int> canon_inputs(1, kStartInput);
    canon_inputs.insert(canon_inputs.end(), gold.begin(), gold.end() - 1);
    auto match_steps = run_teacher_forced(scratch, dec, h_const, g_const,
                                          canon_inputs, nullptr);
    std::vector<Eigen::VectorXd> dists;
    dists.reserve(match_steps.size());
    for (const auto& st : match_steps) {
      dists.push_back(softmax_value(scratch.value(st.logits)));
    }
    AssignmentResult match = hungarian(pairwise_cost(gold, dists));
    for (int i = 0; i < m; ++i) targets[match.assignment[i]] = gold[i];
  }

  // Loss-bearing pass: m+1 steps, the last targeting EOS.
  std::vector<int> inputs(1, kStartInput);
  inputs.insert(inputs.end(), targets.begin(), targets.end());

  std::vector<Eigen::VectorXd> dropout_masks;
  const std::vector<Eigen::VectorXd>* drop = nullptr;
  if (cfg.dropout > 0.0) {
    dropout_masks.reserve(inputs.size());
    double keep = 1.0 - cfg.dropout;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      Eigen::VectorXd mask(2 * cfg.d_s);
      for (Eigen::Index i = 0; i < mask.size(); ++i) {
        mask(i) = rng.uniform() < keep ? 1.0 / keep : 0.0;
      }
      dropout_masks.push_back(std::move(mask));
    }
    drop = &dropout_masks;
  }

  auto steps = run_teacher_forced(t, dec, h_vars, g_var, inputs, drop);

  if (m >= 1 && !two_pass) {
    std::vector<Eigen::VectorXd> dists;
    for (int k = 0; k < m; ++k) {
      dists.push_back(softmax_value(t.value(steps[k].logits)));
    }
    AssignmentResult match = hungarian(pairwise_cost(gold, dists));
    for (int i = 0; i < m; ++i) targets[match.assignment[i]] = gold[i];
  }

  const std::vector<bool> no_mask(static_cast<std::size_t>(eos) + 1, false);
  std::vector<VarId> ces;
  ces.reserve(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) {
    // single_pass feeds the canonical order, so a matched target may be
    // masked by the fed history; its CE uses the unmasked view.
    const std::vector<bool>& mask = two_pass ? steps[k].masked : no_mask;
    ces.push_back(t.masked_cross_entropy(steps[k].logits, mask, targets[k]));
  }
  VarId eos_ce = t.masked_cross_entropy(steps[m].logits, steps[m].masked, eos);
  VarId set_node = eos_ce;
  if (m >= 1) {
    VarId matched = cfg.set_loss_reduction == "mean"
                        ? t.mean(ces)
                        : t.add_all(ces);
    set_node = t.add(matched, eos_ce);
  }

  InstanceLossParts parts;
  VarId total_node = set_node;
  if (cfg.lambda != 0.0 && graph && graph->attribute_count() > 0) {
    Eigen::VectorXd sign(model.vocab.size());
    std::set<int> gold_set(gold.begin(), gold.end());
    for (int j = 0; j < model.vocab.size(); ++j) {
      sign(j) = gold_set.count(j) ? 1.0 : -1.0;
    }
    std::vector<VarId> per_step;
    per_step.reserve(steps.size());
    for (const auto& st : steps) {
      VarId act = activation_scores_on(t, *graph, model.w_s, st.hidden);
      per_step.push_back(
          t.dot_fixed(induced_label_scores_on(t, *graph, act), sign));
    }
    VarId agg = cfg.bag_aggregation == "mean" ? t.mean(per_step)
                                              : t.add_all(per_step);
    VarId bag_node = t.scale(agg, -1.0);
    parts.bag = t.scalar(bag_node);
    total_node = t.add(set_node, t.scale(bag_node, cfg.lambda));
  }
  parts.set = t.scalar(set_node);
  parts.total = t.scalar(total_node);
  t.backward(total_node, seed_weight);
  return parts;
}

double dev_macro_f1(Model& model, const std::vector<Instance>& dev,
                    const std::vector<BipartiteAttributeGraph>& graphs) {
  std::vector<EvalPair> pairs;
  pairs.reserve(dev.size());
  for (std::size_t i = 0; i < dev.size(); ++i) {
    PredictionResult pred =
        predict_instance(model, dev[i], graphs[i], model.config.theta_s);
    EvalPair pair;
    pair.first.insert(pred.final_labels.begin(), pred.final_labels.end());
    for (int id : gold_ids_of(dev[i], model.vocab)) pair.second.insert(id);
    pairs.push_back(std::move(pair));
  }
  return macro_prf(pairs).f1;
}

std::vector<BipartiteAttributeGraph> build_graphs(
    const Model& model, const std::vector<Instance>& instances,
    const AttributeResolver& attrs, int workers) {
  std::vector<BipartiteAttributeGraph> graphs(instances.size());
  auto build_range = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      graphs[i] = model.graph_for(attrs.proposals_for(instances[i], true));
    }
  };
  if (workers <= 1 || instances.size() < 2) {
    build_range(0, instances.size());
    return graphs;
  }
  std::size_t chunk = (instances.size() + workers - 1) / workers;
  std::vector<std::future<void>> futures;
  for (std::size_t lo = 0; lo < instances.size(); lo += chunk) {
    std::size_t hi = std::min(lo + chunk, instances.size());
    futures.push_back(
        std::async(std::launch::async, build_range, lo, hi));
  }
  for (auto& f : futures) f.get();
  return graphs;
}

}  // namespace

TrainStats train_model(Model& model, const std::vector<Instance>& train,
                       const std::vector<Instance>& dev,
                       const AttributeResolver& attrs, std::ostream& log) {
  const RunConfig& cfg = model.config;
  if (train.empty()) {
    throw std::invalid_argument("train(): empty training set");
  }
  for (const Instance& inst : train) gold_ids_of(inst, model.vocab);

  const bool needs_graphs = cfg.lambda != 0.0;
  std::vector<BipartiteAttributeGraph> train_graphs;
  if (needs_graphs) {
    train_graphs = build_graphs(model, train, attrs, cfg.workers);
  }
  std::vector<BipartiteAttributeGraph> dev_graphs =
      build_graphs(model, dev, attrs, cfg.workers);

  std::vector<Tensor*> enc_group, other_group;
  model.collect_parameter_groups(enc_group, other_group);
  AdamOptimizer adam({{enc_group, cfg.lr_encoder},
                      {other_group, cfg.lr_other}});

  Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainStats stats;
  double best_f1 = -std::numeric_limits<double>::infinity();
  std::unordered_map<std::string, Eigen::MatrixXd> best_tensors;
  int patience_left = cfg.patience;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t lo = 0; lo < order.size(); lo += cfg.batch_size) {
      std::size_t hi =
          std::min(lo + static_cast<std::size_t>(cfg.batch_size), order.size());
      adam.zero_grad();
      double batch_loss = 0.0, batch_set = 0.0, batch_bag = 0.0;
      double seed_weight = 1.0 / static_cast<double>(hi - lo);
      for (std::size_t k = lo; k < hi; ++k) {
        std::size_t idx = order[k];
        const BipartiteAttributeGraph* graph =
            needs_graphs ? &train_graphs[idx] : nullptr;
        InstanceLossParts parts =
            instance_loss(model, train[idx], graph, rng, seed_weight);
        batch_loss += parts.total * seed_weight;
        batch_set += parts.set * seed_weight;
        batch_bag += parts.bag * seed_weight;
      }
      if (!std::isfinite(batch_loss)) {
        throw std::runtime_error("training diverged at epoch " +
                                 std::to_string(epoch) + " batch " +
                                 std::to_string(batches));
      }
      adam.clip_global_norm(cfg.grad_clip);
      adam.step();
      epoch_loss += batch_loss;
      ++batches;
      log << "epoch=" << epoch << " batch=" << batches
          << " loss=" << batch_loss << " set_loss=" << batch_set
          << " bag_loss=" << batch_bag << "\n";
    }
    epoch_loss /= static_cast<double>(batches);
    stats.final_loss = epoch_loss;
    stats.epochs_run = epoch;

    // Without a dev set every epoch counts as an improvement (no early
    // stopping signal exists). Ties keep the latest weights: the bag
    // projection keeps maturing after dev F1 saturates.
    double f1 = dev_macro_f1(model, dev, dev_graphs);
    bool improved = dev.empty() || f1 >= best_f1;
    if (improved) {
      best_f1 = f1;
      stats.best_dev_f1 = f1;
      stats.best_epoch = epoch;
      patience_left = cfg.patience;
      best_tensors.clear();
      for (const Tensor* t : model.all_tensors()) {
        best_tensors[t->name] = t->value;
      }
      if (!cfg.checkpoint_dir.empty()) {
        model.save(cfg.checkpoint_dir);
      }
    } else {
      --patience_left;
    }
    log << "epoch=" << epoch << " mean_loss=" << epoch_loss
        << " dev_macro_f1=" << f1 << " best=" << stats.best_dev_f1
        << " patience_left=" << patience_left << "\n";
    if (patience_left <= 0) break;
  }

  std::vector<Tensor*> enc2, other2;
  model.collect_parameter_groups(enc2, other2);
  for (Tensor* t : enc2) t->value = best_tensors.at(t->name);
  for (Tensor* t : other2) t->value = best_tensors.at(t->name);
  return stats;
}

PredictionResult predict_instance(Model& model, const Instance& instance,
                                  const BipartiteAttributeGraph& graph,
                                  double theta_s) {
  EncodedInstance enc = model.encoder->encode(mark(instance));
  DecodeTrace trace;
  PredictionResult out;
  out.deductive =
      decode_greedy(enc, *model.decoder, model.config.max_steps, &trace);

  std::set<int> final_set(out.deductive.begin(), out.deductive.end());
  if (graph.attribute_count() > 0) {
    Eigen::VectorXd best_scores =
        Eigen::VectorXd::Constant(model.vocab.size(),
                                  -std::numeric_limits<double>::infinity());
    for (const Eigen::VectorXd& hidden : trace.hiddens) {
      Eigen::VectorXd act = activate(hidden, graph, model.w_s.value);
      Eigen::VectorXd scores = induce(act, graph, theta_s).first;
      best_scores = best_scores.cwiseMax(scores);
    }
    for (int j = 0; j < model.vocab.size(); ++j) {
      if (best_scores(j) > theta_s) {
        out.inductive.emplace_back(j, best_scores(j));
        final_set.insert(j);
      }
    }
  }
  out.final_labels.assign(final_set.begin(), final_set.end());
  return out;
}

PredictionResult predict_instance(Model& model, const Instance& instance,
                                  const AttributeResolver& attrs,
                                  double theta_s) {
  BipartiteAttributeGraph graph =
      model.graph_for(attrs.proposals_for(instance, true));
  return predict_instance(model, instance, graph, theta_s);
}

nlohmann::json prediction_to_json(const LabelVocabulary& vocab,
                                  const std::string& instance_id,
                                  const PredictionResult& result) {
  nlohmann::json j;
  j["id"] = instance_id;
  nlohmann::json ded = nlohmann::json::array();
  for (int id : result.deductive) ded.push_back(vocab.label(id));
  j["deductive"] = ded;
  nlohmann::json ind = nlohmann::json::object();
  for (const auto& [id, score] : result.inductive) {
    ind[vocab.label(id)] = score;
  }
  j["inductive"] = ind;
  nlohmann::json fin = nlohmann::json::array();
  for (int id : result.final_labels) fin.push_back(vocab.label(id));
  j["final"] = fin;
  return j;
}

std::vector<LoadedPrediction> load_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open predictions file: " + path);
  std::vector<LoadedPrediction> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw std::runtime_error("predictions line " + std::to_string(line_no) +
                               ": malformed json (" + e.what() + ")");
    }
    LoadedPrediction p;
    p.id = j.at("id").get<std::string>();
    for (const auto& label : j.at("final")) {
      p.final_labels.insert(label.get<std::string>());
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace seq2set
