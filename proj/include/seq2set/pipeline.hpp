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

#ifndef SEQ2SET_PIPELINE_H_
#define SEQ2SET_PIPELINE_H_

#include <Eigen/Dense>

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "seq2set/bag.hpp"
#include "seq2set/checkpoint.hpp"
#include "seq2set/config.hpp"
#include "seq2set/corpus.hpp"
#include "seq2set/decoder.hpp"
#include "seq2set/encoder.hpp"
#include "seq2set/objective.hpp"

namespace seq2set {

// Joint prediction: the generated sequence, the labels induced over the
// attribute graph (with their max-over-steps scores), and the union.
struct PredictionResult {
  std::vector<int> deductive;                     // generation order
  std::vector<std::pair<int, double>> inductive;  // above theta_s, id order
  std::vector<int> final_labels;                  // sorted union
};

// Resolves per-instance attribute proposals: a precomputed store entry
// when available, otherwise entity attributes plus context attributes
// from the configured proposer. Proposer failures degrade to entity
// attributes with a warning when `degrade_on_failure` is set.
class AttributeResolver {
 public:
  explicit AttributeResolver(const RunConfig& config);
  AttributeResolver(double theta_c,
                    std::optional<PrecomputedAttributeStore> store,
                    std::unique_ptr<ContextAttributeProposer> proposer);

  std::vector<AttributeProposal> proposals_for(const Instance& instance,
                                               bool degrade_on_failure) const;

 private:
  double theta_c_;
  std::optional<PrecomputedAttributeStore> store_;
  std::unique_ptr<ContextAttributeProposer> proposer_;
};

// A runnable model: encoder, decoder, and the attribute-activation
// projection, plus the fixed embedding table backing the graphs.
struct Model {
  RunConfig config;
  LabelVocabulary vocab;
  EmbeddingTable table;
  std::unique_ptr<Encoder> encoder;
  std::unique_ptr<DecoderParameters> decoder;
  tape::Tensor w_s;  // d_g x d_s

  Model(RunConfig config, LabelVocabulary vocab, EmbeddingTable table,
        const std::vector<Instance>& token_source);
  static Model from_checkpoint(const std::string& dir);
  // Shell without encoder/decoder, filled in by from_checkpoint.
  Model(std::in_place_t, RunConfig config, LabelVocabulary vocab,
        EmbeddingTable table);

  DecoderDims dims() const { return decoder->dims; }
  void collect_parameter_groups(std::vector<tape::Tensor*>& encoder_group,
                                std::vector<tape::Tensor*>& other_group);
  std::vector<const tape::Tensor*> all_tensors() const;
  void save(const std::string& dir) const;

  BipartiteAttributeGraph graph_for(
      const std::vector<AttributeProposal>& proposals) const {
    return build_graph(proposals, vocab, table);
  }
};

struct TrainStats {
  double best_dev_f1 = 0.0;
  int best_epoch = 0;
  int epochs_run = 0;
  double final_loss = 0.0;
};

// Teacher-forced training with the Hungarian-matched set loss plus the
// graph supervisory loss; evaluates dev macro-F1 each epoch, keeps the
// best tensors (writing them to config.checkpoint_dir when set), and
// restores them before returning. Deterministic given config.seed.
TrainStats train_model(Model& model, const std::vector<Instance>& train,
                       const std::vector<Instance>& dev,
                       const AttributeResolver& attrs, std::ostream& log);

PredictionResult predict_instance(Model& model, const Instance& instance,
                                  const BipartiteAttributeGraph& graph,
                                  double theta_s);
// Convenience: resolves attributes and builds the graph internally.
PredictionResult predict_instance(Model& model, const Instance& instance,
                                  const AttributeResolver& attrs,
                                  double theta_s);

nlohmann::json prediction_to_json(const LabelVocabulary& vocab,
                                  const std::string& instance_id,
                                  const PredictionResult& result);

struct LoadedPrediction {
  std::string id;
  std::set<std::string> final_labels;
};
std::vector<LoadedPrediction> load_predictions(const std::string& path);

}  // namespace seq2set

#endif  // SEQ2SET_PIPELINE_H_
