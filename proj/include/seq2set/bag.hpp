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

#ifndef SEQ2SET_BAG_H_
#define SEQ2SET_BAG_H_

#include <Eigen/Dense>

#include <functional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "seq2set/corpus.hpp"
#include "seq2set/tape.hpp"

namespace seq2set {

enum class AttributeSource { kContext, kEntity };

const char* attribute_source_name(AttributeSource s);

struct AttributeProposal {
  std::string word;
  double score;  // context proposals carry the proposer probability,
                 // entity proposals carry 1
  AttributeSource source;

  bool operator==(const AttributeProposal&) const = default;
};

// A token sequence with one contiguous masked span (the mention slot).
struct MaskedQuery {
  std::vector<std::string> tokens;  // with the span collapsed to kMaskToken
  int mask_position;                // index of the mask slot
};

inline constexpr const char* kMaskToken = "[MASK]";

// Contract for the masked-word proposer: scored word candidates for the
// masked slot. Implementations may call out to any masked language model.
class ContextAttributeProposer {
 public:
  virtual ~ContextAttributeProposer() = default;
  virtual std::vector<std::pair<std::string, double>> propose(
      const MaskedQuery& query) const = 0;
};

// Deterministic proposer backed by a jsonl lookup table keyed by the
// masked token sequence:
//   {"query": "tok tok [MASK] tok", "candidates": [{"word":..,"p":..}]}
// Unknown queries yield no candidates.
class LookupTableProposer : public ContextAttributeProposer {
 public:
  explicit LookupTableProposer(const std::string& path);
  std::vector<std::pair<std::string, double>> propose(
      const MaskedQuery& query) const override;

  static std::string query_key(const MaskedQuery& query);

 private:
  std::unordered_map<std::string,
                     std::vector<std::pair<std::string, double>>>
      table_;
};

MaskedQuery masked_query_for(const Instance& instance);

// Non-stop masked-LM candidates with probability strictly above theta_c,
// lowercased, source = context. Proposer errors are rethrown naming the
// instance id.
std::vector<AttributeProposal> propose_context_attributes(
    const Instance& instance, const ContextAttributeProposer& proposer,
    double theta_c);

// Hook for substituting an external segmenter for mention words.
using MentionSegmenter =
    std::function<std::vector<std::string>(const std::vector<std::string>&)>;

// Splits mention tokens on whitespace/hyphen/underscore/slash, strips
// surrounding punctuation and lowercases.
std::vector<std::string> default_mention_segmenter(
    const std::vector<std::string>& mention_tokens);

// All non-stop mention words, deduplicated, source = entity, score 1.
std::vector<AttributeProposal> propose_entity_attributes(
    const Instance& instance);
std::vector<AttributeProposal> propose_entity_attributes(
    const Instance& instance, const MentionSegmenter& segmenter);

// Per-instance bipartite attribute graph: attribute nodes (rows of
// attribute_embeddings, the fixed W_a), all vocabulary labels as label
// nodes, and edges[i][j] = cosine of the fixed word embeddings with the
// zero-vector convention. Multi-word labels embed their last word.
struct BipartiteAttributeGraph {
  std::vector<std::string> attribute_words;
  Eigen::MatrixXd attribute_embeddings;  // n_a x d_g
  std::vector<std::string> label_words;  // embedding word per label
  Eigen::MatrixXd label_embeddings;      // |L| x d_g
  Eigen::MatrixXd edges;                 // n_a x |L|

  Eigen::Index attribute_count() const { return edges.rows(); }
  Eigen::Index label_count() const { return edges.cols(); }
};

// The word whose embedding stands for a label: last '/'-path component,
// then last whitespace/underscore/hyphen-separated word, lowercased.
std::string label_embedding_word(const std::string& label);

BipartiteAttributeGraph build_graph(
    const std::vector<AttributeProposal>& proposals,
    const LabelVocabulary& vocab, const EmbeddingTable& table);

// score_i = ReLU(cos(w_s * s_t, attribute_embeddings row i)); the graph's
// attribute embeddings are the fixed W_a of the activation rule.
Eigen::VectorXd activate(const Eigen::VectorXd& s_t,
                         const BipartiteAttributeGraph& graph,
                         const Eigen::MatrixXd& w_s);

// label_score_j = sum_i attr_scores_i * edges[i][j];
// induced = {j : label_score_j > theta_s}.
std::pair<Eigen::VectorXd, std::set<int>> induce(
    const Eigen::VectorXd& attr_scores, const BipartiteAttributeGraph& graph,
    double theta_s);

// Tape builders for training.
tape::VarId activation_scores_on(tape::Tape& t,
                                 const BipartiteAttributeGraph& graph,
                                 tape::Tensor& w_s, tape::VarId hidden);
tape::VarId induced_label_scores_on(tape::Tape& t,
                                    const BipartiteAttributeGraph& graph,
                                    tape::VarId attr_scores);

// Precomputed attribute proposals keyed by instance id, jsonl:
//   {"id": ..., "attributes": [{"word":..,"score":..,"source":..}]}
class PrecomputedAttributeStore {
 public:
  PrecomputedAttributeStore() = default;
  explicit PrecomputedAttributeStore(const std::string& path);

  bool contains(const std::string& id) const { return by_id_.count(id) > 0; }
  const std::vector<AttributeProposal>& get(const std::string& id) const;
  void put(const std::string& id, std::vector<AttributeProposal> proposals);
  void save(const std::string& path) const;

 private:
  std::unordered_map<std::string, std::vector<AttributeProposal>> by_id_;
  std::vector<std::string> order_;
};

}  // namespace seq2set

#endif  // SEQ2SET_BAG_H_
