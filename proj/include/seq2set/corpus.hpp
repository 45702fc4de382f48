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

#ifndef SEQ2SET_CORPUS_H_
#define SEQ2SET_CORPUS_H_

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace seq2set {

// One mention-in-context example. gold_labels is kept sorted and
// duplicate-free (set semantics); it may be empty for unlabeled input.
struct Instance {
  std::string id;
  std::vector<std::string> left_tokens;
  std::vector<std::string> mention_tokens;  // never empty
  std::vector<std::string> right_tokens;
  std::vector<std::string> gold_labels;

  bool operator==(const Instance&) const = default;
};

enum class Tier { kGeneral, kFine, kUltraFine };

const char* tier_name(Tier t);
std::optional<Tier> tier_from_name(const std::string& name);

// The closed label set with granularity tiers and training-frequency
// (shot) counts. Label ids are lexicographic ranks; id |L| is reserved
// for the end-of-sequence symbol and collides with no label.
class LabelVocabulary {
 public:
  LabelVocabulary() = default;
  LabelVocabulary(std::vector<std::string> labels, std::vector<Tier> tiers,
                  std::vector<std::int64_t> shots);

  int size() const { return static_cast<int>(labels_.size()); }
  int eos_id() const { return size(); }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::string& label(int id) const { return labels_.at(id); }
  // Throws if the label is unknown.
  int index(const std::string& label) const;
  std::optional<int> find(const std::string& label) const;
  Tier tier(int id) const { return tiers_.at(id); }
  std::int64_t shot(int id) const { return shots_.at(id); }

 private:
  std::vector<std::string> labels_;  // sorted lexicographically
  std::vector<Tier> tiers_;
  std::vector<std::int64_t> shots_;
  std::unordered_map<std::string, int> index_;
};

// Fixed word-embedding table (GloVe-style text format). Lookups of
// out-of-table words return the zero vector; cosine against a zero
// vector is defined as 0 downstream.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(Eigen::Index dimension) : dimension_(dimension) {}

  Eigen::Index dimension() const { return dimension_; }
  std::size_t size() const { return vectors_.size(); }
  bool contains(const std::string& word) const {
    return vectors_.count(word) > 0;
  }
  Eigen::VectorXd lookup(const std::string& word) const;
  void insert(const std::string& word, Eigen::VectorXd v);

 private:
  Eigen::Index dimension_ = 0;
  std::unordered_map<std::string, Eigen::VectorXd> vectors_;
};

// jsonl loader; one object per line with keys left_tokens, mention_tokens,
// right_tokens, gold_labels and an optional id (defaults to the 0-based
// line number). Malformed lines raise with the line number; an empty
// mention raises with the instance id.
std::vector<Instance> load_instances(const std::string& path);
void save_instances(const std::string& path,
                    const std::vector<Instance>& instances);

// Tier map jsonl: {"label": ..., "tier": "general"|"fine"|"ultra-fine"}.
std::map<std::string, Tier> load_tier_map(const std::string& path);
void save_tier_map(const std::string& path,
                   const std::map<std::string, Tier>& tier_map);

// Builds the vocabulary over the tier map's full label space (sorted
// lexicographically); shot(label) counts the train instances whose gold
// set contains the label. A train label missing from the tier map is an
// error naming the label.
LabelVocabulary build_vocabulary(const std::vector<Instance>& train,
                                 const std::map<std::string, Tier>& tier_map);

// Text format: `word v1 v2 ... vd` per line; dimension inferred from the
// first line. Inconsistent arity raises naming the line; a duplicate word
// wins with a warning on stderr; an empty file raises.
EmbeddingTable load_embedding_table(const std::string& path);

}  // namespace seq2set

#endif  // SEQ2SET_CORPUS_H_
