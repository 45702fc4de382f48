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

#ifndef SEQ2SET_METRICS_H_
#define SEQ2SET_METRICS_H_

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "seq2set/corpus.hpp"

namespace seq2set {

// (prediction set, gold set) per instance, in label ids.
using EvalPair = std::pair<std::set<int>, std::set<int>>;

struct InstancePRF {
  std::optional<double> precision;  // defined only for non-empty predictions
  std::optional<double> recall;     // defined only for non-empty gold
};

InstancePRF instance_prf(const std::set<int>& pred, const std::set<int>& gold);

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  // False when no instance contributed a defined component; the value is
  // then reported as 0.
  bool precision_defined = true;
  bool recall_defined = true;
};

// Example-level macro: means of the defined per-instance precisions and
// recalls (the convention of the standard ultra fine-grained evaluation
// setup: instances with empty predictions do not enter the precision
// mean). F1 is the harmonic mean, 0 when P + R == 0.
PRF macro_prf(const std::vector<EvalPair>& pairs);

// Pooled counts over the corpus.
PRF micro_prf(const std::vector<EvalPair>& pairs);

// Fraction of instances whose prediction equals gold exactly.
double strict_accuracy(const std::vector<EvalPair>& pairs);

struct ShotBucket {
  std::int64_t correct = 0;
  std::int64_t predicted = 0;
  std::optional<double> precision;  // absent when predicted == 0
};

// Buckets predicted label tokens by their training shot count s in
// {0, 1, 2}; correct are those present in the instance's gold set.
std::array<ShotBucket, 3> shot_table(const std::vector<EvalPair>& pairs,
                                     const LabelVocabulary& vocab);

// Restricts predictions and gold to each tier and reports macro P/R/F1.
// Instances whose restricted prediction and gold are both empty are
// skipped for that tier unless count_empty_as_zero is set.
std::map<Tier, PRF> tier_report(const std::vector<EvalPair>& pairs,
                                const LabelVocabulary& vocab,
                                bool count_empty_as_zero = false);

// Symmetric pair counts over label sets; the diagonal holds label
// frequencies.
Eigen::MatrixXi cooccurrence_matrix(const std::vector<std::set<int>>& sets,
                                    int n_labels);

struct EvalReport {
  PRF macro;
  PRF micro;
  double accuracy = 0.0;
  std::map<Tier, PRF> tiers;
  std::array<ShotBucket, 3> shots;
  std::size_t instances = 0;
};

EvalReport evaluate(const std::vector<EvalPair>& pairs,
                    const LabelVocabulary& vocab,
                    bool tier_count_empty_as_zero = false);

std::string report_to_json(const EvalReport& report);
// Human-readable tables: overall/per-tier macro block plus the shot
// table, with "/" for empty buckets.
std::string render_tier_table(const EvalReport& report);
std::string render_shot_table(const EvalReport& report);

void write_cooccurrence_csv(const std::string& path,
                            const Eigen::MatrixXi& matrix,
                            const LabelVocabulary& vocab);

}  // namespace seq2set

#endif  // SEQ2SET_METRICS_H_
