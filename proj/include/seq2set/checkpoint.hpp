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

#ifndef SEQ2SET_CHECKPOINT_H_
#define SEQ2SET_CHECKPOINT_H_

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "seq2set/config.hpp"
#include "seq2set/corpus.hpp"
#include "seq2set/encoder.hpp"
#include "seq2set/tape.hpp"

namespace seq2set {

// Checkpoint directory layout, format_version 1:
//   manifest.json   config echo, vocabulary hash, tensor index
//                   ({name, rows, cols, offset}), creation timestamp
//   vocab.json      labels, tiers, shot counts
//   token_vocab.json  (toy encoder only)
//   tensors.bin     all tensors back to back as little-endian float64,
//                   column-major, at the manifest offsets
struct LoadedCheckpoint {
  RunConfig config;
  LabelVocabulary vocab;
  std::unordered_map<std::string, Eigen::MatrixXd> tensors;
  std::optional<TokenVocab> token_vocab;
};

std::uint64_t vocab_hash(const LabelVocabulary& vocab);

void save_checkpoint(const std::string& dir, const RunConfig& config,
                     const LabelVocabulary& vocab,
                     const std::vector<const tape::Tensor*>& tensors,
                     const TokenVocab* token_vocab);

LoadedCheckpoint load_checkpoint(const std::string& dir);

}  // namespace seq2set

#endif  // SEQ2SET_CHECKPOINT_H_
