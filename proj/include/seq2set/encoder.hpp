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

#ifndef SEQ2SET_ENCODER_H_
#define SEQ2SET_ENCODER_H_

#include <Eigen/Dense>

#include <memory>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "seq2set/corpus.hpp"
#include "seq2set/rng.hpp"
#include "seq2set/tape.hpp"

namespace seq2set {

inline constexpr const char* kClsToken = "[CLS]";
inline constexpr const char* kMentionOpen = "[E1]";
inline constexpr const char* kMentionClose = "[E2]";
inline constexpr const char* kUnkToken = "[UNK]";

// Marker-wrapped input: [CLS] left... [E1] mention... [E2] right...
struct MarkedSequence {
  std::vector<std::string> tokens;
};

MarkedSequence mark(const Instance& instance);

// Per-token hidden states H (one row per token) and the sentence
// embedding g, which is the hidden state of the [CLS]-role token
// (row 0 by construction for every encoder implementation).
struct EncodedInstance {
  Eigen::MatrixXd hidden_states;
  Eigen::VectorXd sentence_embedding;
};

// Token -> id lookup for the self-contained encoder; specials first,
// then the corpus tokens sorted lexicographically, so ids are stable.
class TokenVocab {
 public:
  TokenVocab() = default;
  static TokenVocab build(const std::vector<MarkedSequence>& sequences);
  static TokenVocab from_tokens(std::vector<std::string> id_to_token);

  int size() const { return static_cast<int>(id_to_token_.size()); }
  int id(const std::string& token) const;  // [UNK] fallback
  const std::vector<std::string>& tokens() const { return id_to_token_; }

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> token_to_id_;
};

// Encoder contract: any implementation maps a token sequence to (H, g).
// encode_on records the computation on a tape (constant leaves for frozen
// encoders); encode() is the plain evaluation-mode view.
class Encoder {
 public:
  virtual ~Encoder() = default;
  virtual int hidden_size() const = 0;
  virtual std::pair<std::vector<tape::VarId>, tape::VarId> encode_on(
      tape::Tape& t, const MarkedSequence& seq) = 0;
  virtual void collect_parameters(std::vector<tape::Tensor*>& out) {}
  EncodedInstance encode(const MarkedSequence& seq);
};

// Trainable desk-scale encoder: embedding lookup (width d_h) plus a
// residual bidirectional tanh RNN with d_h/2 units per direction,
//   h_i = e_i + [fwd_i ; bwd_i].
// With the recurrent layer zeroed it passes embeddings through unchanged.
class ToyEncoder : public Encoder {
 public:
  ToyEncoder(TokenVocab vocab, int d_h, Rng& rng);
  // Rebuild from checkpoint tensors.
  ToyEncoder(TokenVocab vocab, int d_h,
             const std::unordered_map<std::string, Eigen::MatrixXd>& tensors);

  int hidden_size() const override { return d_h_; }
  std::pair<std::vector<tape::VarId>, tape::VarId> encode_on(
      tape::Tape& t, const MarkedSequence& seq) override;
  void collect_parameters(std::vector<tape::Tensor*>& out) override;
  const TokenVocab& vocab() const { return vocab_; }

 private:
  TokenVocab vocab_;
  int d_h_;
  tape::Tensor embeddings_;                      // V x d_h
  tape::Tensor fwd_wx_, fwd_wh_, fwd_b_;         // d_h/2-unit tanh RNN
  tape::Tensor bwd_wx_, bwd_wh_, bwd_b_;
};

// Pretrained-transformer adapter: hidden states are produced offline by
// any model honoring the contract and served from a jsonl file keyed by
// the exact token sequence ({"tokens": [...], "hidden": [[...]]}).
class PrecomputedEncoder : public Encoder {
 public:
  explicit PrecomputedEncoder(const std::string& path);

  int hidden_size() const override { return d_h_; }
  std::pair<std::vector<tape::VarId>, tape::VarId> encode_on(
      tape::Tape& t, const MarkedSequence& seq) override;

 private:
  int d_h_ = 0;
  std::unordered_map<std::string, Eigen::MatrixXd> by_key_;
};

}  // namespace seq2set

#endif  // SEQ2SET_ENCODER_H_
