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

#include "seq2set/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include "json.hpp"

namespace seq2set {

using tape::Tape;
using tape::Tensor;
using tape::VarId;

MarkedSequence mark(const Instance& instance) {
  if (instance.mention_tokens.empty()) {
    throw std::invalid_argument("instance '" + instance.id +
                                "': mention_tokens is empty");
  }
  MarkedSequence seq;
  seq.tokens.reserve(instance.left_tokens.size() +
                     instance.mention_tokens.size() +
                     instance.right_tokens.size() + 3);
  seq.tokens.push_back(kClsToken);
  seq.tokens.insert(seq.tokens.end(), instance.left_tokens.begin(),
                    instance.left_tokens.end());
  seq.tokens.push_back(kMentionOpen);
  seq.tokens.insert(seq.tokens.end(), instance.mention_tokens.begin(),
                    instance.mention_tokens.end());
  seq.tokens.push_back(kMentionClose);
  seq.tokens.insert(seq.tokens.end(), instance.right_tokens.begin(),
                    instance.right_tokens.end());
  return seq;
}

EncodedInstance Encoder::encode(const MarkedSequence& seq) {
  Tape t;
  auto [h_vars, g_var] = encode_on(t, seq);
  EncodedInstance enc;
  enc.hidden_states.resize(static_cast<Eigen::Index>(h_vars.size()),
                           hidden_size());
  for (std::size_t i = 0; i < h_vars.size(); ++i) {
    enc.hidden_states.row(static_cast<Eigen::Index>(i)) =
        t.value(h_vars[i]).transpose();
  }
  enc.sentence_embedding = t.value(g_var);
  return enc;
}

TokenVocab TokenVocab::build(const std::vector<MarkedSequence>& sequences) {
  std::set<std::string> words;
  for (const MarkedSequence& seq : sequences) {
    for (const std::string& tok : seq.tokens) words.insert(tok);
  }
  words.erase(kClsToken);
  words.erase(kMentionOpen);
  words.erase(kMentionClose);
  words.erase(kUnkToken);
  std::vector<std::string> id_to_token = {kClsToken, kMentionOpen,
                                          kMentionClose, kUnkToken};
  id_to_token.insert(id_to_token.end(), words.begin(), words.end());
  return from_tokens(std::move(id_to_token));
}

TokenVocab TokenVocab::from_tokens(std::vector<std::string> id_to_token) {
  TokenVocab v;
  v.id_to_token_ = std::move(id_to_token);
  for (std::size_t i = 0; i < v.id_to_token_.size(); ++i) {
    v.token_to_id_[v.id_to_token_[i]] = static_cast<int>(i);
  }
  if (!v.token_to_id_.count(kUnkToken)) {
    throw std::invalid_argument("token vocab lacks " + std::string(kUnkToken));
  }
  return v;
}

int TokenVocab::id(const std::string& token) const {
  auto it = token_to_id_.find(token);
  if (it != token_to_id_.end()) return it->second;
  return token_to_id_.at(kUnkToken);
}

namespace {

void init_uniform(Tensor& t, Rng& rng) {
  double r = 1.0 / std::sqrt(static_cast<double>(std::max<Eigen::Index>(
                 1, t.cols() == 1 ? t.rows() : t.cols())));
  rng.fill_uniform(t.value, -r, r);
}

Eigen::MatrixXd fetch(const std::unordered_map<std::string, Eigen::MatrixXd>& m,
                      const std::string& name, Eigen::Index rows,
                      Eigen::Index cols) {
  auto it = m.find(name);
  if (it == m.end()) throw std::runtime_error("checkpoint lacks tensor " + name);
  if (it->second.rows() != rows || it->second.cols() != cols) {
    throw std::runtime_error("tensor " + name + " has unexpected shape");
  }
  return it->second;
}

}  // namespace

ToyEncoder::ToyEncoder(TokenVocab vocab, int d_h, Rng& rng)
    : vocab_(std::move(vocab)),
      d_h_(d_h),
      embeddings_("enc.embeddings", vocab_.size(), d_h),
      fwd_wx_("enc.fwd_wx", d_h / 2, d_h),
      fwd_wh_("enc.fwd_wh", d_h / 2, d_h / 2),
      fwd_b_("enc.fwd_b", d_h / 2, 1),
      bwd_wx_("enc.bwd_wx", d_h / 2, d_h),
      bwd_wh_("enc.bwd_wh", d_h / 2, d_h / 2),
      bwd_b_("enc.bwd_b", d_h / 2, 1) {
  if (d_h < 2 || d_h % 2 != 0) {
    throw std::invalid_argument("toy encoder needs an even d_h >= 2");
  }
  init_uniform(embeddings_, rng);
  init_uniform(fwd_wx_, rng);
  init_uniform(fwd_wh_, rng);
  init_uniform(bwd_wx_, rng);
  init_uniform(bwd_wh_, rng);
  // biases stay zero
}

ToyEncoder::ToyEncoder(
    TokenVocab vocab, int d_h,
    const std::unordered_map<std::string, Eigen::MatrixXd>& tensors)
    : vocab_(std::move(vocab)),
      d_h_(d_h),
      embeddings_("enc.embeddings", vocab_.size(), d_h),
      fwd_wx_("enc.fwd_wx", d_h / 2, d_h),
      fwd_wh_("enc.fwd_wh", d_h / 2, d_h / 2),
      fwd_b_("enc.fwd_b", d_h / 2, 1),
      bwd_wx_("enc.bwd_wx", d_h / 2, d_h),
      bwd_wh_("enc.bwd_wh", d_h / 2, d_h / 2),
      bwd_b_("enc.bwd_b", d_h / 2, 1) {
  embeddings_.value = fetch(tensors, "enc.embeddings", vocab_.size(), d_h);
  fwd_wx_.value = fetch(tensors, "enc.fwd_wx", d_h / 2, d_h);
  fwd_wh_.value = fetch(tensors, "enc.fwd_wh", d_h / 2, d_h / 2);
  fwd_b_.value = fetch(tensors, "enc.fwd_b", d_h / 2, 1);
  bwd_wx_.value = fetch(tensors, "enc.bwd_wx", d_h / 2, d_h);
  bwd_wh_.value = fetch(tensors, "enc.bwd_wh", d_h / 2, d_h / 2);
  bwd_b_.value = fetch(tensors, "enc.bwd_b", d_h / 2, 1);
}

std::pair<std::vector<VarId>, VarId> ToyEncoder::encode_on(
    Tape& t, const MarkedSequence& seq) {
  if (seq.tokens.empty()) {
    throw std::invalid_argument("encode: empty sequence");
  }
  const std::size_t n = seq.tokens.size();
  std::vector<VarId> emb(n);
  for (std::size_t i = 0; i < n; ++i) {
    emb[i] = t.parameter_row(embeddings_, vocab_.id(seq.tokens[i]));
  }
  const int half = d_h_ / 2;
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(half);

  std::vector<VarId> fwd(n), bwd(n);
  VarId prev = t.constant(zero);
  for (std::size_t i = 0; i < n; ++i) {
    VarId pre = t.add(t.add(t.matvec(fwd_wx_, emb[i]), t.matvec(fwd_wh_, prev)),
                      t.parameter(fwd_b_));
    fwd[i] = t.tanh(pre);
    prev = fwd[i];
  }
  prev = t.constant(zero);
  for (std::size_t i = n; i-- > 0;) {
    VarId pre = t.add(t.add(t.matvec(bwd_wx_, emb[i]), t.matvec(bwd_wh_, prev)),
                      t.parameter(bwd_b_));
    bwd[i] = t.tanh(pre);
    prev = bwd[i];
  }

  std::vector<VarId> hidden(n);
  for (std::size_t i = 0; i < n; ++i) {
    hidden[i] = t.add(emb[i], t.concat(fwd[i], bwd[i]));
  }
  return {hidden, hidden[0]};
}

void ToyEncoder::collect_parameters(std::vector<Tensor*>& out) {
  out.push_back(&embeddings_);
  out.push_back(&fwd_wx_);
  out.push_back(&fwd_wh_);
  out.push_back(&fwd_b_);
  out.push_back(&bwd_wx_);
  out.push_back(&bwd_wh_);
  out.push_back(&bwd_b_);
}

namespace {

std::string sequence_key(const std::vector<std::string>& tokens) {
  std::string key;
  for (const std::string& tok : tokens) {
    key += tok;
    key += '\x1f';
  }
  return key;
}

}  // namespace

PrecomputedEncoder::PrecomputedEncoder(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open encodings file: " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw std::runtime_error("encodings line " + std::to_string(line_no) +
                               ": malformed json (" + e.what() + ")");
    }
    std::vector<std::string> tokens =
        j.at("tokens").get<std::vector<std::string>>();
    auto rows = j.at("hidden").get<std::vector<std::vector<double>>>();
    if (rows.size() != tokens.size()) {
      throw std::runtime_error("encodings line " + std::to_string(line_no) +
                               ": hidden rows != token count");
    }
    if (rows.empty()) continue;
    if (d_h_ == 0) d_h_ = static_cast<int>(rows[0].size());
    Eigen::MatrixXd h(static_cast<Eigen::Index>(rows.size()), d_h_);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (static_cast<int>(rows[r].size()) != d_h_) {
        throw std::runtime_error("encodings line " + std::to_string(line_no) +
                                 ": ragged hidden matrix");
      }
      for (int c = 0; c < d_h_; ++c) {
        h(static_cast<Eigen::Index>(r), c) = rows[r][c];
      }
    }
    by_key_[sequence_key(tokens)] = std::move(h);
  }
  if (by_key_.empty()) {
    throw std::runtime_error("encodings file is empty: " + path);
  }
}

std::pair<std::vector<VarId>, VarId> PrecomputedEncoder::encode_on(
    Tape& t, const MarkedSequence& seq) {
  if (seq.tokens.empty()) {
    throw std::invalid_argument("encode: empty sequence");
  }
  auto it = by_key_.find(sequence_key(seq.tokens));
  if (it == by_key_.end()) {
    std::string joined;
    for (const std::string& tok : seq.tokens) joined += tok + " ";
    throw std::runtime_error("no precomputed encoding for sequence: " + joined);
  }
  const Eigen::MatrixXd& h = it->second;
  std::vector<VarId> vars(static_cast<std::size_t>(h.rows()));
  for (Eigen::Index i = 0; i < h.rows(); ++i) {
    vars[static_cast<std::size_t>(i)] = t.constant(h.row(i).transpose());
  }
  return {vars, vars[0]};
}

}  // namespace seq2set
