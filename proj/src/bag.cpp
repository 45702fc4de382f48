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

#include "seq2set/bag.hpp"

#include <cctype>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "seq2set/stopwords.hpp"

namespace seq2set {

using nlohmann::json;
using tape::Tape;
using tape::Tensor;
using tape::VarId;

const char* attribute_source_name(AttributeSource s) {
  return s == AttributeSource::kContext ? "context" : "entity";
}

namespace {

AttributeSource attribute_source_from_name(const std::string& name) {
  if (name == "context") return AttributeSource::kContext;
  if (name == "entity") return AttributeSource::kEntity;
  throw std::runtime_error("unknown attribute source '" + name + "'");
}

double cosine_or_zero(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double na = a.norm();
  double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '\'';
}

}  // namespace

std::string LookupTableProposer::query_key(const MaskedQuery& query) {
  std::string key;
  for (std::size_t i = 0; i < query.tokens.size(); ++i) {
    if (i) key += ' ';
    key += query.tokens[i];
  }
  return key;
}

LookupTableProposer::LookupTableProposer(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open proposer table: " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw std::runtime_error("proposer table line " +
                               std::to_string(line_no) + ": malformed json (" +
                               e.what() + ")");
    }
    std::vector<std::pair<std::string, double>> cands;
    for (const auto& c : j.at("candidates")) {
      cands.emplace_back(c.at("word").get<std::string>(),
                         c.at("p").get<double>());
    }
    table_[j.at("query").get<std::string>()] = std::move(cands);
  }
}

std::vector<std::pair<std::string, double>> LookupTableProposer::propose(
    const MaskedQuery& query) const {
  auto it = table_.find(query_key(query));
  if (it == table_.end()) return {};
  return it->second;
}

MaskedQuery masked_query_for(const Instance& instance) {
  MaskedQuery q;
  q.tokens = instance.left_tokens;
  q.mask_position = static_cast<int>(q.tokens.size());
  q.tokens.push_back(kMaskToken);  // one slot for the whole mention span
  q.tokens.insert(q.tokens.end(), instance.right_tokens.begin(),
                  instance.right_tokens.end());
  return q;
}

std::vector<AttributeProposal> propose_context_attributes(
    const Instance& instance, const ContextAttributeProposer& proposer,
    double theta_c) {
  if (theta_c < 0.0 || theta_c > 1.0) {
    throw std::invalid_argument("theta_c must lie in [0,1]");
  }
  std::vector<std::pair<std::string, double>> candidates;
  try {
    candidates = proposer.propose(masked_query_for(instance));
  } catch (const std::exception& e) {
    throw std::runtime_error("context attribute proposer failed on instance '" +
                             instance.id + "': " + e.what());
  }
  std::vector<AttributeProposal> out;
  for (const auto& [word, p] : candidates) {
    std::string w = to_lower(word);
    if (w.empty() || is_stop_word(w)) continue;
    if (p > theta_c) {
      out.push_back({w, p, AttributeSource::kContext});
    }
  }
  return out;
}

std::vector<std::string> default_mention_segmenter(
    const std::vector<std::string>& mention_tokens) {
  std::vector<std::string> words;
  for (const std::string& token : mention_tokens) {
    std::string cur;
    for (char c : token) {
      if (is_word_char(c)) {
        cur += c;
      } else if (!cur.empty()) {
        words.push_back(to_lower(cur));
        cur.clear();
      }
    }
    if (!cur.empty()) words.push_back(to_lower(cur));
  }
  return words;
}

std::vector<AttributeProposal> propose_entity_attributes(
    const Instance& instance, const MentionSegmenter& segmenter) {
  std::vector<AttributeProposal> out;
  std::set<std::string> seen;
  for (const std::string& word : segmenter(instance.mention_tokens)) {
    if (word.empty() || is_stop_word(word)) continue;
    if (seen.insert(word).second) {
      out.push_back({word, 1.0, AttributeSource::kEntity});
    }
  }
  return out;
}

std::vector<AttributeProposal> propose_entity_attributes(
    const Instance& instance) {
  return propose_entity_attributes(instance, default_mention_segmenter);
}

std::string label_embedding_word(const std::string& label) {
  std::string tail = label;
  auto slash = tail.find_last_of('/');
  if (slash != std::string::npos) tail = tail.substr(slash + 1);
  std::string word;
  std::string cur;
  for (char c : tail) {
    if (c == ' ' || c == '\t' || c == '_' || c == '-') {
      if (!cur.empty()) word = cur;
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) word = cur;
  return to_lower(word);
}

BipartiteAttributeGraph build_graph(
    const std::vector<AttributeProposal>& proposals,
    const LabelVocabulary& vocab, const EmbeddingTable& table) {
  BipartiteAttributeGraph g;
  std::set<std::string> seen;
  for (const AttributeProposal& p : proposals) {
    if (seen.insert(p.word).second) g.attribute_words.push_back(p.word);
  }
  const Eigen::Index n_a = static_cast<Eigen::Index>(g.attribute_words.size());
  const Eigen::Index n_l = vocab.size();
  const Eigen::Index d_g = table.dimension();

  g.attribute_embeddings.resize(n_a, d_g);
  for (Eigen::Index i = 0; i < n_a; ++i) {
    g.attribute_embeddings.row(i) =
        table.lookup(g.attribute_words[static_cast<std::size_t>(i)])
            .transpose();
  }
  g.label_words.resize(static_cast<std::size_t>(n_l));
  g.label_embeddings.resize(n_l, d_g);
  for (Eigen::Index j = 0; j < n_l; ++j) {
    std::string w = label_embedding_word(vocab.label(static_cast<int>(j)));
    g.label_words[static_cast<std::size_t>(j)] = w;
    g.label_embeddings.row(j) = table.lookup(w).transpose();
  }
  g.edges.resize(n_a, n_l);
  for (Eigen::Index i = 0; i < n_a; ++i) {
    for (Eigen::Index j = 0; j < n_l; ++j) {
      g.edges(i, j) = cosine_or_zero(g.attribute_embeddings.row(i).transpose(),
                                     g.label_embeddings.row(j).transpose());
    }
  }
  return g;
}

Eigen::VectorXd activate(const Eigen::VectorXd& s_t,
                         const BipartiteAttributeGraph& graph,
                         const Eigen::MatrixXd& w_s) {
  if (w_s.cols() != s_t.size()) {
    throw std::invalid_argument("activate: w_s columns != decoder width");
  }
  Eigen::VectorXd q = w_s * s_t;
  Eigen::VectorXd scores(graph.attribute_count());
  for (Eigen::Index i = 0; i < graph.attribute_count(); ++i) {
    double c = cosine_or_zero(q, graph.attribute_embeddings.row(i).transpose());
    scores(i) = std::max(0.0, c);
  }
  return scores;
}

std::pair<Eigen::VectorXd, std::set<int>> induce(
    const Eigen::VectorXd& attr_scores, const BipartiteAttributeGraph& graph,
    double theta_s) {
  if (theta_s < 0.0) throw std::invalid_argument("theta_s must be >= 0");
  if (attr_scores.size() != graph.attribute_count()) {
    throw std::invalid_argument("induce: score/attribute count mismatch");
  }
  Eigen::VectorXd label_scores =
      graph.edges.transpose() * attr_scores;  // may be empty-sum zero
  if (graph.attribute_count() == 0) {
    label_scores = Eigen::VectorXd::Zero(graph.label_count());
  }
  std::set<int> induced;
  for (Eigen::Index j = 0; j < label_scores.size(); ++j) {
    if (label_scores(j) > theta_s) induced.insert(static_cast<int>(j));
  }
  return {label_scores, induced};
}

VarId activation_scores_on(Tape& t, const BipartiteAttributeGraph& graph,
                           Tensor& w_s, VarId hidden) {
  VarId q = t.matvec(w_s, hidden);
  std::vector<VarId> scores;
  scores.reserve(static_cast<std::size_t>(graph.attribute_count()));
  for (Eigen::Index i = 0; i < graph.attribute_count(); ++i) {
    scores.push_back(t.relu(
        t.cosine_fixed(q, graph.attribute_embeddings.row(i).transpose())));
  }
  return t.stack(scores);
}

VarId induced_label_scores_on(Tape& t, const BipartiteAttributeGraph& graph,
                              VarId attr_scores) {
  return t.matvec_fixed(graph.edges.transpose(), attr_scores);
}

PrecomputedAttributeStore::PrecomputedAttributeStore(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open attribute file: " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw std::runtime_error("attribute file line " +
                               std::to_string(line_no) + ": malformed json (" +
                               e.what() + ")");
    }
    std::vector<AttributeProposal> proposals;
    for (const auto& a : j.at("attributes")) {
      proposals.push_back({a.at("word").get<std::string>(),
                           a.at("score").get<double>(),
                           attribute_source_from_name(
                               a.at("source").get<std::string>())});
    }
    put(j.at("id").get<std::string>(), std::move(proposals));
  }
}

const std::vector<AttributeProposal>& PrecomputedAttributeStore::get(
    const std::string& id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) {
    throw std::out_of_range("no precomputed attributes for instance '" + id +
                            "'");
  }
  return it->second;
}

void PrecomputedAttributeStore::put(const std::string& id,
                                    std::vector<AttributeProposal> proposals) {
  if (!by_id_.count(id)) order_.push_back(id);
  by_id_[id] = std::move(proposals);
}

void PrecomputedAttributeStore::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write attribute file: " + path);
  for (const std::string& id : order_) {
    json attrs = json::array();
    for (const AttributeProposal& p : by_id_.at(id)) {
      attrs.push_back({{"word", p.word},
                       {"score", p.score},
                       {"source", attribute_source_name(p.source)}});
    }
    out << json{{"id", id}, {"attributes", attrs}}.dump() << "\n";
  }
}

}  // namespace seq2set
