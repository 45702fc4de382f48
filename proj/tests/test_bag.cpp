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

#include <cmath>

#include "doctest.h"
#include "support/testutil.hpp"

using namespace seq2set;
using testutil::TempDir;
using testutil::write_file;

namespace {

class MapProposer : public ContextAttributeProposer {
 public:
  explicit MapProposer(std::vector<std::pair<std::string, double>> out)
      : out_(std::move(out)) {}
  std::vector<std::pair<std::string, double>> propose(
      const MaskedQuery&) const override {
    return out_;
  }

 private:
  std::vector<std::pair<std::string, double>> out_;
};

class FailingProposer : public ContextAttributeProposer {
 public:
  std::vector<std::pair<std::string, double>> propose(
      const MaskedQuery&) const override {
    throw std::runtime_error("model server unavailable");
  }
};

Instance fbi_instance() {
  Instance inst;
  inst.id = "fbi";
  inst.left_tokens = {"They", "were", "arrested", "by"};
  inst.mention_tokens = {"FBI", "agents"};
  inst.right_tokens = {"."};
  return inst;
}

LabelVocabulary tiny_vocab() {
  return build_vocabulary({}, {{"agent", Tier::kFine},
                               {"organization", Tier::kGeneral},
                               {"police", Tier::kUltraFine}});
}

}  // namespace

TEST_CASE("context attribute proposals filter by stop list and threshold") {
  Instance inst = fbi_instance();
  MapProposer proposer({{"scholar", 0.25}, {"the", 0.4}, {"cat", 0.05}});

  auto out = propose_context_attributes(inst, proposer, 0.1);
  REQUIRE(out.size() == 1);  // "the" is a stop word, 0.05 <= 0.1
  CHECK(out[0].word == "scholar");
  CHECK(out[0].score == doctest::Approx(0.25));
  CHECK(out[0].source == AttributeSource::kContext);

  CHECK(propose_context_attributes(inst, proposer, 1.0).empty());

  FailingProposer failing;
  CHECK_THROWS_WITH_AS(propose_context_attributes(inst, failing, 0.1),
                       doctest::Contains("fbi"), std::runtime_error);
}

TEST_CASE("masked query collapses the mention to one [MASK] slot") {
  MaskedQuery q = masked_query_for(fbi_instance());
  CHECK(q.tokens == std::vector<std::string>{"They", "were", "arrested", "by",
                                             "[MASK]", "."});
  CHECK(q.mask_position == 4);
  CHECK(LookupTableProposer::query_key(q) == "They were arrested by [MASK] .");
}

TEST_CASE("entity attributes segment, lowercase, filter and dedup") {
  Instance inst = fbi_instance();
  auto out = propose_entity_attributes(inst);
  REQUIRE(out.size() == 2);
  CHECK(out[0].word == "fbi");
  CHECK(out[1].word == "agents");
  CHECK(out[0].score == 1.0);
  CHECK(out[0].source == AttributeSource::kEntity);

  Instance stop;
  stop.id = "s";
  stop.mention_tokens = {"the"};
  CHECK(propose_entity_attributes(stop).empty());

  Instance dup;
  dup.id = "d";
  dup.mention_tokens = {"agents", "agents"};
  CHECK(propose_entity_attributes(dup).size() == 1);

  Instance hyphen;
  hyphen.id = "h";
  hyphen.mention_tokens = {"vice-president"};
  auto words = propose_entity_attributes(hyphen);
  REQUIRE(words.size() == 2);
  CHECK(words[0].word == "vice");
  CHECK(words[1].word == "president");
}

TEST_CASE("label embedding word follows the last-word rule") {
  CHECK(label_embedding_word("/person/artist/director") == "director");
  CHECK(label_embedding_word("living_thing") == "thing");
  CHECK(label_embedding_word("military officer") == "officer");
  CHECK(label_embedding_word("Police") == "police");
}

TEST_CASE("build_graph computes cosine edges against label words") {
  EmbeddingTable table(2);
  table.insert("agents", (Eigen::VectorXd(2) << 1.0, 0.0).finished());
  table.insert("agent", (Eigen::VectorXd(2) << 1.0, 0.0).finished());
  table.insert("police", (Eigen::VectorXd(2) << 0.0, 1.0).finished());
  LabelVocabulary vocab = tiny_vocab();

  SUBCASE("no proposals give an empty graph") {
    BipartiteAttributeGraph g = build_graph({}, vocab, table);
    CHECK(g.attribute_count() == 0);
    CHECK(g.label_count() == 3);
    CHECK(g.edges.size() == 0);
  }

  SUBCASE("identical and orthogonal embeddings") {
    std::vector<AttributeProposal> proposals = {
        {"agents", 1.0, AttributeSource::kEntity},
        {"agents", 0.5, AttributeSource::kContext},  // dedup keeps one node
    };
    BipartiteAttributeGraph g = build_graph(proposals, vocab, table);
    REQUIRE(g.attribute_count() == 1);
    int agent = vocab.index("agent");
    int police = vocab.index("police");
    int organization = vocab.index("organization");
    CHECK(g.edges(0, agent) == doctest::Approx(1.0));    // same embedding
    CHECK(g.edges(0, police) == doctest::Approx(0.0));   // orthogonal
    CHECK(g.edges(0, organization) == 0.0);  // out-of-table word: zero vector
  }
}

TEST_CASE("activate scores lie in [0,1] and follow the cosine geometry") {
  EmbeddingTable table(2);
  table.insert("a", (Eigen::VectorXd(2) << 1.0, 0.0).finished());
  table.insert("b", (Eigen::VectorXd(2) << -1.0, 0.0).finished());
  table.insert("agent", (Eigen::VectorXd(2) << 0.5, 0.5).finished());
  LabelVocabulary vocab = tiny_vocab();
  BipartiteAttributeGraph g =
      build_graph({{"a", 1.0, AttributeSource::kEntity},
                   {"b", 1.0, AttributeSource::kEntity}},
                  vocab, table);

  Eigen::MatrixXd w_s = Eigen::MatrixXd::Identity(2, 2);
  Eigen::VectorXd s(2);
  s << 2.0, 0.0;  // parallel to "a", anti-parallel to "b"
  Eigen::VectorXd scores = activate(s, g, w_s);
  CHECK(scores(0) == doctest::Approx(1.0));
  CHECK(scores(1) == 0.0);  // ReLU of -1

  Eigen::VectorXd zero = Eigen::VectorXd::Zero(2);
  CHECK(activate(zero, g, w_s).maxCoeff() == 0.0);

  // Hand-set 2-dim case against a direct cosine+ReLU evaluation.
  Rng rng(5);
  Eigen::MatrixXd w = testutil::random_matrix(rng, 2, 2);
  Eigen::VectorXd q = w * s;
  Eigen::VectorXd expect(2);
  for (int i = 0; i < 2; ++i) {
    Eigen::VectorXd a = g.attribute_embeddings.row(i).transpose();
    expect(i) = std::max(0.0, q.dot(a) / (q.norm() * a.norm()));
  }
  CHECK((activate(s, g, w) - expect).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("induce sums edge-weighted activations and thresholds strictly") {
  // Hand case: attr scores {a1: 0.5, a2: 0.2}, edges a1->l1 = 0.8,
  // a2->l1 = 0.5 give score(l1) = 0.5*0.8 + 0.2*0.5 = 0.50.
  BipartiteAttributeGraph g;
  g.attribute_words = {"a1", "a2"};
  g.label_words = {"l1", "l2"};
  g.edges.resize(2, 2);
  g.edges << 0.8, 0.1, 0.5, 0.0;
  Eigen::VectorXd scores(2);
  scores << 0.5, 0.2;

  auto [label_scores, induced] = induce(scores, g, 0.2);
  CHECK(label_scores(0) == doctest::Approx(0.50));
  CHECK(label_scores(1) == doctest::Approx(0.05));
  CHECK(induced == std::set<int>{0});

  auto [zero_scores, none] = induce(Eigen::VectorXd::Zero(2), g, 0.0);
  CHECK(zero_scores.norm() == 0.0);
  CHECK(none.empty());  // strict inequality

  CHECK_THROWS(induce(scores, g, -0.5));
}

TEST_CASE("induce matches a brute-force double loop on random graphs") {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::Index n_a = rng.below(10);
    Eigen::Index n_l = 1 + rng.below(20);
    BipartiteAttributeGraph g;
    g.edges = testutil::random_matrix(rng, n_a, n_l);
    g.attribute_words.resize(n_a);
    g.label_words.resize(n_l);
    Eigen::VectorXd scores = testutil::random_vector(rng, n_a, 0.0, 1.0);
    double theta = rng.uniform(0.0, 1.5);

    auto [label_scores, induced] = induce(scores, g, theta);
    for (Eigen::Index j = 0; j < n_l; ++j) {
      double expect = 0.0;
      for (Eigen::Index i = 0; i < n_a; ++i) {
        expect += scores(i) * g.edges(i, j);
      }
      CHECK(std::abs(label_scores(j) - expect) < 1e-9);
      CHECK(induced.count(static_cast<int>(j)) == (expect > theta ? 1 : 0));
    }
  }
}

TEST_CASE("monotonicity: raising an activation never lowers label scores") {
  Rng rng(19);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::Index n_a = 1 + rng.below(8);
    Eigen::Index n_l = 1 + rng.below(12);
    BipartiteAttributeGraph g;
    g.edges = testutil::random_matrix(rng, n_a, n_l, 0.0, 1.0);  // non-negative
    g.attribute_words.resize(n_a);
    g.label_words.resize(n_l);
    Eigen::VectorXd scores = testutil::random_vector(rng, n_a, 0.0, 1.0);
    Eigen::VectorXd before = induce(scores, g, 0.1).first;
    Eigen::Index bump = static_cast<Eigen::Index>(rng.below(n_a));
    scores(bump) += rng.uniform(0.0, 0.5);
    Eigen::VectorXd after = induce(scores, g, 0.1).first;
    CHECK(((after - before).array() >= -1e-12).all());
  }
}

TEST_CASE("activation tape builder matches the value path and differentiates") {
  Rng rng(23);
  EmbeddingTable table(3);
  table.insert("x", testutil::random_vector(rng, 3));
  table.insert("y", testutil::random_vector(rng, 3));
  table.insert("agent", testutil::random_vector(rng, 3));
  table.insert("police", testutil::random_vector(rng, 3));
  BipartiteAttributeGraph g =
      build_graph({{"x", 1.0, AttributeSource::kEntity},
                   {"y", 1.0, AttributeSource::kEntity}},
                  tiny_vocab(), table);

  tape::Tensor w_s("bag.w_s", 3, 4);
  rng.fill_uniform(w_s.value, -0.7, 0.7);
  Eigen::VectorXd hidden = testutil::random_vector(rng, 4);
  Eigen::VectorXd sign(3);
  sign << 1.0, -1.0, 1.0;

  auto eval = [&](bool backprop) {
    tape::Tape t;
    tape::VarId act = activation_scores_on(t, g, w_s, t.constant(hidden));
    tape::VarId label_scores = induced_label_scores_on(t, g, act);
    tape::VarId loss = t.scale(t.dot_fixed(label_scores, sign), -1.0);
    double out = t.scalar(loss);
    if (backprop) t.backward(loss);
    return out;
  };

  // Value-path equivalence.
  Eigen::VectorXd act = activate(hidden, g, w_s.value);
  double direct = 0.0;
  Eigen::VectorXd label_scores = induce(act, g, 0.0).first;
  for (int j = 0; j < 3; ++j) direct -= label_scores(j) * sign(j);
  CHECK(eval(false) == doctest::Approx(direct));

  w_s.zero_grad();
  eval(true);
  auto report = testutil::check_gradients({&w_s}, [&] { return eval(false); });
  CHECK(report.max_rel_err < 1e-4);
}

TEST_CASE("precomputed attribute store round-trips") {
  TempDir dir("bag");
  PrecomputedAttributeStore store;
  store.put("a", {{"expert", 0.4, AttributeSource::kContext},
                  {"agents", 1.0, AttributeSource::kEntity}});
  store.put("b", {});
  store.save(dir.file("attrs.jsonl"));

  PrecomputedAttributeStore loaded(dir.file("attrs.jsonl"));
  CHECK(loaded.contains("a"));
  CHECK(loaded.contains("b"));
  CHECK_FALSE(loaded.contains("c"));
  REQUIRE(loaded.get("a").size() == 2);
  CHECK(loaded.get("a")[0].word == "expert");
  CHECK(loaded.get("a")[0].source == AttributeSource::kContext);
  CHECK(loaded.get("b").empty());
  CHECK_THROWS(loaded.get("c"));
}

TEST_CASE("lookup-table proposer serves stored candidates") {
  TempDir dir("prop");
  write_file(
      dir.file("prop.jsonl"),
      R"({"query":"They were arrested by [MASK] .","candidates":[{"word":"police","p":0.3},{"word":"the","p":0.5}]})"
      "\n");
  LookupTableProposer proposer(dir.file("prop.jsonl"));
  auto cands = proposer.propose(masked_query_for(fbi_instance()));
  REQUIRE(cands.size() == 2);
  CHECK(cands[0].first == "police");

  MaskedQuery unknown;
  unknown.tokens = {"[MASK]"};
  unknown.mask_position = 0;
  CHECK(proposer.propose(unknown).empty());

  // End to end: stop word filtered, threshold applied.
  auto attrs = propose_context_attributes(fbi_instance(), proposer, 0.1);
  REQUIRE(attrs.size() == 1);
  CHECK(attrs[0].word == "police");
}
