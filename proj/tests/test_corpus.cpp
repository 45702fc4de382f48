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

#include "seq2set/corpus.hpp"

#include <set>

#include "doctest.h"
#include "support/testutil.hpp"

using namespace seq2set;
using testutil::TempDir;
using testutil::write_file;

namespace {

const char* kFbiLine =
    R"({"left_tokens":["They","were","arrested","by"],"mention_tokens":["FBI","agents"],"right_tokens":["."],"gold_labels":["organization","administration","force","agent","police"]})";

}  // namespace

TEST_CASE("load_instances parses the canonical schema") {
  TempDir dir("corpus");
  write_file(dir.file("train.jsonl"), std::string(kFbiLine) + "\n");
  auto instances = load_instances(dir.file("train.jsonl"));
  REQUIRE(instances.size() == 1);
  CHECK(instances[0].id == "0");  // synthesized 0-based line number
  CHECK(instances[0].mention_tokens ==
        std::vector<std::string>{"FBI", "agents"});
  CHECK(instances[0].gold_labels.size() == 5);
}

TEST_CASE("load_instances edge cases") {
  TempDir dir("corpus");

  write_file(dir.file("empty.jsonl"), "");
  CHECK(load_instances(dir.file("empty.jsonl")).empty());

  write_file(dir.file("badmention.jsonl"),
             R"({"left_tokens":[],"mention_tokens":[],"right_tokens":[],"gold_labels":[],"id":"x9"})"
             "\n");
  CHECK_THROWS_WITH_AS(load_instances(dir.file("badmention.jsonl")),
                       doctest::Contains("x9"), std::runtime_error);

  write_file(dir.file("malformed.jsonl"),
             std::string(kFbiLine) + "\nnot json at all\n");
  CHECK_THROWS_WITH_AS(load_instances(dir.file("malformed.jsonl")),
                       doctest::Contains("line 2"), std::runtime_error);
}

TEST_CASE("instances round-trip through jsonl") {
  TempDir dir("corpus");
  Rng rng(3);
  std::vector<Instance> instances;
  for (int i = 0; i < 20; ++i) {
    Instance inst;
    inst.id = "inst-" + std::to_string(i);
    for (std::uint64_t k = 0; k < rng.below(4); ++k) {
      inst.left_tokens.push_back("l" + std::to_string(rng.below(50)));
    }
    inst.mention_tokens.push_back("m" + std::to_string(rng.below(10)));
    for (std::uint64_t k = 0; k < rng.below(3); ++k) {
      inst.right_tokens.push_back("r" + std::to_string(rng.below(50)));
    }
    std::set<std::string> golds;
    for (std::uint64_t k = 0; k < rng.below(5); ++k) {
      golds.insert("label" + std::to_string(rng.below(12)));
    }
    inst.gold_labels.assign(golds.begin(), golds.end());
    instances.push_back(std::move(inst));
  }
  save_instances(dir.file("round.jsonl"), instances);
  CHECK(load_instances(dir.file("round.jsonl")) == instances);
}

TEST_CASE("build_vocabulary counts shots over the tier-map label space") {
  Instance a;
  a.id = "a";
  a.mention_tokens = {"x"};
  a.gold_labels = {"person"};
  Instance b = a;
  b.id = "b";
  std::map<std::string, Tier> tiers = {{"person", Tier::kGeneral},
                                       {"writer", Tier::kFine}};

  LabelVocabulary vocab = build_vocabulary({a, b}, tiers);
  CHECK(vocab.size() == 2);
  CHECK(vocab.shot(vocab.index("person")) == 2);
  CHECK(vocab.shot(vocab.index("writer")) == 0);
  CHECK(vocab.eos_id() == 2);

  LabelVocabulary empty_train = build_vocabulary({}, {{"a", Tier::kFine}});
  CHECK(empty_train.shot(0) == 0);

  Instance alien = a;
  alien.gold_labels = {"alien"};
  CHECK_THROWS_WITH_AS(build_vocabulary({alien}, tiers),
                       doctest::Contains("alien"), std::runtime_error);
}

TEST_CASE("vocabulary ids are deterministic lexicographic ranks") {
  std::map<std::string, Tier> tiers = {{"zebra", Tier::kUltraFine},
                                       {"apple", Tier::kGeneral},
                                       {"mango", Tier::kFine}};
  LabelVocabulary v1 = build_vocabulary({}, tiers);
  LabelVocabulary v2 = build_vocabulary({}, tiers);
  CHECK(v1.labels() == v2.labels());
  CHECK(v1.labels() == std::vector<std::string>{"apple", "mango", "zebra"});
  std::set<int> ids;
  for (const std::string& label : v1.labels()) ids.insert(v1.index(label));
  CHECK(ids.size() == static_cast<std::size_t>(v1.size()));
  CHECK(*ids.rbegin() == v1.size() - 1);
}

TEST_CASE("embedding table loads and validates") {
  TempDir dir("emb");
  write_file(dir.file("ok.txt"), "a 1 0\nb 0 1\n");
  EmbeddingTable table = load_embedding_table(dir.file("ok.txt"));
  CHECK(table.dimension() == 2);
  CHECK(table.lookup("a")(0) == doctest::Approx(1.0));
  CHECK(table.lookup("missing").norm() == 0.0);  // zero-vector convention

  write_file(dir.file("ragged.txt"), "a 1 0\nb 1\n");
  CHECK_THROWS_WITH_AS(load_embedding_table(dir.file("ragged.txt")),
                       doctest::Contains("line 2"), std::runtime_error);

  write_file(dir.file("empty.txt"), "");
  CHECK_THROWS_WITH_AS(load_embedding_table(dir.file("empty.txt")),
                       doctest::Contains("empty embedding table"),
                       std::runtime_error);

  write_file(dir.file("dup.txt"), "a 1 0\na 0 1\n");
  EmbeddingTable dup = load_embedding_table(dir.file("dup.txt"));
  CHECK(dup.lookup("a")(1) == doctest::Approx(1.0));  // last entry wins
}

TEST_CASE("tier map round-trips") {
  TempDir dir("tiers");
  std::map<std::string, Tier> tiers = {{"person", Tier::kGeneral},
                                       {"engineer", Tier::kFine},
                                       {"roboticist", Tier::kUltraFine}};
  save_tier_map(dir.file("t.jsonl"), tiers);
  CHECK(load_tier_map(dir.file("t.jsonl")) == tiers);
}
