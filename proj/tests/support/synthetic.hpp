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

#ifndef SEQ2SET_TESTS_SUPPORT_SYNTHETIC_H_
#define SEQ2SET_TESTS_SUPPORT_SYNTHETIC_H_

#include <map>
#include <string>
#include <vector>

#include "seq2set/corpus.hpp"

namespace seq2set::synthetic {

// A 40-label, 3-tier taxonomy (4 general, 12 fine, 24 ultra-fine) whose
// leaves are composed from attribute words:
//   - every trained leaf carries a unique "essence" attribute;
//   - eight trained leaves (donors) additionally carry a shared "trait";
//   - four held-out leaves are composed purely of two donor traits from
//     other families, so their attributes all appear in trained labels.
// Mentions spell out the attribute words; contexts carry family- and
// leaf-signature tokens. Gold sets are {general, fine, leaf} paths.
struct World {
  std::vector<Instance> train;  // held-out leaves never appear here
  std::vector<Instance> dev;
  std::vector<Instance> test;   // includes held-out-leaf instances
  std::map<std::string, Tier> tier_map;
  std::vector<std::string> embedding_lines;
  std::vector<std::string> proposer_lines;  // masked-query lookup table
  std::vector<std::string> held_out;  // the four zero-shot leaf labels

  // Writes train/dev/test.jsonl, tiers.jsonl, embeddings.txt and
  // proposer.jsonl.
  void write(const std::string& dir) const;
};

World make_world(std::uint64_t seed);

}  // namespace seq2set::synthetic

#endif  // SEQ2SET_TESTS_SUPPORT_SYNTHETIC_H_
