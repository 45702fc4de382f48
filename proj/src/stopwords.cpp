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

#include "seq2set/stopwords.hpp"

#include <cctype>
#include <unordered_set>

namespace seq2set {

namespace {

// Stop-word list v1: standard English function words plus a handful of
// high-frequency fillers. Frozen; changing it changes attribute sets.
const std::unordered_set<std::string>& stop_set() {
  static const std::unordered_set<std::string> kStop = {
      "a",       "about",  "above",   "after",  "again",   "against", "all",
      "am",      "an",     "and",     "any",    "are",     "aren't",  "as",
      "at",      "be",     "because", "been",   "before",  "being",   "below",
      "between", "both",   "but",     "by",     "can",     "cannot",  "could",
      "did",     "do",     "does",    "doing",  "down",    "during",  "each",
      "few",     "for",    "from",    "further", "had",    "has",     "have",
      "having",  "he",     "her",     "here",   "hers",    "herself", "him",
      "himself", "his",    "how",     "i",      "if",      "in",      "into",
      "is",      "isn't",  "it",      "its",    "itself",  "just",    "me",
      "more",    "most",   "my",      "myself", "no",      "nor",     "not",
      "now",     "of",     "off",     "on",     "once",    "only",    "or",
      "other",   "our",    "ours",    "ourselves", "out",  "over",    "own",
      "same",    "she",    "should",  "so",     "some",    "such",    "than",
      "that",    "the",    "their",   "theirs", "them",    "themselves",
      "then",    "there",  "these",   "they",   "this",    "those",   "through",
      "to",      "too",    "under",   "until",  "up",      "very",    "was",
      "we",      "were",   "what",    "when",   "where",   "which",   "while",
      "who",     "whom",   "why",     "will",   "with",    "would",   "you",
      "your",    "yours",  "yourself", "yourselves",
  };
  return kStop;
}

}  // namespace

std::string to_lower(const std::string& word) {
  std::string out = word;
  for (char& c : out) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

bool is_stop_word(const std::string& word) {
  return stop_set().count(to_lower(word)) > 0;
}

}  // namespace seq2set
