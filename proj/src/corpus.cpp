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

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace seq2set {

using nlohmann::json;

const char* tier_name(Tier t) {
  switch (t) {
    case Tier::kGeneral:
      return "general";
    case Tier::kFine:
      return "fine";
    case Tier::kUltraFine:
      return "ultra-fine";
  }
  return "?";
}

std::optional<Tier> tier_from_name(const std::string& name) {
  if (name == "general") return Tier::kGeneral;
  if (name == "fine") return Tier::kFine;
  if (name == "ultra-fine") return Tier::kUltraFine;
  return std::nullopt;
}

LabelVocabulary::LabelVocabulary(std::vector<std::string> labels,
                                 std::vector<Tier> tiers,
                                 std::vector<std::int64_t> shots)
    : labels_(std::move(labels)),
      tiers_(std::move(tiers)),
      shots_(std::move(shots)) {
  if (labels_.size() != tiers_.size() || labels_.size() != shots_.size()) {
    throw std::invalid_argument("LabelVocabulary: field length mismatch");
  }
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (!index_.emplace(labels_[i], static_cast<int>(i)).second) {
      throw std::invalid_argument("LabelVocabulary: duplicate label '" +
                                  labels_[i] + "'");
    }
  }
}

int LabelVocabulary::index(const std::string& label) const {
  auto it = index_.find(label);
  if (it == index_.end()) {
    throw std::out_of_range("unknown label '" + label + "'");
  }
  return it->second;
}

std::optional<int> LabelVocabulary::find(const std::string& label) const {
  auto it = index_.find(label);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Eigen::VectorXd EmbeddingTable::lookup(const std::string& word) const {
  auto it = vectors_.find(word);
  if (it == vectors_.end()) return Eigen::VectorXd::Zero(dimension_);
  return it->second;
}

void EmbeddingTable::insert(const std::string& word, Eigen::VectorXd v) {
  if (v.size() != dimension_) {
    throw std::invalid_argument("embedding dimension mismatch for '" + word +
                                "'");
  }
  vectors_[word] = std::move(v);
}

namespace {

std::vector<std::string> read_string_array(const json& j, const char* key,
                                           std::size_t line_no) {
  if (!j.contains(key) || !j[key].is_array()) {
    throw std::runtime_error("line " + std::to_string(line_no) +
                             ": missing or non-array field '" + key + "'");
  }
  std::vector<std::string> out;
  for (const auto& v : j[key]) {
    if (!v.is_string()) {
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": non-string entry in '" + key + "'");
    }
    out.push_back(v.get<std::string>());
  }
  return out;
}

void sort_unique(std::vector<std::string>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

std::vector<Instance> load_instances(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open instance file: " + path);
  std::vector<Instance> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": malformed json (" + e.what() + ")");
    }
    Instance inst;
    if (j.contains("id")) {
      if (j["id"].is_string()) {
        inst.id = j["id"].get<std::string>();
      } else {
        throw std::runtime_error("line " + std::to_string(line_no) +
                                 ": id must be a string");
      }
    } else {
      inst.id = std::to_string(line_no - 1);  // 0-based line number
    }
    inst.left_tokens = read_string_array(j, "left_tokens", line_no);
    inst.mention_tokens = read_string_array(j, "mention_tokens", line_no);
    inst.right_tokens = read_string_array(j, "right_tokens", line_no);
    inst.gold_labels = read_string_array(j, "gold_labels", line_no);
    sort_unique(inst.gold_labels);
    if (inst.mention_tokens.empty()) {
      throw std::runtime_error("instance '" + inst.id +
                               "': mention_tokens is empty");
    }
    out.push_back(std::move(inst));
  }
  return out;
}

void save_instances(const std::string& path,
                    const std::vector<Instance>& instances) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write instance file: " + path);
  for (const Instance& inst : instances) {
    json j;
    j["id"] = inst.id;
    j["left_tokens"] = inst.left_tokens;
    j["mention_tokens"] = inst.mention_tokens;
    j["right_tokens"] = inst.right_tokens;
    j["gold_labels"] = inst.gold_labels;
    out << j.dump() << "\n";
  }
}

std::map<std::string, Tier> load_tier_map(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open tier map: " + path);
  std::map<std::string, Tier> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw std::runtime_error("tier map line " + std::to_string(line_no) +
                               ": malformed json (" + e.what() + ")");
    }
    if (!j.contains("label") || !j.contains("tier")) {
      throw std::runtime_error("tier map line " + std::to_string(line_no) +
                               ": needs 'label' and 'tier'");
    }
    std::string label = j["label"].get<std::string>();
    std::string tier = j["tier"].get<std::string>();
    auto t = tier_from_name(tier);
    if (!t) {
      throw std::runtime_error("tier map line " + std::to_string(line_no) +
                               ": unknown tier '" + tier + "'");
    }
    out[label] = *t;
  }
  return out;
}

void save_tier_map(const std::string& path,
                   const std::map<std::string, Tier>& tier_map) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write tier map: " + path);
  for (const auto& [label, tier] : tier_map) {
    json j;
    j["label"] = label;
    j["tier"] = tier_name(tier);
    out << j.dump() << "\n";
  }
}

LabelVocabulary build_vocabulary(const std::vector<Instance>& train,
                                 const std::map<std::string, Tier>& tier_map) {
  std::vector<std::string> labels;
  labels.reserve(tier_map.size());
  for (const auto& [label, tier] : tier_map) labels.push_back(label);
  // std::map iteration is already lexicographic; keep the sort explicit so
  // the ordering contract does not depend on the container choice.
  std::sort(labels.begin(), labels.end());

  std::unordered_map<std::string, std::int64_t> counts;
  for (const Instance& inst : train) {
    for (const std::string& label : inst.gold_labels) {
      if (tier_map.find(label) == tier_map.end()) {
        throw std::runtime_error("train label '" + label +
                                 "' missing from tier map");
      }
      ++counts[label];
    }
  }

  std::vector<Tier> tiers;
  std::vector<std::int64_t> shots;
  tiers.reserve(labels.size());
  shots.reserve(labels.size());
  for (const std::string& label : labels) {
    tiers.push_back(tier_map.at(label));
    auto it = counts.find(label);
    shots.push_back(it == counts.end() ? 0 : it->second);
  }
  return LabelVocabulary(std::move(labels), std::move(tiers),
                         std::move(shots));
}

EmbeddingTable load_embedding_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embedding table: " + path);
  EmbeddingTable table;
  std::string line;
  std::size_t line_no = 0;
  Eigen::Index dim = -1;
  std::unordered_map<std::string, Eigen::VectorXd> staged;
  std::vector<std::string> order;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    std::vector<double> vals;
    double x;
    while (ss >> x) vals.push_back(x);
    if (word.empty() || vals.empty()) {
      throw std::runtime_error("embedding line " + std::to_string(line_no) +
                               ": expected `word v1 ... vd`");
    }
    if (dim < 0) {
      dim = static_cast<Eigen::Index>(vals.size());
    } else if (static_cast<Eigen::Index>(vals.size()) != dim) {
      throw std::runtime_error("embedding line " + std::to_string(line_no) +
                               ": dimension " + std::to_string(vals.size()) +
                               " != " + std::to_string(dim));
    }
    if (staged.count(word)) {
      std::cerr << "warning: duplicate embedding for '" << word << "' at line "
                << line_no << "; last entry wins\n";
    } else {
      order.push_back(word);
    }
    staged[word] =
        Eigen::Map<Eigen::VectorXd>(vals.data(),
                                    static_cast<Eigen::Index>(vals.size()));
  }
  if (dim < 0) throw std::runtime_error("empty embedding table: " + path);
  table = EmbeddingTable(dim);
  for (const std::string& w : order) table.insert(w, staged[w]);
  return table;
}

}  // namespace seq2set
