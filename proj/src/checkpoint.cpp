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

#include "seq2set/checkpoint.hpp"

#include <bit>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

static_assert(std::endian::native == std::endian::little,
              "tensor blobs are little-endian; big-endian hosts need swaps");

namespace seq2set {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kFormatVersion = 1;

std::uint64_t fnv1a(std::uint64_t h, const std::string& s) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string timestamp_utc() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

}  // namespace

std::uint64_t vocab_hash(const LabelVocabulary& vocab) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (int i = 0; i < vocab.size(); ++i) {
    h = fnv1a(h, vocab.label(i));
    h = fnv1a(h, tier_name(vocab.tier(i)));
  }
  return h;
}

void save_checkpoint(const std::string& dir, const RunConfig& config,
                     const LabelVocabulary& vocab,
                     const std::vector<const tape::Tensor*>& tensors,
                     const TokenVocab* token_vocab) {
  fs::create_directories(dir);

  json index = json::array();
  {
    std::ofstream blob(fs::path(dir) / "tensors.bin", std::ios::binary);
    if (!blob) throw std::runtime_error("cannot write tensors.bin in " + dir);
    std::uint64_t offset = 0;
    for (const tape::Tensor* t : tensors) {
      index.push_back({{"name", t->name},
                       {"rows", t->rows()},
                       {"cols", t->cols()},
                       {"offset", offset}});
      std::uint64_t bytes =
          static_cast<std::uint64_t>(t->value.size()) * sizeof(double);
      blob.write(reinterpret_cast<const char*>(t->value.data()),
                 static_cast<std::streamsize>(bytes));
      offset += bytes;
    }
  }

  {
    json jv;
    jv["labels"] = vocab.labels();
    json tiers = json::array();
    json shots = json::array();
    for (int i = 0; i < vocab.size(); ++i) {
      tiers.push_back(tier_name(vocab.tier(i)));
      shots.push_back(vocab.shot(i));
    }
    jv["tiers"] = tiers;
    jv["shots"] = shots;
    std::ofstream out(fs::path(dir) / "vocab.json");
    out << jv.dump(2) << "\n";
  }

  if (token_vocab) {
    json jt;
    jt["tokens"] = token_vocab->tokens();
    std::ofstream out(fs::path(dir) / "token_vocab.json");
    out << jt.dump() << "\n";
  }

  {
    json manifest;
    manifest["format_version"] = kFormatVersion;
    manifest["created_at"] = timestamp_utc();
    manifest["config"] = config.to_json();
    char hash_buf[32];
    std::snprintf(hash_buf, sizeof(hash_buf), "0x%016llx",
                  static_cast<unsigned long long>(vocab_hash(vocab)));
    manifest["vocab_hash"] = hash_buf;
    manifest["tensors"] = index;
    std::ofstream out(fs::path(dir) / "manifest.json");
    out << manifest.dump(2) << "\n";
  }
}

LoadedCheckpoint load_checkpoint(const std::string& dir) {
  LoadedCheckpoint out;

  json manifest;
  {
    std::ifstream in(fs::path(dir) / "manifest.json");
    if (!in) throw std::runtime_error("cannot open manifest in " + dir);
    in >> manifest;
  }
  if (manifest.at("format_version").get<int>() != kFormatVersion) {
    throw std::runtime_error("unsupported checkpoint format version");
  }
  out.config = RunConfig::from_json(manifest.at("config"));

  {
    std::ifstream in(fs::path(dir) / "vocab.json");
    if (!in) throw std::runtime_error("cannot open vocab.json in " + dir);
    json jv;
    in >> jv;
    auto labels = jv.at("labels").get<std::vector<std::string>>();
    auto tier_names = jv.at("tiers").get<std::vector<std::string>>();
    auto shots = jv.at("shots").get<std::vector<std::int64_t>>();
    std::vector<Tier> tiers;
    tiers.reserve(tier_names.size());
    for (const std::string& name : tier_names) {
      auto t = tier_from_name(name);
      if (!t) throw std::runtime_error("vocab.json has unknown tier " + name);
      tiers.push_back(*t);
    }
    out.vocab = LabelVocabulary(std::move(labels), std::move(tiers),
                                std::move(shots));
  }

  {
    std::string expect = manifest.at("vocab_hash").get<std::string>();
    char hash_buf[32];
    std::snprintf(hash_buf, sizeof(hash_buf), "0x%016llx",
                  static_cast<unsigned long long>(vocab_hash(out.vocab)));
    if (expect != hash_buf) {
      throw std::runtime_error("checkpoint vocab hash mismatch in " + dir);
    }
  }

  {
    std::ifstream blob(fs::path(dir) / "tensors.bin", std::ios::binary);
    if (!blob) throw std::runtime_error("cannot open tensors.bin in " + dir);
    for (const auto& entry : manifest.at("tensors")) {
      std::string name = entry.at("name").get<std::string>();
      Eigen::Index rows = entry.at("rows").get<Eigen::Index>();
      Eigen::Index cols = entry.at("cols").get<Eigen::Index>();
      std::uint64_t offset = entry.at("offset").get<std::uint64_t>();
      Eigen::MatrixXd m(rows, cols);
      blob.seekg(static_cast<std::streamoff>(offset));
      blob.read(reinterpret_cast<char*>(m.data()),
                static_cast<std::streamsize>(m.size() * sizeof(double)));
      if (!blob) {
        throw std::runtime_error("tensors.bin truncated at tensor " + name);
      }
      out.tensors[name] = std::move(m);
    }
  }

  fs::path tok_path = fs::path(dir) / "token_vocab.json";
  if (fs::exists(tok_path)) {
    std::ifstream in(tok_path);
    json jt;
    in >> jt;
    out.token_vocab =
        TokenVocab::from_tokens(jt.at("tokens").get<std::vector<std::string>>());
  }
  return out;
}

}  // namespace seq2set
