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

#ifndef SEQ2SET_CONFIG_H_
#define SEQ2SET_CONFIG_H_

#include <cstdint>
#include <string>

#include "json.hpp"

namespace seq2set {

// Raised on bad invocations (unknown override keys, malformed values);
// the CLI maps it to exit code 1.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Every knob of a run. Numeric defaults follow the reference
// hyperparameter set; paths wire the file-based interfaces.
struct RunConfig {
  std::string encoder = "adapter";  // "adapter" | "toy"
  int d_h = 0;                      // 0 = encoder default (adapter 768, toy 16)
  int d_s = 868;
  int d_e = 100;
  int d_g = 100;
  int batch_size = 32;
  double lr_encoder = 5e-5;
  double lr_other = 1e-3;
  double dropout = 0.6;
  double theta_c = 0.1;
  double theta_s = 0.2;
  double lambda = 1.0;
  int max_steps = 30;
  std::uint64_t seed = 42;
  std::string matching_pass = "two_pass";    // | "single_pass"
  std::string bag_aggregation = "mean";      // | "sum"
  std::string set_loss_reduction = "mean";   // | "sum"
  int epochs = 20;
  int patience = 5;
  double grad_clip = 5.0;
  int workers = 1;

  std::string train_path;
  std::string dev_path;
  std::string tier_map_path;
  std::string embedding_path;
  std::string attributes_path;  // precomputed attribute proposals (optional)
  std::string proposer = "none";  // "none" | "table"
  std::string proposer_path;
  std::string encodings_path;   // adapter hidden states
  std::string checkpoint_dir;

  int resolved_d_h() const;
  void validate() const;

  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::string& path);
  nlohmann::json to_json() const;

  // Applies `--key=value`-style overrides; unknown keys raise UsageError.
  void apply_override(const std::string& key, const std::string& value);

  // Asserts every documented default; throws std::logic_error on drift.
  static void self_test();
};

}  // namespace seq2set

#endif  // SEQ2SET_CONFIG_H_
