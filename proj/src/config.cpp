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

#include "seq2set/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <stdexcept>

namespace seq2set {

using nlohmann::json;

namespace {

struct Field {
  std::function<json(const RunConfig&)> get;
  std::function<void(RunConfig&, const json&)> set;
  std::function<void(RunConfig&, const std::string&)> set_str;
};

template <typename T>
T parse_number(const std::string& s) {
  std::size_t pos = 0;
  T out;
  try {
    if constexpr (std::is_same_v<T, int>) {
      out = std::stoi(s, &pos);
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      out = std::stoull(s, &pos);
    } else {
      out = std::stod(s, &pos);
    }
  } catch (const std::exception&) {
    throw UsageError("cannot parse numeric value '" + s + "'");
  }
  if (pos != s.size()) {
    throw UsageError("cannot parse numeric value '" + s + "'");
  }
  return out;
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> kFields = [] {
    std::map<std::string, Field> f;
    auto add_str = [&f](const std::string& name, std::string RunConfig::*m) {
      f[name] = Field{
          [m](const RunConfig& c) { return json(c.*m); },
          [m](RunConfig& c, const json& v) { c.*m = v.get<std::string>(); },
          [m](RunConfig& c, const std::string& v) { c.*m = v; }};
    };
    auto add_int = [&f](const std::string& name, int RunConfig::*m) {
      f[name] = Field{
          [m](const RunConfig& c) { return json(c.*m); },
          [m](RunConfig& c, const json& v) { c.*m = v.get<int>(); },
          [m](RunConfig& c, const std::string& v) {
            c.*m = parse_number<int>(v);
          }};
    };
    auto add_double = [&f](const std::string& name, double RunConfig::*m) {
      f[name] = Field{
          [m](const RunConfig& c) { return json(c.*m); },
          [m](RunConfig& c, const json& v) { c.*m = v.get<double>(); },
          [m](RunConfig& c, const std::string& v) {
            c.*m = parse_number<double>(v);
          }};
    };
    auto add_u64 = [&f](const std::string& name, std::uint64_t RunConfig::*m) {
      f[name] = Field{
          [m](const RunConfig& c) { return json(c.*m); },
          [m](RunConfig& c, const json& v) { c.*m = v.get<std::uint64_t>(); },
          [m](RunConfig& c, const std::string& v) {
            c.*m = parse_number<std::uint64_t>(v);
          }};
    };

    add_str("encoder", &RunConfig::encoder);
    add_int("d_h", &RunConfig::d_h);
    add_int("d_s", &RunConfig::d_s);
    add_int("d_e", &RunConfig::d_e);
    add_int("d_g", &RunConfig::d_g);
    add_int("batch_size", &RunConfig::batch_size);
    add_double("lr_encoder", &RunConfig::lr_encoder);
    add_double("lr_other", &RunConfig::lr_other);
    add_double("dropout", &RunConfig::dropout);
    add_double("theta_c", &RunConfig::theta_c);
    add_double("theta_s", &RunConfig::theta_s);
    add_double("lambda", &RunConfig::lambda);
    add_int("max_steps", &RunConfig::max_steps);
    add_u64("seed", &RunConfig::seed);
    add_str("matching_pass", &RunConfig::matching_pass);
    add_str("bag_aggregation", &RunConfig::bag_aggregation);
    add_str("set_loss_reduction", &RunConfig::set_loss_reduction);
    add_int("epochs", &RunConfig::epochs);
    add_int("patience", &RunConfig::patience);
    add_double("grad_clip", &RunConfig::grad_clip);
    add_int("workers", &RunConfig::workers);
    add_str("train_path", &RunConfig::train_path);
    add_str("dev_path", &RunConfig::dev_path);
    add_str("tier_map_path", &RunConfig::tier_map_path);
    add_str("embedding_path", &RunConfig::embedding_path);
    add_str("attributes_path", &RunConfig::attributes_path);
    add_str("proposer", &RunConfig::proposer);
    add_str("proposer_path", &RunConfig::proposer_path);
    add_str("encodings_path", &RunConfig::encodings_path);
    add_str("checkpoint_dir", &RunConfig::checkpoint_dir);
    return f;
  }();
  return kFields;
}

}  // namespace

int RunConfig::resolved_d_h() const {
  if (d_h > 0) return d_h;
  return encoder == "toy" ? 16 : 768;
}

void RunConfig::validate() const {
  if (encoder != "adapter" && encoder != "toy") {
    throw UsageError("encoder must be 'adapter' or 'toy', got '" + encoder +
                     "'");
  }
  if (matching_pass != "two_pass" && matching_pass != "single_pass") {
    throw UsageError("matching_pass must be 'two_pass' or 'single_pass'");
  }
  if (bag_aggregation != "mean" && bag_aggregation != "sum") {
    throw UsageError("bag_aggregation must be 'mean' or 'sum'");
  }
  if (set_loss_reduction != "mean" && set_loss_reduction != "sum") {
    throw UsageError("set_loss_reduction must be 'mean' or 'sum'");
  }
  if (proposer != "none" && proposer != "table") {
    throw UsageError("proposer must be 'none' or 'table'");
  }
  if (d_s < 1 || d_e < 1 || d_g < 1 || batch_size < 1 || max_steps < 1 ||
      epochs < 1 || workers < 1) {
    throw UsageError("dimensions, batch size, epochs and workers must be >= 1");
  }
  if (dropout < 0.0 || dropout >= 1.0) {
    throw UsageError("dropout must lie in [0, 1)");
  }
  if (theta_c < 0.0 || theta_c > 1.0) {
    throw UsageError("theta_c must lie in [0, 1]");
  }
  if (theta_s < 0.0) throw UsageError("theta_s must be >= 0");
  if (encoder == "toy" && resolved_d_h() % 2 != 0) {
    throw UsageError("toy encoder needs an even d_h");
  }
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  for (auto it = j.begin(); it != j.end(); ++it) {
    auto f = fields().find(it.key());
    if (f == fields().end()) {
      throw UsageError("unknown config field '" + it.key() + "'");
    }
    try {
      f->second.set(c, it.value());
    } catch (const json::exception& e) {
      throw UsageError("config field '" + it.key() + "': " + e.what());
    }
  }
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw UsageError("config file " + path + ": " + e.what());
  }
  return from_json(j);
}

json RunConfig::to_json() const {
  json j;
  for (const auto& [name, field] : fields()) j[name] = field.get(*this);
  return j;
}

void RunConfig::apply_override(const std::string& key,
                               const std::string& value) {
  auto f = fields().find(key);
  if (f == fields().end()) {
    throw UsageError("unknown config field '" + key + "'");
  }
  f->second.set_str(*this, value);
}

void RunConfig::self_test() {
  RunConfig c;
  auto expect = [](bool ok, const char* what) {
    if (!ok) throw std::logic_error(std::string("config default drifted: ") +
                                    what);
  };
  expect(c.encoder == "adapter", "encoder");
  expect(c.resolved_d_h() == 768, "adapter d_h");
  {
    RunConfig toy = c;
    toy.encoder = "toy";
    expect(toy.resolved_d_h() == 16, "toy d_h");
  }
  expect(c.d_s == 868, "d_s");
  expect(c.d_e == 100, "d_e");
  expect(c.d_g == 100, "d_g");
  expect(c.batch_size == 32, "batch_size");
  expect(c.lr_encoder == 5e-5, "lr_encoder");
  expect(c.lr_other == 1e-3, "lr_other");
  expect(c.dropout == 0.6, "dropout");
  expect(c.theta_c == 0.1, "theta_c");
  expect(c.theta_s == 0.2, "theta_s");
  expect(c.lambda == 1.0, "lambda");
  expect(c.max_steps == 30, "max_steps");
  expect(c.matching_pass == "two_pass", "matching_pass");
  expect(c.bag_aggregation == "mean", "bag_aggregation");
  expect(c.set_loss_reduction == "mean", "set_loss_reduction");
  expect(c.patience == 5, "patience");
  expect(c.grad_clip == 5.0, "grad_clip");
  expect(c.workers == 1, "workers");
}

}  // namespace seq2set
