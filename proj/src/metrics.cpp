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

#include "seq2set/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace seq2set {

using nlohmann::json;

namespace {

std::size_t intersection_size(const std::set<int>& a, const std::set<int>& b) {
  const std::set<int>& small = a.size() <= b.size() ? a : b;
  const std::set<int>& large = a.size() <= b.size() ? b : a;
  std::size_t n = 0;
  for (int x : small) n += large.count(x);
  return n;
}

double harmonic_f1(double p, double r) {
  return (p + r) == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

std::string percent(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f%%", 100.0 * x);
  return buf;
}

}  // namespace

InstancePRF instance_prf(const std::set<int>& pred, const std::set<int>& gold) {
  InstancePRF out;
  std::size_t hit = intersection_size(pred, gold);
  if (!pred.empty()) {
    out.precision = static_cast<double>(hit) / static_cast<double>(pred.size());
  }
  if (!gold.empty()) {
    out.recall = static_cast<double>(hit) / static_cast<double>(gold.size());
  }
  return out;
}

PRF macro_prf(const std::vector<EvalPair>& pairs) {
  double p_sum = 0.0, r_sum = 0.0;
  std::size_t p_n = 0, r_n = 0;
  for (const EvalPair& pair : pairs) {
    InstancePRF prf = instance_prf(pair.first, pair.second);
    if (prf.precision) {
      p_sum += *prf.precision;
      ++p_n;
    }
    if (prf.recall) {
      r_sum += *prf.recall;
      ++r_n;
    }
  }
  PRF out;
  out.precision_defined = p_n > 0;
  out.recall_defined = r_n > 0;
  out.precision = p_n ? p_sum / static_cast<double>(p_n) : 0.0;
  out.recall = r_n ? r_sum / static_cast<double>(r_n) : 0.0;
  out.f1 = harmonic_f1(out.precision, out.recall);
  return out;
}

PRF micro_prf(const std::vector<EvalPair>& pairs) {
  std::size_t hit = 0, pred_total = 0, gold_total = 0;
  for (const EvalPair& pair : pairs) {
    hit += intersection_size(pair.first, pair.second);
    pred_total += pair.first.size();
    gold_total += pair.second.size();
  }
  PRF out;
  out.precision_defined = pred_total > 0;
  out.recall_defined = gold_total > 0;
  out.precision =
      pred_total ? static_cast<double>(hit) / static_cast<double>(pred_total)
                 : 0.0;
  out.recall =
      gold_total ? static_cast<double>(hit) / static_cast<double>(gold_total)
                 : 0.0;
  out.f1 = harmonic_f1(out.precision, out.recall);
  return out;
}

double strict_accuracy(const std::vector<EvalPair>& pairs) {
  if (pairs.empty()) return 0.0;
  std::size_t exact = 0;
  for (const EvalPair& pair : pairs) {
    if (pair.first == pair.second) ++exact;
  }
  return static_cast<double>(exact) / static_cast<double>(pairs.size());
}

std::array<ShotBucket, 3> shot_table(const std::vector<EvalPair>& pairs,
                                     const LabelVocabulary& vocab) {
  std::array<ShotBucket, 3> buckets;
  for (const EvalPair& pair : pairs) {
    for (int label : pair.first) {
      std::int64_t shot = vocab.shot(label);
      if (shot < 0 || shot > 2) continue;
      ShotBucket& b = buckets[static_cast<std::size_t>(shot)];
      ++b.predicted;
      if (pair.second.count(label)) ++b.correct;
    }
  }
  for (ShotBucket& b : buckets) {
    if (b.predicted > 0) {
      b.precision =
          static_cast<double>(b.correct) / static_cast<double>(b.predicted);
    }
  }
  return buckets;
}

std::map<Tier, PRF> tier_report(const std::vector<EvalPair>& pairs,
                                const LabelVocabulary& vocab,
                                bool count_empty_as_zero) {
  std::map<Tier, PRF> out;
  for (Tier tier : {Tier::kGeneral, Tier::kFine, Tier::kUltraFine}) {
    std::vector<EvalPair> restricted;
    for (const EvalPair& pair : pairs) {
      EvalPair r;
      for (int label : pair.first) {
        if (vocab.tier(label) == tier) r.first.insert(label);
      }
      for (int label : pair.second) {
        if (vocab.tier(label) == tier) r.second.insert(label);
      }
      if (r.first.empty() && r.second.empty() && !count_empty_as_zero) {
        continue;
      }
      restricted.push_back(std::move(r));
    }
    out[tier] = macro_prf(restricted);
  }
  return out;
}

Eigen::MatrixXi cooccurrence_matrix(const std::vector<std::set<int>>& sets,
                                    int n_labels) {
  Eigen::MatrixXi m = Eigen::MatrixXi::Zero(n_labels, n_labels);
  for (const std::set<int>& s : sets) {
    for (auto it = s.begin(); it != s.end(); ++it) {
      if (*it < 0 || *it >= n_labels) {
        throw std::out_of_range("cooccurrence: label id out of range");
      }
      m(*it, *it) += 1;
      for (auto jt = std::next(it); jt != s.end(); ++jt) {
        m(*it, *jt) += 1;
        m(*jt, *it) += 1;
      }
    }
  }
  return m;
}

EvalReport evaluate(const std::vector<EvalPair>& pairs,
                    const LabelVocabulary& vocab,
                    bool tier_count_empty_as_zero) {
  EvalReport report;
  report.macro = macro_prf(pairs);
  report.micro = micro_prf(pairs);
  report.accuracy = strict_accuracy(pairs);
  report.tiers = tier_report(pairs, vocab, tier_count_empty_as_zero);
  report.shots = shot_table(pairs, vocab);
  report.instances = pairs.size();
  return report;
}

namespace {

json prf_to_json(const PRF& prf) {
  return json{{"precision", prf.precision},
              {"recall", prf.recall},
              {"f1", prf.f1},
              {"precision_defined", prf.precision_defined},
              {"recall_defined", prf.recall_defined}};
}

}  // namespace

std::string report_to_json(const EvalReport& report) {
  json shots = json::object();
  for (std::size_t s = 0; s < report.shots.size(); ++s) {
    const ShotBucket& b = report.shots[s];
    json jb = {{"correct", b.correct}, {"predicted", b.predicted}};
    if (b.precision) {
      jb["precision"] = *b.precision;
    } else {
      jb["precision"] = nullptr;
    }
    shots[std::to_string(s)] = jb;
  }
  json tiers = json::object();
  for (const auto& [tier, prf] : report.tiers) {
    tiers[tier_name(tier)] = prf_to_json(prf);
  }
  json j = {{"macro", prf_to_json(report.macro)},
            {"micro", prf_to_json(report.micro)},
            {"accuracy", report.accuracy},
            {"tiers", tiers},
            {"shots", shots},
            {"instances", report.instances}};
  return j.dump(2);
}

std::string render_tier_table(const EvalReport& report) {
  std::ostringstream out;
  auto row = [&](const std::string& name, const PRF& prf) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%-11s %6.1f %6.1f %6.1f\n", name.c_str(),
                  100.0 * prf.precision, 100.0 * prf.recall, 100.0 * prf.f1);
    out << buf;
  };
  out << "granularity      P      R      F\n";
  row("total", report.macro);
  for (const auto& [tier, prf] : report.tiers) {
    row(tier_name(tier), prf);
  }
  return out.str();
}

std::string render_shot_table(const EvalReport& report) {
  std::ostringstream out;
  out << "shot  Correct Predicted Prec.\n";
  for (std::size_t s = 0; s < report.shots.size(); ++s) {
    const ShotBucket& b = report.shots[s];
    out << "shot=" << s << " " << b.correct << " " << b.predicted << " "
        << (b.precision ? percent(*b.precision) : std::string("/")) << "\n";
  }
  return out.str();
}

void write_cooccurrence_csv(const std::string& path,
                            const Eigen::MatrixXi& matrix,
                            const LabelVocabulary& vocab) {
  if (matrix.rows() != vocab.size() || matrix.cols() != vocab.size()) {
    throw std::invalid_argument("cooccurrence matrix does not match vocab");
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write csv: " + path);
  out << "label";
  for (int j = 0; j < vocab.size(); ++j) out << "," << vocab.label(j);
  out << "\n";
  for (int i = 0; i < vocab.size(); ++i) {
    out << vocab.label(i);
    for (int j = 0; j < vocab.size(); ++j) out << "," << matrix(i, j);
    out << "\n";
  }
}

}  // namespace seq2set
