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

#ifndef SEQ2SET_TESTS_SUPPORT_TESTUTIL_H_
#define SEQ2SET_TESTS_SUPPORT_TESTUTIL_H_

#include <Eigen/Dense>

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <vector>

#include "seq2set/rng.hpp"
#include "seq2set/tape.hpp"

namespace seq2set::testutil {

struct FdReport {
  double max_rel_err = 0.0;
  long checked = 0;
};

// Central finite differences against the analytic gradients already
// accumulated in the tensors. eval_loss() must recompute the scalar loss
// from the tensors' current values.
inline FdReport check_gradients(const std::vector<tape::Tensor*>& tensors,
                                const std::function<double()>& eval_loss,
                                double h = 1e-5) {
  FdReport report;
  for (tape::Tensor* t : tensors) {
    for (Eigen::Index i = 0; i < t->rows(); ++i) {
      for (Eigen::Index j = 0; j < t->cols(); ++j) {
        double saved = t->value(i, j);
        t->value(i, j) = saved + h;
        double up = eval_loss();
        t->value(i, j) = saved - h;
        double down = eval_loss();
        t->value(i, j) = saved;
        double fd = (up - down) / (2.0 * h);
        double grad = t->grad(i, j);
        double denom = std::max({1e-6, std::abs(fd) + std::abs(grad)});
        report.max_rel_err =
            std::max(report.max_rel_err, std::abs(fd - grad) / denom);
        ++report.checked;
      }
    }
  }
  return report;
}

// Exhaustive minimum-cost assignment for small square matrices.
inline double brute_force_min_assignment(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += cost(i, perm[i]);
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

inline Eigen::VectorXd random_vector(Rng& rng, Eigen::Index n, double lo = -1.0,
                                     double hi = 1.0) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.uniform(lo, hi);
  return v;
}

inline Eigen::MatrixXd random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c,
                                     double lo = -1.0, double hi = 1.0) {
  Eigen::MatrixXd m(r, c);
  rng.fill_uniform(m, lo, hi);
  return m;
}

inline Eigen::VectorXd random_distribution(Rng& rng, Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.uniform(0.05, 1.0);
  return v / v.sum();
}

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& stem) {
    static std::atomic<unsigned> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            (stem + "-" + std::to_string(::getpid()) + "-" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

}  // namespace seq2set::testutil

#endif  // SEQ2SET_TESTS_SUPPORT_TESTUTIL_H_
