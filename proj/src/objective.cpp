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

#include "seq2set/objective.hpp"

#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>

// The assignment solver is the classic potentials formulation with
// shortest augmenting paths, O(n^3) (Kuhn-Munkres in the form popularized
// by Jonker & Volgenant). On top of it, a prefix-fixing pass picks, row
// by row, the smallest column whose fixed cost plus an optimal completion
// attains the minimum, which yields the lexicographically smallest
// minimizing permutation.

namespace seq2set {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Base O(n^3) solver; returns column assigned to each row.
std::vector<int> solve_assignment(const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match(n + 1, 0);  // 1-based: row matched to column j
  std::vector<int> way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      int i0 = match[j0], j1 = -1;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j) row_to_col[match[j] - 1] = j - 1;
  return row_to_col;
}

double assignment_cost(const Eigen::MatrixXd& a, const std::vector<int>& perm) {
  // Summed in column order so equal matchings produce bitwise-equal totals
  // regardless of row ordering.
  const int n = static_cast<int>(a.rows());
  std::vector<int> col_to_row(n, -1);
  for (int i = 0; i < n; ++i) col_to_row[perm[i]] = i;
  double total = 0.0;
  for (int j = 0; j < n; ++j) total += a(col_to_row[j], j);
  return total;
}

}  // namespace

AssignmentResult hungarian(const Eigen::MatrixXd& cost) {
  if (cost.rows() != cost.cols()) {
    throw std::invalid_argument("hungarian: cost matrix is not square");
  }
  if (cost.size() == 0) {
    throw std::invalid_argument("hungarian: empty cost matrix");
  }
  if (!cost.allFinite()) {
    throw std::invalid_argument("hungarian: cost matrix has non-finite entries");
  }
  const int n = static_cast<int>(cost.rows());

  // Fix rows in order; for each, keep the smallest column that still
  // admits an optimal completion of the remaining square subproblem.
  std::vector<int> remaining_cols(n);
  for (int j = 0; j < n; ++j) remaining_cols[j] = j;
  std::vector<int> chosen(n, -1);

  for (int i = 0; i < n; ++i) {
    const int r = static_cast<int>(remaining_cols.size());
    int best_j = -1;
    double best_val = kInf;
    for (int jj = 0; jj < r; ++jj) {
      double fixed = cost(i, remaining_cols[jj]);
      double rest = 0.0;
      if (r > 1) {
        Eigen::MatrixXd sub(r - 1, r - 1);
        for (int ii = 0; ii < r - 1; ++ii) {
          int col_out = 0;
          for (int kk = 0; kk < r; ++kk) {
            if (kk == jj) continue;
            sub(ii, col_out++) = cost(i + 1 + ii, remaining_cols[kk]);
          }
        }
        rest = assignment_cost(sub, solve_assignment(sub));
      }
      double val = fixed + rest;
      if (val < best_val) {  // strict: earliest (smallest) column wins ties
        best_val = val;
        best_j = jj;
      }
    }
    chosen[i] = remaining_cols[best_j];
    remaining_cols.erase(remaining_cols.begin() + best_j);
  }

  AssignmentResult out;
  out.assignment = chosen;
  out.total_cost = assignment_cost(cost, chosen);
  return out;
}

Eigen::MatrixXd pairwise_cost(
    const std::vector<int>& gold_ids,
    const std::vector<Eigen::VectorXd>& step_distributions) {
  const int m = static_cast<int>(gold_ids.size());
  if (m < 1) throw std::invalid_argument("pairwise_cost: needs m >= 1 golds");
  if (static_cast<int>(step_distributions.size()) != m) {
    throw std::invalid_argument(
        "pairwise_cost: step count != gold count");
  }
  for (int j = 0; j < m; ++j) {
    const Eigen::VectorXd& p = step_distributions[j];
    if (p.minCoeff() < -1e-12) {
      throw std::invalid_argument("pairwise_cost: negative probability");
    }
    if (std::abs(p.sum() - 1.0) > 1e-6) {
      throw std::invalid_argument(
          "pairwise_cost: step distribution does not sum to 1");
    }
  }
  Eigen::MatrixXd cost(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      const Eigen::VectorXd& p = step_distributions[j];
      if (gold_ids[i] < 0 || gold_ids[i] >= p.size()) {
        throw std::invalid_argument("pairwise_cost: gold id out of range");
      }
      double prob = p(gold_ids[i]);
      if (prob <= 0.0) {
        std::cerr << "warning: gold label " << gold_ids[i]
                  << " has zero probability at step " << j
                  << "; capping matching cost\n";
        cost(i, j) = kMatchingCostCap;
      } else {
        cost(i, j) = -std::log(prob);
      }
    }
  }
  return cost;
}

std::pair<double, std::vector<int>> set_loss(
    const std::vector<int>& gold_ids,
    const std::vector<Eigen::VectorXd>& step_distributions,
    const Eigen::VectorXd& eos_distribution) {
  AssignmentResult match =
      hungarian(pairwise_cost(gold_ids, step_distributions));
  double eos_prob = eos_distribution(eos_distribution.size() - 1);
  double eos_term =
      eos_prob <= 0.0 ? kMatchingCostCap : -std::log(eos_prob);
  double loss = match.total_cost / static_cast<double>(gold_ids.size()) +
                eos_term;
  return {loss, match.assignment};
}

double bag_loss(const Eigen::VectorXd& label_scores,
                const std::set<int>& gold_ids) {
  double loss = 0.0;
  for (Eigen::Index j = 0; j < label_scores.size(); ++j) {
    double y = gold_ids.count(static_cast<int>(j)) ? 1.0 : -1.0;
    loss -= label_scores(j) * y;
  }
  return loss;
}

}  // namespace seq2set
