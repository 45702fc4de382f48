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

#ifndef SEQ2SET_OBJECTIVE_H_
#define SEQ2SET_OBJECTIVE_H_

#include <Eigen/Dense>

#include <set>
#include <utility>
#include <vector>

namespace seq2set {

// Cross-entropy cost cap substituting for -log(0) so the assignment
// solver stays total; only reachable when a gold label is masked, which
// duplicate-free gold sets never trigger.
inline constexpr double kMatchingCostCap = 1e9;

// cost(i, j) = -log p_j(gold_i): rows follow gold_ids, columns follow the
// decoding steps. Each distribution must sum to 1 within 1e-6.
Eigen::MatrixXd pairwise_cost(
    const std::vector<int>& gold_ids,
    const std::vector<Eigen::VectorXd>& step_distributions);

struct AssignmentResult {
  std::vector<int> assignment;  // row i -> column assignment[i]
  double total_cost;            // summed in column order
};

// Exact minimum-cost perfect assignment on a square finite matrix. Ties
// break toward the lexicographically smallest row->column permutation.
AssignmentResult hungarian(const Eigen::MatrixXd& cost);

// L_S = (min matching cost)/m + (-log eos_distribution[eos]); the EOS
// entry is the last one. Returns the loss and the assignment.
std::pair<double, std::vector<int>> set_loss(
    const std::vector<int>& gold_ids,
    const std::vector<Eigen::VectorXd>& step_distributions,
    const Eigen::VectorXd& eos_distribution);

// L_A = -sum_j score_j * y_j with y_j = 1 for gold labels and -1 otherwise.
double bag_loss(const Eigen::VectorXd& label_scores,
                const std::set<int>& gold_ids);

inline double total_loss(double set, double bag, double lambda) {
  return set + lambda * bag;
}

}  // namespace seq2set

#endif  // SEQ2SET_OBJECTIVE_H_
