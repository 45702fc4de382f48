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

#include "doctest.h"
#include "support/testutil.hpp"

using namespace seq2set;

TEST_CASE("pairwise_cost is -log of the gold probability per step") {
  Eigen::VectorXd p1(3), p2(3);
  p1 << 0.9, 0.1, 0.0;
  p2 << 0.2, 0.8, 0.0;
  Eigen::MatrixXd cost = pairwise_cost({0, 1}, {p1, p2});
  CHECK(cost(0, 0) == doctest::Approx(-std::log(0.9)));
  CHECK(cost(0, 1) == doctest::Approx(-std::log(0.2)));
  CHECK(cost(1, 0) == doctest::Approx(-std::log(0.1)));
  CHECK(cost(1, 1) == doctest::Approx(-std::log(0.8)));

  Eigen::VectorXd one(2), e1(2);
  one << 1.0, 0.0;
  CHECK(pairwise_cost({0}, {one})(0, 0) == doctest::Approx(0.0));
  e1 << std::exp(-1.0), 1.0 - std::exp(-1.0);
  CHECK(pairwise_cost({0}, {e1})(0, 0) == doctest::Approx(1.0));

  // Masked gold (probability exactly 0) hits the finite cap.
  CHECK(pairwise_cost({2}, {p1})(0, 0) == kMatchingCostCap);

  Eigen::VectorXd bad(2);
  bad << 0.7, 0.7;
  CHECK_THROWS(pairwise_cost({0}, {bad}));
}

TEST_CASE("hungarian solves the spec examples") {
  Eigen::MatrixXd a(2, 2);
  a << 1.0, 2.0, 3.0, 0.0;
  AssignmentResult r = hungarian(a);
  CHECK(r.assignment == std::vector<int>{0, 1});  // 1 + 0 beats 2 + 3
  CHECK(r.total_cost == doctest::Approx(1.0));

  Eigen::MatrixXd diag(3, 3);
  diag << 0, 5, 5, 5, 0, 5, 5, 5, 0;
  AssignmentResult rd = hungarian(diag);
  CHECK(rd.assignment == std::vector<int>{0, 1, 2});
  CHECK(rd.total_cost == doctest::Approx(0.0));

  Eigen::MatrixXd single(1, 1);
  single << 7.0;
  CHECK(hungarian(single).total_cost == doctest::Approx(7.0));

  CHECK_THROWS(hungarian(Eigen::MatrixXd(2, 3)));
}

TEST_CASE("hungarian equals brute force on random matrices") {
  Rng rng(101);
  for (int trial = 0; trial < 300; ++trial) {
    int n = 1 + static_cast<int>(rng.below(6));
    Eigen::MatrixXd cost = testutil::random_matrix(rng, n, n, 0.0, 10.0);
    AssignmentResult r = hungarian(cost);
    double expect = testutil::brute_force_min_assignment(cost);
    CHECK(std::abs(r.total_cost - expect) < 1e-9);
    // assignment is a permutation achieving the total
    std::vector<bool> used(n, false);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      REQUIRE(!used[r.assignment[i]]);
      used[r.assignment[i]] = true;
      sum += cost(i, r.assignment[i]);
    }
    CHECK(std::abs(sum - expect) < 1e-9);
  }
}

TEST_CASE("hungarian tie-break picks the lexicographically smallest") {
  Eigen::MatrixXd tie = Eigen::MatrixXd::Ones(3, 3);  // every matching ties
  CHECK(hungarian(tie).assignment == std::vector<int>{0, 1, 2});

  Eigen::MatrixXd partial(2, 2);
  partial << 1.0, 1.0, 2.0, 2.0;  // both permutations cost 3
  CHECK(hungarian(partial).assignment == std::vector<int>{0, 1});
}

TEST_CASE("set_loss composes the matching with the EOS term") {
  SUBCASE("perfect one-hot predictions in gold order") {
    Eigen::VectorXd s1(3), s2(3), eos(3);
    s1 << 1.0, 0.0, 0.0;
    s2 << 0.0, 1.0, 0.0;
    eos << 0.0, 0.0, 1.0;
    auto [loss, assignment] = set_loss({0, 1}, {s1, s2}, eos);
    CHECK(loss == doctest::Approx(0.0));
  }

  SUBCASE("reversed one-hot predictions still reach zero via matching") {
    Eigen::VectorXd s1(3), s2(3), eos(3);
    s1 << 0.0, 1.0, 0.0;
    s2 << 1.0, 0.0, 0.0;
    eos << 0.0, 0.0, 1.0;
    auto [loss, assignment] = set_loss({0, 1}, {s1, s2}, eos);
    CHECK(loss == doctest::Approx(0.0));
    CHECK(assignment == std::vector<int>{1, 0});
  }

  SUBCASE("hand-evaluated two-gold case") {
    Eigen::VectorXd s1(3), s2(3), eos(3);
    s1 << 0.9, 0.1, 0.0;
    s2 << 0.2, 0.8, 0.0;
    eos << 0.25, 0.25, 0.5;
    auto [loss, assignment] = set_loss({0, 1}, {s1, s2}, eos);
    double expect = (-std::log(0.9) - std::log(0.8)) / 2.0 + std::log(2.0);
    CHECK(loss == doctest::Approx(expect));
  }
}

TEST_CASE("set_loss is bitwise invariant under gold permutations") {
  Rng rng(202);
  for (int trial = 0; trial < 100; ++trial) {
    int m = 2 + static_cast<int>(rng.below(5));
    int width = m + 1 + static_cast<int>(rng.below(4));
    std::vector<int> gold;
    while (static_cast<int>(gold.size()) < m) {
      int id = static_cast<int>(rng.below(width - 1));
      if (std::find(gold.begin(), gold.end(), id) == gold.end()) {
        gold.push_back(id);
      }
    }
    std::vector<Eigen::VectorXd> dists;
    for (int j = 0; j < m; ++j) {
      dists.push_back(testutil::random_distribution(rng, width));
    }
    Eigen::VectorXd eos = testutil::random_distribution(rng, width);

    auto [loss, assignment] = set_loss(gold, dists, eos);
    std::vector<int> shuffled = gold;
    rng.shuffle(shuffled);
    auto [loss2, assignment2] = set_loss(shuffled, dists, eos);
    CHECK(loss == loss2);  // bitwise
  }
}

TEST_CASE("bag_loss follows the signed sum") {
  Eigen::VectorXd scores(2);
  scores << 0.6, 0.3;
  CHECK(bag_loss(scores, {0}) == doctest::Approx(-0.6 + 0.3));
  CHECK(bag_loss(Eigen::VectorXd::Zero(5), {1, 2}) == 0.0);

  // Linearity: flipping one non-gold score from 0 to s adds exactly s.
  Eigen::VectorXd base = Eigen::VectorXd::Zero(4);
  double before = bag_loss(base, {0});
  base(3) = 0.42;
  CHECK(bag_loss(base, {0}) - before == doctest::Approx(0.42));

  // Slope is -y_j in every coordinate.
  Rng rng(7);
  Eigen::VectorXd v = testutil::random_vector(rng, 6, 0.0, 1.0);
  std::set<int> gold = {1, 4};
  for (int j = 0; j < 6; ++j) {
    Eigen::VectorXd bumped = v;
    bumped(j) += 0.25;
    double slope = (bag_loss(bumped, gold) - bag_loss(v, gold)) / 0.25;
    CHECK(slope == doctest::Approx(gold.count(j) ? -1.0 : 1.0));
  }
}

TEST_CASE("total_loss combines with the relative weight") {
  CHECK(total_loss(2.0, -0.5, 1.0) == doctest::Approx(1.5));
  CHECK(total_loss(3.25, 100.0, 0.0) == doctest::Approx(3.25));  // ablation
}
