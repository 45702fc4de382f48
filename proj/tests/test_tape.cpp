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

#include "seq2set/tape.hpp"

#include <cmath>

#include "doctest.h"
#include "support/testutil.hpp"

using namespace seq2set;
using tape::Tape;
using tape::Tensor;
using tape::VarId;

TEST_CASE("tape forward values") {
  Tape t;
  Eigen::VectorXd a(3), b(3);
  a << 1.0, -2.0, 0.5;
  b << 0.5, 0.5, 1.0;
  VarId va = t.constant(a);
  VarId vb = t.constant(b);

  CHECK(t.value(t.add(va, vb))(1) == doctest::Approx(-1.5));
  CHECK(t.value(t.sub(va, vb))(0) == doctest::Approx(0.5));
  CHECK(t.value(t.scale(va, 2.0))(2) == doctest::Approx(1.0));
  CHECK(t.value(t.cmul(va, vb))(1) == doctest::Approx(-1.0));
  CHECK(t.scalar(t.dot(va, vb)) == doctest::Approx(0.5 - 1.0 + 0.5));
  CHECK(t.value(t.relu(va))(1) == 0.0);
  CHECK(t.value(t.tanh(va))(0) == doctest::Approx(std::tanh(1.0)));
  CHECK(t.value(t.sigmoid(va))(0) ==
        doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));

  VarId cat = t.concat(va, vb);
  CHECK(t.value(cat).size() == 6);
  CHECK(t.value(t.slice(cat, 3, 3))(2) == doctest::Approx(1.0));

  Eigen::VectorXd sm = t.value(t.softmax(va));
  CHECK(sm.sum() == doctest::Approx(1.0));
  CHECK(sm.minCoeff() > 0.0);
}

TEST_CASE("masked softmax zeroes masked entries exactly") {
  Tape t;
  Eigen::VectorXd logits(4);
  logits << 2.0, 1.0, 0.0, -1.0;
  std::vector<bool> masked = {false, true, false, true};
  Eigen::VectorXd y = t.value(t.masked_softmax(t.constant(logits), masked));
  CHECK(y(1) == 0.0);
  CHECK(y(3) == 0.0);
  CHECK(y.sum() == doctest::Approx(1.0));

  // Constant shift on the unmasked support leaves the result unchanged.
  Tape t2;
  Eigen::VectorXd shifted = logits.array() + 7.5;
  Eigen::VectorXd y2 = t2.value(t2.masked_softmax(t2.constant(shifted), masked));
  CHECK((y - y2).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("masked cross entropy matches -log of masked softmax") {
  Tape t;
  Eigen::VectorXd logits(4);
  logits << 0.3, -0.2, 1.7, 0.9;
  std::vector<bool> masked = {false, true, false, false};
  VarId lv = t.constant(logits);
  double prob = t.value(t.masked_softmax(lv, masked))(3);
  double ce = t.scalar(t.masked_cross_entropy(lv, masked, 3));
  CHECK(ce == doctest::Approx(-std::log(prob)));
  CHECK_THROWS(t.masked_cross_entropy(lv, masked, 1));  // masked target
}

TEST_CASE("cosine values and conventions") {
  Tape t;
  Eigen::VectorXd a(2), b(2), z(2);
  a << 3.0, 0.0;
  b << 0.0, 2.0;
  z << 0.0, 0.0;
  CHECK(t.scalar(t.cosine(t.constant(a), t.constant(a))) ==
        doctest::Approx(1.0));
  CHECK(t.scalar(t.cosine(t.constant(a), t.constant(b))) ==
        doctest::Approx(0.0));
  CHECK(t.scalar(t.cosine(t.constant(a), t.constant(z))) == 0.0);
  CHECK(t.scalar(t.cosine_fixed(t.constant(a), -a)) == doctest::Approx(-1.0));
}

TEST_CASE("gradients match finite differences across all op kinds") {
  Rng rng(7);
  Tensor w("w", 4, 3), u("u", 4, 4), bias("b", 4, 1), emb("emb", 5, 3);
  rng.fill_uniform(w.value, -0.8, 0.8);
  rng.fill_uniform(u.value, -0.8, 0.8);
  rng.fill_uniform(bias.value, -0.5, 0.5);
  rng.fill_uniform(emb.value, -0.9, 0.9);
  Eigen::VectorXd x = testutil::random_vector(rng, 3);
  Eigen::VectorXd fixed = testutil::random_vector(rng, 4);
  Eigen::MatrixXd proj = testutil::random_matrix(rng, 4, 4);
  std::vector<bool> masked = {false, false, true, false};

  auto eval = [&](bool backprop) {
    Tape t;
    VarId vx = t.constant(x);
    VarId row = t.parameter_row(emb, 2);
    VarId h1 = t.tanh(t.affine(w, bias, vx));
    VarId h2 = t.sigmoid(t.matvec(u, h1));
    VarId h3 = t.relu(t.sub(h2, t.cmul_fixed(h1, fixed)));
    VarId h4 = t.matvec_fixed(proj, h3);
    VarId att = t.softmax(t.stack({t.dot(h4, h1), t.dot_fixed(h4, fixed),
                                   t.cosine(h4, h1)}));
    VarId pooled = t.weighted_sum({h1, h2, h4}, att);
    VarId rowmix = t.add_all({pooled, t.concat(row, t.slice(h4, 0, 1))});
    VarId ce = t.masked_cross_entropy(rowmix, masked, 1);
    VarId cos = t.cosine_fixed(t.cmul(h1, rowmix), fixed);
    VarId loss = t.mean({ce, cos, t.dot(rowmix, rowmix)});
    double out = t.scalar(loss);
    if (backprop) t.backward(loss);
    return out;
  };

  std::vector<Tensor*> params = {&w, &u, &bias, &emb};
  for (Tensor* p : params) p->zero_grad();
  eval(true);
  auto report =
      testutil::check_gradients(params, [&] { return eval(false); });
  CHECK(report.checked > 40);
  CHECK(report.max_rel_err < 1e-4);
}

TEST_CASE("backward accumulates into reused parameters") {
  Tensor v("v", 2, 1);
  v.value << 1.0, 2.0;
  Tape t;
  VarId p1 = t.parameter(v);
  VarId p2 = t.parameter(v);
  VarId loss = t.dot(p1, p2);  // = |v|^2, gradient 2v
  t.backward(loss);
  CHECK(v.grad(0, 0) == doctest::Approx(2.0));
  CHECK(v.grad(1, 0) == doctest::Approx(4.0));
}
