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
#include <limits>
#include <stdexcept>

namespace seq2set {
namespace tape {

namespace {

void check_same_size(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                     const char* op) {
  if (a.size() != b.size()) {
    throw std::invalid_argument(std::string(op) + ": size mismatch " +
                                std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()));
  }
}

}  // namespace

VarId Tape::push(Eigen::VectorXd value,
                 std::function<void(Tape&, const Eigen::VectorXd&)> back) {
  Node n;
  n.value = std::move(value);
  n.grad = Eigen::VectorXd::Zero(n.value.size());
  n.backward = std::move(back);
  nodes_.push_back(std::move(n));
  return static_cast<VarId>(nodes_.size() - 1);
}

double Tape::scalar(VarId v) const {
  const Eigen::VectorXd& x = nodes_[v].value;
  if (x.size() != 1) {
    throw std::logic_error("scalar(): node has dimension " +
                           std::to_string(x.size()));
  }
  return x(0);
}

VarId Tape::constant(const Eigen::VectorXd& v) { return push(v, nullptr); }

VarId Tape::parameter(Tensor& t) {
  if (t.cols() != 1) {
    throw std::invalid_argument("parameter(): tensor " + t.name +
                                " is not a column vector");
  }
  Tensor* tp = &t;
  return push(t.value.col(0),
              [tp](Tape&, const Eigen::VectorXd& g) { tp->grad.col(0) += g; });
}

VarId Tape::parameter_row(Tensor& t, Eigen::Index row) {
  Tensor* tp = &t;
  return push(t.value.row(row).transpose(),
              [tp, row](Tape&, const Eigen::VectorXd& g) {
                tp->grad.row(row) += g.transpose();
              });
}

VarId Tape::matvec(Tensor& w, VarId x) {
  if (w.cols() != nodes_[x].value.size()) {
    throw std::invalid_argument("matvec(): " + w.name + " has " +
                                std::to_string(w.cols()) + " cols, input has " +
                                std::to_string(nodes_[x].value.size()));
  }
  Tensor* wp = &w;
  Eigen::VectorXd xv = nodes_[x].value;
  return push(w.value * xv, [wp, x, xv](Tape& t, const Eigen::VectorXd& g) {
    wp->grad += g * xv.transpose();
    t.accumulate(x, wp->value.transpose() * g);
  });
}

VarId Tape::matvec_fixed(const Eigen::MatrixXd& m, VarId x) {
  if (m.cols() != nodes_[x].value.size()) {
    throw std::invalid_argument("matvec_fixed(): shape mismatch");
  }
  Eigen::MatrixXd mT = m.transpose();
  return push(m * nodes_[x].value,
              [mT, x](Tape& t, const Eigen::VectorXd& g) {
                t.accumulate(x, mT * g);
              });
}

VarId Tape::affine(Tensor& w, Tensor& b, VarId x) {
  return add(matvec(w, x), parameter(b));
}

VarId Tape::add(VarId a, VarId b) {
  check_same_size(nodes_[a].value, nodes_[b].value, "add");
  return push(nodes_[a].value + nodes_[b].value,
              [a, b](Tape& t, const Eigen::VectorXd& g) {
                t.accumulate(a, g);
                t.accumulate(b, g);
              });
}

VarId Tape::add_all(const std::vector<VarId>& vs) {
  if (vs.empty()) throw std::invalid_argument("add_all(): empty input");
  Eigen::VectorXd sum = nodes_[vs[0]].value;
  for (std::size_t i = 1; i < vs.size(); ++i) {
    check_same_size(sum, nodes_[vs[i]].value, "add_all");
    sum += nodes_[vs[i]].value;
  }
  std::vector<VarId> ids = vs;
  return push(std::move(sum), [ids](Tape& t, const Eigen::VectorXd& g) {
    for (VarId v : ids) t.accumulate(v, g);
  });
}

VarId Tape::sub(VarId a, VarId b) {
  check_same_size(nodes_[a].value, nodes_[b].value, "sub");
  return push(nodes_[a].value - nodes_[b].value,
              [a, b](Tape& t, const Eigen::VectorXd& g) {
                t.accumulate(a, g);
                t.accumulate(b, -g);
              });
}

VarId Tape::scale(VarId a, double s) {
  return push(nodes_[a].value * s, [a, s](Tape& t, const Eigen::VectorXd& g) {
    t.accumulate(a, s * g);
  });
}

VarId Tape::cmul(VarId a, VarId b) {
  check_same_size(nodes_[a].value, nodes_[b].value, "cmul");
  Eigen::VectorXd av = nodes_[a].value;
  Eigen::VectorXd bv = nodes_[b].value;
  return push(av.cwiseProduct(bv),
              [a, b, av, bv](Tape& t, const Eigen::VectorXd& g) {
                t.accumulate(a, g.cwiseProduct(bv));
                t.accumulate(b, g.cwiseProduct(av));
              });
}

VarId Tape::cmul_fixed(VarId a, const Eigen::VectorXd& m) {
  check_same_size(nodes_[a].value, m, "cmul_fixed");
  return push(nodes_[a].value.cwiseProduct(m),
              [a, m](Tape& t, const Eigen::VectorXd& g) {
                t.accumulate(a, g.cwiseProduct(m));
              });
}

VarId Tape::tanh(VarId a) {
  Eigen::VectorXd y = nodes_[a].value.array().tanh();
  return push(y, [a, y](Tape& t, const Eigen::VectorXd& g) {
    t.accumulate(a, (g.array() * (1.0 - y.array().square())).matrix());
  });
}

VarId Tape::sigmoid(VarId a) {
  Eigen::VectorXd y =
      (1.0 / (1.0 + (-nodes_[a].value.array()).exp())).matrix();
  return push(y, [a, y](Tape& t, const Eigen::VectorXd& g) {
    t.accumulate(a, (g.array() * y.array() * (1.0 - y.array())).matrix());
  });
}

VarId Tape::relu(VarId a) {
  Eigen::VectorXd x = nodes_[a].value;
  return push(x.cwiseMax(0.0), [a, x](Tape& t, const Eigen::VectorXd& g) {
    Eigen::VectorXd gx = (x.array() > 0.0).select(g, 0.0);
    t.accumulate(a, gx);
  });
}

VarId Tape::concat(VarId a, VarId b) {
  Eigen::Index na = nodes_[a].value.size();
  Eigen::Index nb = nodes_[b].value.size();
  Eigen::VectorXd y(na + nb);
  y << nodes_[a].value, nodes_[b].value;
  return push(y, [a, b, na, nb](Tape& t, const Eigen::VectorXd& g) {
    t.accumulate(a, g.head(na));
    t.accumulate(b, g.tail(nb));
  });
}

VarId Tape::slice(VarId a, Eigen::Index offset, Eigen::Index len) {
  if (offset < 0 || len < 0 || offset + len > nodes_[a].value.size()) {
    throw std::invalid_argument("slice(): out of range");
  }
  Eigen::Index total = nodes_[a].value.size();
  return push(nodes_[a].value.segment(offset, len),
              [a, offset, len, total](Tape& t, const Eigen::VectorXd& g) {
                Eigen::VectorXd gx = Eigen::VectorXd::Zero(total);
                gx.segment(offset, len) = g;
                t.accumulate(a, gx);
              });
}

VarId Tape::stack(const std::vector<VarId>& scalars) {
  if (scalars.empty()) throw std::invalid_argument("stack(): empty input");
  Eigen::VectorXd y(static_cast<Eigen::Index>(scalars.size()));
  for (std::size_t i = 0; i < scalars.size(); ++i) {
    if (nodes_[scalars[i]].value.size() != 1) {
      throw std::invalid_argument("stack(): non-scalar input");
    }
    y(static_cast<Eigen::Index>(i)) = nodes_[scalars[i]].value(0);
  }
  std::vector<VarId> ids = scalars;
  return push(y, [ids](Tape& t, const Eigen::VectorXd& g) {
    Eigen::VectorXd g1(1);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      g1(0) = g(static_cast<Eigen::Index>(i));
      t.accumulate(ids[i], g1);
    }
  });
}

VarId Tape::dot(VarId a, VarId b) {
  check_same_size(nodes_[a].value, nodes_[b].value, "dot");
  Eigen::VectorXd av = nodes_[a].value;
  Eigen::VectorXd bv = nodes_[b].value;
  Eigen::VectorXd y(1);
  y(0) = av.dot(bv);
  return push(y, [a, b, av, bv](Tape& t, const Eigen::VectorXd& g) {
    t.accumulate(a, g(0) * bv);
    t.accumulate(b, g(0) * av);
  });
}

VarId Tape::dot_fixed(VarId a, const Eigen::VectorXd& w) {
  check_same_size(nodes_[a].value, w, "dot_fixed");
  Eigen::VectorXd y(1);
  y(0) = nodes_[a].value.dot(w);
  return push(y, [a, w](Tape& t, const Eigen::VectorXd& g) {
    t.accumulate(a, g(0) * w);
  });
}

VarId Tape::mean(const std::vector<VarId>& scalars) {
  if (scalars.empty()) throw std::invalid_argument("mean(): empty input");
  return scale(add_all(scalars), 1.0 / static_cast<double>(scalars.size()));
}

VarId Tape::softmax(VarId logits) {
  const Eigen::VectorXd& x = nodes_[logits].value;
  Eigen::VectorXd y = (x.array() - x.maxCoeff()).exp();
  y /= y.sum();
  return push(y, [logits, y](Tape& t, const Eigen::VectorXd& g) {
    double gy = g.dot(y);
    t.accumulate(logits, (y.array() * (g.array() - gy)).matrix());
  });
}

VarId Tape::masked_softmax(VarId logits, const std::vector<bool>& masked) {
  const Eigen::VectorXd& x = nodes_[logits].value;
  if (static_cast<std::size_t>(x.size()) != masked.size()) {
    throw std::invalid_argument("masked_softmax(): mask size mismatch");
  }
  double mx = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!masked[i]) mx = std::max(mx, x(i));
  }
  if (!std::isfinite(mx)) {
    throw std::invalid_argument("masked_softmax(): all entries masked");
  }
  Eigen::VectorXd y = Eigen::VectorXd::Zero(x.size());
  double z = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!masked[i]) {
      y(i) = std::exp(x(i) - mx);
      z += y(i);
    }
  }
  y /= z;
  return push(y, [logits, y](Tape& t, const Eigen::VectorXd& g) {
    double gy = g.dot(y);
    t.accumulate(logits, (y.array() * (g.array() - gy)).matrix());
  });
}

VarId Tape::masked_cross_entropy(VarId logits, const std::vector<bool>& masked,
                                 Eigen::Index target) {
  const Eigen::VectorXd& x = nodes_[logits].value;
  if (static_cast<std::size_t>(x.size()) != masked.size()) {
    throw std::invalid_argument("masked_cross_entropy(): mask size mismatch");
  }
  if (target < 0 || target >= x.size() || masked[target]) {
    throw std::invalid_argument("masked_cross_entropy(): bad target");
  }
  double mx = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!masked[i]) mx = std::max(mx, x(i));
  }
  Eigen::VectorXd y = Eigen::VectorXd::Zero(x.size());
  double z = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!masked[i]) {
      y(i) = std::exp(x(i) - mx);
      z += y(i);
    }
  }
  y /= z;
  Eigen::VectorXd ce(1);
  ce(0) = std::log(z) + mx - x(target);
  return push(ce, [logits, y, target](Tape& t, const Eigen::VectorXd& g) {
    Eigen::VectorXd gx = y * g(0);
    gx(target) -= g(0);
    t.accumulate(logits, gx);
  });
}

VarId Tape::weighted_sum(const std::vector<VarId>& items, VarId weights) {
  const Eigen::VectorXd& w = nodes_[weights].value;
  if (items.empty() ||
      static_cast<std::size_t>(w.size()) != items.size()) {
    throw std::invalid_argument("weighted_sum(): weight/item count mismatch");
  }
  Eigen::Index dim = nodes_[items[0]].value.size();
  Eigen::VectorXd y = Eigen::VectorXd::Zero(dim);
  for (std::size_t i = 0; i < items.size(); ++i) {
    check_same_size(nodes_[items[0]].value, nodes_[items[i]].value,
                    "weighted_sum");
    y += w(static_cast<Eigen::Index>(i)) * nodes_[items[i]].value;
  }
  std::vector<VarId> ids = items;
  std::vector<Eigen::VectorXd> vals;
  vals.reserve(items.size());
  for (VarId v : items) vals.push_back(nodes_[v].value);
  Eigen::VectorXd wv = w;
  return push(y, [ids, vals, wv, weights](Tape& t, const Eigen::VectorXd& g) {
    Eigen::VectorXd gw(static_cast<Eigen::Index>(ids.size()));
    for (std::size_t i = 0; i < ids.size(); ++i) {
      Eigen::Index k = static_cast<Eigen::Index>(i);
      t.accumulate(ids[i], wv(k) * g);
      gw(k) = vals[i].dot(g);
    }
    t.accumulate(weights, gw);
  });
}

VarId Tape::cosine(VarId a, VarId b) {
  check_same_size(nodes_[a].value, nodes_[b].value, "cosine");
  Eigen::VectorXd av = nodes_[a].value;
  Eigen::VectorXd bv = nodes_[b].value;
  double na = av.norm();
  double nb = bv.norm();
  Eigen::VectorXd y(1);
  if (na == 0.0 || nb == 0.0) {
    y(0) = 0.0;
    return push(y, nullptr);  // zero-vector convention: value 0, gradient 0
  }
  double c = av.dot(bv) / (na * nb);
  y(0) = c;
  return push(y, [a, b, av, bv, na, nb, c](Tape& t, const Eigen::VectorXd& g) {
    t.accumulate(a, g(0) * (bv / (na * nb) - (c / (na * na)) * av));
    t.accumulate(b, g(0) * (av / (na * nb) - (c / (nb * nb)) * bv));
  });
}

VarId Tape::cosine_fixed(VarId a, const Eigen::VectorXd& b) {
  check_same_size(nodes_[a].value, b, "cosine_fixed");
  Eigen::VectorXd av = nodes_[a].value;
  double na = av.norm();
  double nb = b.norm();
  Eigen::VectorXd y(1);
  if (na == 0.0 || nb == 0.0) {
    y(0) = 0.0;
    return push(y, nullptr);
  }
  double c = av.dot(b) / (na * nb);
  y(0) = c;
  return push(y, [a, av, b, na, nb, c](Tape& t, const Eigen::VectorXd& g) {
    t.accumulate(a, g(0) * (b / (na * nb) - (c / (na * na)) * av));
  });
}

void Tape::backward(VarId loss, double seed) {
  if (nodes_[loss].value.size() != 1) {
    throw std::logic_error("backward(): loss node is not a scalar");
  }
  nodes_[loss].grad(0) += seed;
  for (VarId i = static_cast<VarId>(nodes_.size()) - 1; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.backward && !n.grad.isZero(0.0)) {
      n.backward(*this, n.grad);
    }
  }
}

}  // namespace tape
}  // namespace seq2set
