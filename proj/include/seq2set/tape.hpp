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

#ifndef SEQ2SET_TAPE_H_
#define SEQ2SET_TAPE_H_

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace seq2set {
namespace tape {

// A named trainable parameter with an accumulated gradient.
// Vectors are stored as n x 1 matrices.
struct Tensor {
  std::string name;
  Eigen::MatrixXd value;
  Eigen::MatrixXd grad;

  Tensor(std::string name_, Eigen::Index rows, Eigen::Index cols)
      : name(std::move(name_)),
        value(Eigen::MatrixXd::Zero(rows, cols)),
        grad(Eigen::MatrixXd::Zero(rows, cols)) {}

  Eigen::Index rows() const { return value.rows(); }
  Eigen::Index cols() const { return value.cols(); }
  void zero_grad() { grad.setZero(); }
};

using VarId = std::int32_t;

// Record-and-replay reverse-mode differentiation over vector-valued nodes.
// Nodes must be created in topological order (inputs before outputs);
// backward() walks the records in reverse. A Tape is single-threaded and
// holds no ownership of the Tensors it references, which must outlive it.
class Tape {
 public:
  // Leaves.
  VarId constant(const Eigen::VectorXd& v);
  VarId parameter(Tensor& t);                          // whole n x 1 tensor
  VarId parameter_row(Tensor& t, Eigen::Index row);    // embedding lookup

  // Linear maps.
  VarId matvec(Tensor& w, VarId x);                    // w.value * x
  VarId matvec_fixed(const Eigen::MatrixXd& m, VarId x);
  VarId affine(Tensor& w, Tensor& b, VarId x);         // w*x + b

  // Arithmetic.
  VarId add(VarId a, VarId b);
  VarId add_all(const std::vector<VarId>& vs);
  VarId sub(VarId a, VarId b);
  VarId scale(VarId a, double s);
  VarId cmul(VarId a, VarId b);                        // elementwise
  VarId cmul_fixed(VarId a, const Eigen::VectorXd& m); // e.g. dropout masks

  // Nonlinearities.
  VarId tanh(VarId a);
  VarId sigmoid(VarId a);
  VarId relu(VarId a);

  // Shape.
  VarId concat(VarId a, VarId b);
  VarId slice(VarId a, Eigen::Index offset, Eigen::Index len);
  VarId stack(const std::vector<VarId>& scalars);      // k scalars -> k-vector

  // Reductions and probability ops.
  VarId dot(VarId a, VarId b);                         // 1-vector result
  VarId dot_fixed(VarId a, const Eigen::VectorXd& w);
  VarId mean(const std::vector<VarId>& scalars);
  VarId softmax(VarId logits);
  // Masked entries get probability exactly 0 and receive no gradient.
  VarId masked_softmax(VarId logits, const std::vector<bool>& masked);
  // -log(masked_softmax(logits)[target]), fused for numerical stability.
  // `target` must not be masked.
  VarId masked_cross_entropy(VarId logits, const std::vector<bool>& masked,
                             Eigen::Index target);
  // sum_i weights[i] * items[i]; all items share one dimension.
  VarId weighted_sum(const std::vector<VarId>& items, VarId weights);
  // Cosine similarity; either argument with zero norm yields value 0 and
  // zero gradient (the convention used for out-of-table embeddings).
  VarId cosine(VarId a, VarId b);
  VarId cosine_fixed(VarId a, const Eigen::VectorXd& b);

  const Eigen::VectorXd& value(VarId v) const { return nodes_[v].value; }
  double scalar(VarId v) const;
  // Accumulates d(loss)/d(tensor) * seed into every referenced Tensor's grad.
  void backward(VarId loss, double seed = 1.0);

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

 private:
  struct Node {
    Eigen::VectorXd value;
    Eigen::VectorXd grad;
    std::function<void(Tape&, const Eigen::VectorXd&)> backward;
  };

  VarId push(Eigen::VectorXd value,
             std::function<void(Tape&, const Eigen::VectorXd&)> back);
  void accumulate(VarId v, const Eigen::VectorXd& g) { nodes_[v].grad += g; }

  std::vector<Node> nodes_;
};

}  // namespace tape
}  // namespace seq2set

#endif  // SEQ2SET_TAPE_H_
