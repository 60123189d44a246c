//
// Project csmiles-retro - Copyright 2026 The csmiles-retro Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef CSMILES_ENGINE_TAPE_H_
#define CSMILES_ENGINE_TAPE_H_

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace csmiles::engine {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

// Probabilities are clipped to [kProbClip, 1 - kProbClip] inside logs.
inline constexpr double kProbClip = 1e-7;

struct Tensor {
  std::string name;
  Matrix value;
  Matrix grad;

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

struct Var {
  int id = -1;
};

// Reverse-mode tape. Nodes are appended in evaluation order; backward()
// walks them in reverse and adds parameter gradients into Tensor::grad.
class Tape {
public:
  Var constant(Matrix value);
  Var parameter(Tensor &t);

  const Matrix &value(Var v) const { return nodes_[v.id].value; }
  double scalar(Var v) const { return nodes_[v.id].value(0, 0); }
  // Zero-sized until backward() reaches the node.
  const Matrix &grad(Var v) const { return nodes_[v.id].grad; }
  std::size_t size() const { return nodes_.size(); }

  void backward(Var loss, double seed = 1.0);

  Var matmul(Var a, Var b);
  Var matmul_nt(Var a, Var b);  // a * b^T
  Var add(Var a, Var b);
  Var add_row(Var a, Var row);  // row is 1 x cols, broadcast down
  Var scale(Var a, double s);
  Var mask(Var a, const Matrix &m);  // elementwise by a constant
  Var gelu(Var a);
  Var sigmoid(Var a);
  Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-5);
  Var softmax_rows(Var a, bool causal = false);
  Var columns(Var a, int start, int count);
  Var hcat(std::span<const Var> parts);
  Var gather_rows(Var table, std::span<const int> ids);

  // g * p + (1 - g) * q with g a column broadcast across columns.
  Var gate_mix(Var g, Var p, Var q);
  // Rows where forced[t] is set take value y[t] and pass no gradient.
  Var force_rows(Var g, const std::vector<bool> &forced, const Vector &y);

  // Mean over rows of -log p[t, target[t]].
  Var nll(Var probs, std::span<const int> targets);
  // -scale * sum [y log p + (1 - y) log(1 - p)].
  Var bce(Var p, const Matrix &y, double scale);
  // Mean over rows of (KL(p||q) + KL(q||p)) / 2.
  Var symmetric_kl(Var p, Var q);
  Var weighted_sum(std::span<const std::pair<double, Var>> terms);

private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    Tensor *param = nullptr;
    std::function<void(Tape &, const Matrix &)> back;
  };

  Var push(Matrix value, bool requires_grad,
           std::function<void(Tape &, const Matrix &)> back);
  bool needs(Var v) const { return nodes_[v.id].requires_grad; }
  void accumulate(Var v, const Matrix &g);

  std::vector<Node> nodes_;
};

}  // namespace csmiles::engine

#endif  // CSMILES_ENGINE_TAPE_H_
