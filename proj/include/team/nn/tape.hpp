#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "team/nn/tensor.hpp"

namespace team::nn {

enum class Activation { linear, sigmoid, tanh };

const char* to_string(Activation a);
Activation activation_from_string(const std::string& s);

/// Handle to a node recorded on a Tape.
class Var {
 public:
  Var() = default;
  std::size_t id() const { return id_; }

 private:
  friend class Tape;
  explicit Var(std::size_t id) : id_(id) {}
  std::size_t id_ = static_cast<std::size_t>(-1);
};

/// Reverse-mode gradient tape over dense matrices.
///
/// Every op appends a node holding its forward value and, when any input
/// requires a gradient, a closure that pushes the node's gradient back to
/// its inputs. backward() walks the nodes in exact reverse recording order.
/// Leaves created with parameter() add their gradient into Param::grad.
///
/// Activations are (features x batch); bias vectors broadcast across the
/// batch columns.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaves.
  Var constant(Matrix value);
  Var variable(Matrix value);  // requires grad, not tied to a Param
  Var parameter(Param& p);

  // Ops.
  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var add_bias(Var a, Var bias);
  Var mul(Var a, Var b);
  Var scale(Var a, double s);
  Var one_minus(Var a);
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var activate(Var a, Activation act);

  /// Copy of `base` whose rows `rows[k]` are replaced by row k of `src`.
  /// Gradient flows to `src` only; `base` is treated as a constant.
  Var scatter_rows(Var src, std::span<const std::size_t> rows, const Matrix& base);

  /// Sum over columns of weight_j * -log softmax(logits[:, j])[target_j].
  /// An empty weight span means weight 1 for every column. Result is 1x1.
  Var softmax_cross_entropy(Var logits, std::span<const int> targets,
                            std::span<const double> weights = {});

  /// Mean squared error against a constant target. Result is 1x1.
  Var mse(Var a, const Matrix& target);

  const Matrix& value(Var v) const { return nodes_.at(v.id_).value; }
  double scalar(Var v) const;
  /// Gradient of the last backward() loss w.r.t. v (zero matrix if none reached it).
  Matrix grad(Var v) const;
  bool requires_grad(Var v) const { return nodes_.at(v.id_).requires_grad; }

  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    Param* param = nullptr;
    std::function<void()> backprop;
  };

  Var push(Matrix value, bool requires_grad, Param* param = nullptr);
  void accumulate(std::size_t id, const Matrix& g);
  template <typename F>
  Var unary(Var a, Matrix value, F&& local_grad);
  Node& node(std::size_t id) { return nodes_[id]; }

  std::vector<Node> nodes_;
};

}  // namespace team::nn
