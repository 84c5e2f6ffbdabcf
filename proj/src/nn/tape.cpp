#include "team/nn/tape.hpp"

#include <cmath>
#include <sstream>

#include "team/error.hpp"
#include "team/nn/loss.hpp"

namespace team::nn {

namespace {

std::string shape(const Matrix& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ConfigError(std::string(op) + ": shape mismatch " + shape(a) + " vs " + shape(b));
  }
}

}  // namespace

const char* to_string(Activation a) {
  switch (a) {
    case Activation::linear: return "linear";
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
  }
  return "linear";
}

Activation activation_from_string(const std::string& s) {
  if (s == "linear") return Activation::linear;
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "tanh") return Activation::tanh;
  throw ConfigError("unknown activation '" + s + "'");
}

Var Tape::push(Matrix value, bool requires_grad, Param* param) {
  nodes_.push_back(Node{std::move(value), Matrix(), requires_grad, param, {}});
  return Var(nodes_.size() - 1);
}

void Tape::accumulate(std::size_t id, const Matrix& g) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return;
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

Var Tape::constant(Matrix value) { return push(std::move(value), false); }

Var Tape::variable(Matrix value) { return push(std::move(value), true); }

Var Tape::parameter(Param& p) { return push(p.value, true, &p); }

double Tape::scalar(Var v) const {
  const Matrix& m = value(v);
  if (m.size() != 1) throw UsageError("scalar(): node is " + shape(m));
  return m(0, 0);
}

Matrix Tape::grad(Var v) const {
  const Node& n = nodes_.at(v.id_);
  if (n.grad.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

Var Tape::matmul(Var a, Var b) {
  const Matrix& av = value(a);
  const Matrix& bv = value(b);
  if (av.cols() != bv.rows()) {
    throw ConfigError("matmul: shape mismatch " + shape(av) + " * " + shape(bv));
  }
  const bool rg = requires_grad(a) || requires_grad(b);
  Var out = push(av * bv, rg);
  if (rg) {
    const std::size_t o = out.id_, ia = a.id_, ib = b.id_;
    nodes_[o].backprop = [this, o, ia, ib] {
      const Matrix& g = nodes_[o].grad;
      if (nodes_[ia].requires_grad) accumulate(ia, g * nodes_[ib].value.transpose());
      if (nodes_[ib].requires_grad) accumulate(ib, nodes_[ia].value.transpose() * g);
    };
  }
  return out;
}

Var Tape::add(Var a, Var b) {
  require_same_shape(value(a), value(b), "add");
  const bool rg = requires_grad(a) || requires_grad(b);
  Var out = push(value(a) + value(b), rg);
  if (rg) {
    const std::size_t o = out.id_, ia = a.id_, ib = b.id_;
    nodes_[o].backprop = [this, o, ia, ib] {
      accumulate(ia, nodes_[o].grad);
      accumulate(ib, nodes_[o].grad);
    };
  }
  return out;
}

Var Tape::add_bias(Var a, Var bias) {
  const Matrix& av = value(a);
  const Matrix& bv = value(bias);
  if (bv.cols() != 1 || bv.rows() != av.rows()) {
    throw ConfigError("add_bias: bias " + shape(bv) + " does not fit " + shape(av));
  }
  const bool rg = requires_grad(a) || requires_grad(bias);
  Var out = push(av.colwise() + bv.col(0), rg);
  if (rg) {
    const std::size_t o = out.id_, ia = a.id_, ib = bias.id_;
    nodes_[o].backprop = [this, o, ia, ib] {
      accumulate(ia, nodes_[o].grad);
      if (nodes_[ib].requires_grad) accumulate(ib, nodes_[o].grad.rowwise().sum());
    };
  }
  return out;
}

Var Tape::mul(Var a, Var b) {
  require_same_shape(value(a), value(b), "mul");
  const bool rg = requires_grad(a) || requires_grad(b);
  Var out = push(value(a).cwiseProduct(value(b)), rg);
  if (rg) {
    const std::size_t o = out.id_, ia = a.id_, ib = b.id_;
    nodes_[o].backprop = [this, o, ia, ib] {
      const Matrix& g = nodes_[o].grad;
      if (nodes_[ia].requires_grad) accumulate(ia, g.cwiseProduct(nodes_[ib].value));
      if (nodes_[ib].requires_grad) accumulate(ib, g.cwiseProduct(nodes_[ia].value));
    };
  }
  return out;
}

template <typename F>
Var Tape::unary(Var a, Matrix value, F&& local_grad) {
  const bool rg = requires_grad(a);
  Var out = push(std::move(value), rg);
  if (rg) {
    const std::size_t o = out.id_, ia = a.id_;
    nodes_[o].backprop = [this, o, ia, lg = std::forward<F>(local_grad)] {
      accumulate(ia, lg(nodes_[o].grad, nodes_[o].value, nodes_[ia].value));
    };
  }
  return out;
}

Var Tape::scale(Var a, double s) {
  return unary(a, value(a) * s,
               [s](const Matrix& g, const Matrix&, const Matrix&) -> Matrix { return g * s; });
}

Var Tape::one_minus(Var a) {
  return unary(a, (1.0 - value(a).array()).matrix(),
               [](const Matrix& g, const Matrix&, const Matrix&) -> Matrix { return -g; });
}

Var Tape::sigmoid(Var a) {
  Matrix y = value(a).unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
  return unary(a, std::move(y), [](const Matrix& g, const Matrix& y, const Matrix&) -> Matrix {
    return (g.array() * y.array() * (1.0 - y.array())).matrix();
  });
}

Var Tape::tanh(Var a) {
  Matrix y = value(a).array().tanh().matrix();
  return unary(a, std::move(y), [](const Matrix& g, const Matrix& y, const Matrix&) -> Matrix {
    return (g.array() * (1.0 - y.array().square())).matrix();
  });
}

Var Tape::activate(Var a, Activation act) {
  switch (act) {
    case Activation::linear: return a;
    case Activation::sigmoid: return sigmoid(a);
    case Activation::tanh: return tanh(a);
  }
  return a;
}

Var Tape::scatter_rows(Var src, std::span<const std::size_t> rows, const Matrix& base) {
  const Matrix& sv = value(src);
  if (static_cast<std::size_t>(sv.rows()) != rows.size() || sv.cols() != base.cols()) {
    throw ConfigError("scatter_rows: source " + shape(sv) + " does not fit " +
                      std::to_string(rows.size()) + " rows of " + shape(base));
  }
  Matrix out_value = base;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] >= static_cast<std::size_t>(base.rows())) {
      throw ConfigError("scatter_rows: row index " + std::to_string(rows[k]) + " out of range");
    }
    out_value.row(static_cast<Eigen::Index>(rows[k])) = sv.row(static_cast<Eigen::Index>(k));
  }
  const bool rg = requires_grad(src);
  Var out = push(std::move(out_value), rg);
  if (rg) {
    const std::size_t o = out.id_, is = src.id_;
    std::vector<std::size_t> idx(rows.begin(), rows.end());
    nodes_[o].backprop = [this, o, is, idx = std::move(idx)] {
      const Matrix& g = nodes_[o].grad;
      Matrix gs(static_cast<Eigen::Index>(idx.size()), g.cols());
      for (std::size_t k = 0; k < idx.size(); ++k) {
        gs.row(static_cast<Eigen::Index>(k)) = g.row(static_cast<Eigen::Index>(idx[k]));
      }
      accumulate(is, gs);
    };
  }
  return out;
}

Var Tape::softmax_cross_entropy(Var logits, std::span<const int> targets,
                                std::span<const double> weights) {
  const Matrix& lv = value(logits);
  if (static_cast<std::size_t>(lv.cols()) != targets.size()) {
    throw ConfigError("softmax_cross_entropy: " + std::to_string(targets.size()) +
                      " targets for " + shape(lv) + " logits");
  }
  if (!weights.empty() && weights.size() != targets.size()) {
    throw ConfigError("softmax_cross_entropy: weight count mismatch");
  }
  Matrix dlogits(lv.rows(), lv.cols());
  double total = 0.0;
  for (Eigen::Index j = 0; j < lv.cols(); ++j) {
    const double w = weights.empty() ? 1.0 : weights[static_cast<std::size_t>(j)];
    const Vector col = lv.col(j);
    const int t = targets[static_cast<std::size_t>(j)];
    total += w * nn::softmax_cross_entropy(col, t);
    dlogits.col(j) = w * softmax_cross_entropy_grad(col, t);
  }
  Matrix out_value(1, 1);
  out_value(0, 0) = total;
  const bool rg = requires_grad(logits);
  Var out = push(std::move(out_value), rg);
  if (rg) {
    const std::size_t o = out.id_, il = logits.id_;
    nodes_[o].backprop = [this, o, il, d = std::move(dlogits)] {
      accumulate(il, d * nodes_[o].grad(0, 0));
    };
  }
  return out;
}

Var Tape::mse(Var a, const Matrix& target) {
  require_same_shape(value(a), target, "mse");
  const Matrix diff = value(a) - target;
  const double n = static_cast<double>(diff.size());
  Matrix out_value(1, 1);
  out_value(0, 0) = diff.squaredNorm() / n;
  const bool rg = requires_grad(a);
  Var out = push(std::move(out_value), rg);
  if (rg) {
    const std::size_t o = out.id_, ia = a.id_;
    nodes_[o].backprop = [this, o, ia, diff, n] {
      accumulate(ia, diff * (2.0 * nodes_[o].grad(0, 0) / n));
    };
  }
  return out;
}

void Tape::backward(Var loss) {
  Node& root = nodes_.at(loss.id_);
  if (root.value.size() != 1) throw UsageError("backward(): loss must be 1x1, got " + shape(root.value));
  for (auto& n : nodes_) n.grad.resize(0, 0);
  if (!root.requires_grad) return;
  root.grad = Matrix::Ones(1, 1);
  for (std::size_t k = loss.id_ + 1; k-- > 0;) {
    Node& n = nodes_[k];
    if (!n.requires_grad || n.grad.size() == 0) continue;
    if (n.backprop) n.backprop();
    if (n.param != nullptr) {
      if (n.param->grad.size() == 0) n.param->zero_grad();
      n.param->grad += n.grad;
    }
  }
}

}  // namespace team::nn
