#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "team/rng.hpp"

namespace team::nn {

// Column-major Eigen storage; each column of an activation matrix is one
// batch item. Serialization writes row-major explicitly.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// A trainable tensor with its gradient buffer. `grad` always has the shape
/// of `value` once zero_grad() has been called.
struct Param {
  std::string name;
  Matrix value;
  Matrix grad;

  Param() = default;
  Param(std::string n, Matrix v) : name(std::move(n)), value(std::move(v)) {
    zero_grad();
  }

  void zero_grad() { grad = Matrix::Zero(value.rows(), value.cols()); }
  Eigen::Index size() const { return value.size(); }
};

using ParamRefs = std::vector<Param*>;

// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
Matrix init_uniform(Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in, Rng& rng);

bool all_finite(const Matrix& m);

void zero_grads(const ParamRefs& params);

}  // namespace team::nn
