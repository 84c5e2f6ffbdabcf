#pragma once

#include <string>

#include "team/nn/tape.hpp"

namespace team::nn {

/// Affine map followed by an activation: act(W x + b).
struct DenseLayer {
  Param weights;  // out x in
  Param bias;     // out x 1
  Activation activation = Activation::linear;

  DenseLayer() = default;
  DenseLayer(const std::string& name, Eigen::Index in, Eigen::Index out, Activation act, Rng& rng);

  Eigen::Index in_dim() const { return weights.value.cols(); }
  Eigen::Index out_dim() const { return weights.value.rows(); }
  ParamRefs params() { return {&weights, &bias}; }
};

/// Pure forward pass; x must have in_dim() entries.
Vector dense_forward(const Vector& x, const DenseLayer& layer);

/// Recorded forward. `trainable` binds weights as parameters (gradients
/// accumulate into the layer); otherwise they enter the tape as constants.
Var dense_forward(Tape& tape, Var x, DenseLayer& layer, bool trainable);
Var dense_forward(Tape& tape, Var x, const DenseLayer& layer);

}  // namespace team::nn
