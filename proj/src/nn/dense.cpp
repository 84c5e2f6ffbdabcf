#include "team/nn/dense.hpp"

#include "team/error.hpp"

namespace team::nn {

DenseLayer::DenseLayer(const std::string& name, Eigen::Index in, Eigen::Index out,
                       Activation act, Rng& rng)
    : weights(name + ".weights", init_uniform(out, in, in, rng)),
      bias(name + ".bias", init_uniform(out, 1, in, rng)),
      activation(act) {}

namespace {

void check_dims(Eigen::Index x_rows, const DenseLayer& layer) {
  if (layer.bias.value.rows() != layer.weights.value.rows() || layer.bias.value.cols() != 1) {
    throw ConfigError("dense: bias length " + std::to_string(layer.bias.value.rows()) +
                      " does not match " + std::to_string(layer.weights.value.rows()) +
                      " output rows");
  }
  if (x_rows != layer.in_dim()) {
    throw ConfigError("dense: input length " + std::to_string(x_rows) + " vs weights " +
                      std::to_string(layer.out_dim()) + "x" + std::to_string(layer.in_dim()));
  }
}

}  // namespace

Vector dense_forward(const Vector& x, const DenseLayer& layer) {
  check_dims(x.size(), layer);
  Tape tape;
  const Var y = dense_forward(tape, tape.constant(x), layer);
  return tape.value(y).col(0);
}

Var dense_forward(Tape& tape, Var x, DenseLayer& layer, bool trainable) {
  if (!trainable) return dense_forward(tape, x, static_cast<const DenseLayer&>(layer));
  check_dims(tape.value(x).rows(), layer);
  const Var w = tape.parameter(layer.weights);
  const Var b = tape.parameter(layer.bias);
  return tape.activate(tape.add_bias(tape.matmul(w, x), b), layer.activation);
}

Var dense_forward(Tape& tape, Var x, const DenseLayer& layer) {
  check_dims(tape.value(x).rows(), layer);
  const Var w = tape.constant(layer.weights.value);
  const Var b = tape.constant(layer.bias.value);
  return tape.activate(tape.add_bias(tape.matmul(w, x), b), layer.activation);
}

}  // namespace team::nn
