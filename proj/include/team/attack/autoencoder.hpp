#pragma once

#include <cstdint>
#include <vector>

#include "team/nn/dense.hpp"

namespace team::attack {

using nn::Matrix;
using nn::Vector;

/// Dense stack over the non-functional feature vector. Hidden layers use
/// tanh and the output layer sigmoid, so reconstructions stay in [0,1].
/// An autoencoder with no layers is the identity map.
struct AutoEncoder {
  std::vector<nn::DenseLayer> layers;
  Eigen::Index width = 0;

  static AutoEncoder create(Eigen::Index width, const std::vector<Eigen::Index>& hidden, Rng& rng);
  static AutoEncoder identity(Eigen::Index width);

  bool is_identity() const { return layers.empty(); }
  std::vector<Eigen::Index> hidden_widths() const;
  nn::ParamRefs params();
  std::vector<const nn::Param*> params() const;
};

/// Four hidden layers: n, ceil(n/2) (bottleneck), ceil(n/2), n.
std::vector<Eigen::Index> default_hidden_widths(Eigen::Index n);

/// Throws UsageError when x does not have `width` entries.
Vector autoencoder_forward(const AutoEncoder& ae, const Vector& x);
/// Columns of x are batch items.
nn::Var autoencoder_forward(nn::Tape& tape, nn::Var x, AutoEncoder& ae, bool trainable);
nn::Var autoencoder_forward(nn::Tape& tape, nn::Var x, const AutoEncoder& ae);

struct PretrainConfig {
  int epochs = 200;
  double lr = 1e-3;
  std::size_t batch = 64;
  std::uint64_t seed = 0;
};

/// Trains the autoencoder to reproduce its input (MSE). Returns the final
/// epoch's mean training MSE.
double pretrain_identity(AutoEncoder& ae, const std::vector<Vector>& samples, const PretrainConfig& cfg);

double reconstruction_mse(const AutoEncoder& ae, const std::vector<Vector>& samples);

}  // namespace team::attack
