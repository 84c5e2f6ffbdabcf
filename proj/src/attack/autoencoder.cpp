#include "team/attack/autoencoder.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "team/error.hpp"
#include "team/nn/adam.hpp"
#include "team/rng.hpp"

namespace team::attack {

AutoEncoder AutoEncoder::create(Eigen::Index width, const std::vector<Eigen::Index>& hidden, Rng& rng) {
  if (width < 1) throw ConfigError("autoencoder: width must be >= 1");
  AutoEncoder ae;
  ae.width = width;
  Eigen::Index in = width;
  for (std::size_t k = 0; k < hidden.size(); ++k) {
    if (hidden[k] < 1) throw ConfigError("autoencoder: hidden widths must be >= 1");
    ae.layers.emplace_back("ae." + std::to_string(k), in, hidden[k], nn::Activation::tanh, rng);
    in = hidden[k];
  }
  ae.layers.emplace_back("ae." + std::to_string(hidden.size()), in, width, nn::Activation::sigmoid, rng);
  return ae;
}

AutoEncoder AutoEncoder::identity(Eigen::Index width) {
  AutoEncoder ae;
  ae.width = width;
  return ae;
}

std::vector<Eigen::Index> AutoEncoder::hidden_widths() const {
  std::vector<Eigen::Index> out;
  for (std::size_t k = 0; k + 1 < layers.size(); ++k) out.push_back(layers[k].out_dim());
  return out;
}

nn::ParamRefs AutoEncoder::params() {
  nn::ParamRefs out;
  for (auto& l : layers) {
    out.push_back(&l.weights);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<const nn::Param*> AutoEncoder::params() const {
  std::vector<const nn::Param*> out;
  for (const auto& l : layers) {
    out.push_back(&l.weights);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<Eigen::Index> default_hidden_widths(Eigen::Index n) {
  const Eigen::Index half = (n + 1) / 2;
  return {n, half, half, n};
}

namespace {

void check_width(const AutoEncoder& ae, Eigen::Index rows) {
  if (rows != ae.width) {
    throw UsageError("autoencoder: input width " + std::to_string(rows) + " does not match " +
                     std::to_string(ae.width));
  }
}

}  // namespace

Vector autoencoder_forward(const AutoEncoder& ae, const Vector& x) {
  check_width(ae, x.size());
  Vector h = x;
  for (const auto& l : ae.layers) h = nn::dense_forward(h, l);
  return h;
}

nn::Var autoencoder_forward(nn::Tape& tape, nn::Var x, AutoEncoder& ae, bool trainable) {
  check_width(ae, tape.value(x).rows());
  for (auto& l : ae.layers) x = nn::dense_forward(tape, x, l, trainable);
  return x;
}

nn::Var autoencoder_forward(nn::Tape& tape, nn::Var x, const AutoEncoder& ae) {
  check_width(ae, tape.value(x).rows());
  for (const auto& l : ae.layers) x = nn::dense_forward(tape, x, l);
  return x;
}

double pretrain_identity(AutoEncoder& ae, const std::vector<Vector>& samples, const PretrainConfig& cfg) {
  if (samples.empty()) throw CountError("pretrain: no samples");
  if (ae.is_identity()) return 0.0;
  nn::AdamState adam(cfg.lr);
  const auto params = ae.params();
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(cfg.seed);
  double last = 0.0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    team::shuffle(order.begin(), order.end(), rng);
    double sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      const std::size_t end = std::min(order.size(), start + cfg.batch);
      Matrix x(ae.width, static_cast<Eigen::Index>(end - start));
      for (std::size_t k = start; k < end; ++k) {
        check_width(ae, samples[order[k]].size());
        x.col(static_cast<Eigen::Index>(k - start)) = samples[order[k]];
      }
      nn::Tape tape;
      const nn::Var loss = tape.mse(autoencoder_forward(tape, tape.constant(x), ae, true), x);
      nn::zero_grads(params);
      tape.backward(loss);
      if (!std::isfinite(tape.scalar(loss))) {
        throw NumericError("pretrain: non-finite loss at epoch " + std::to_string(epoch));
      }
      nn::adam_step(params, adam);
      sum += tape.scalar(loss) * static_cast<double>(end - start);
    }
    last = sum / static_cast<double>(samples.size());
  }
  return last;
}

double reconstruction_mse(const AutoEncoder& ae, const std::vector<Vector>& samples) {
  if (samples.empty()) throw CountError("reconstruction_mse: no samples");
  double sum = 0.0;
  for (const auto& s : samples) sum += (autoencoder_forward(ae, s) - s).squaredNorm() / static_cast<double>(s.size());
  return sum / static_cast<double>(samples.size());
}

}  // namespace team::attack
