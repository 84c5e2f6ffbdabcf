#include "team/nn/loss.hpp"

#include <cmath>
#include <string>

#include "team/error.hpp"

namespace team::nn {

namespace {

void check(const Vector& logits, int target) {
  if (logits.size() < 2) throw InputError("softmax_cross_entropy: need at least 2 logits");
  if (target < 0 || target >= logits.size()) {
    throw InputError("softmax_cross_entropy: class index " + std::to_string(target) +
                     " out of range for " + std::to_string(logits.size()) + " classes");
  }
}

}  // namespace

Vector softmax(const Vector& logits) {
  const double m = logits.maxCoeff();
  Vector e = (logits.array() - m).exp().matrix();
  return e / e.sum();
}

double softmax_cross_entropy(const Vector& logits, int target) {
  check(logits, target);
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  return lse - logits(target);
}

Vector softmax_cross_entropy_grad(const Vector& logits, int target) {
  check(logits, target);
  Vector g = softmax(logits);
  g(target) -= 1.0;
  return g;
}

int argmax(const Vector& logits) {
  int best = 0;
  for (Eigen::Index k = 1; k < logits.size(); ++k) {
    if (logits(k) > logits(best)) best = static_cast<int>(k);
  }
  return best;
}

}  // namespace team::nn
