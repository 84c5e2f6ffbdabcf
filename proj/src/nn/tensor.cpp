#include "team/nn/tensor.hpp"

#include <cmath>

namespace team::nn {

Matrix init_uniform(Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in > 0 ? fan_in : 1));
  Matrix m(rows, cols);
  // Row-major fill order so a given seed means the same weights regardless
  // of storage order.
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = uniform(rng, -bound, bound);
  }
  return m;
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

void zero_grads(const ParamRefs& params) {
  for (Param* p : params) p->zero_grad();
}

}  // namespace team::nn
