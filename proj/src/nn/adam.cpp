#include "team/nn/adam.hpp"

#include <cmath>
#include <string>

#include "team/error.hpp"

namespace team::nn {

void AdamState::init(const ParamRefs& params) {
  first_moment.clear();
  second_moment.clear();
  for (const Param* p : params) {
    first_moment.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    second_moment.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
  }
  step_count = 0;
}

void adam_step(const ParamRefs& params, AdamState& state) {
  if (!state.initialized()) state.init(params);
  if (params.size() != state.first_moment.size()) {
    throw ConfigError("adam_step: " + std::to_string(params.size()) + " params but state tracks " +
                      std::to_string(state.first_moment.size()));
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    const Param& p = *params[k];
    if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols() ||
        state.first_moment[k].rows() != p.value.rows() ||
        state.first_moment[k].cols() != p.value.cols()) {
      throw ConfigError("adam_step: shape mismatch for '" + p.name + "'");
    }
  }
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Param& p = *params[k];
    Matrix& m = state.first_moment[k];
    Matrix& v = state.second_moment[k];
    m = state.beta1 * m + (1.0 - state.beta1) * p.grad;
    v = state.beta2 * v + (1.0 - state.beta2) * p.grad.cwiseAbs2();
    p.value.array() -= state.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + state.epsilon);
  }
}

}  // namespace team::nn
