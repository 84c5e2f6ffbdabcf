#pragma once

#include <cstdint>
#include <vector>

#include "team/nn/tensor.hpp"

namespace team::nn {

struct AdamState {
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
  std::int64_t step_count = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  AdamState() = default;
  explicit AdamState(double learning_rate) : lr(learning_rate) {}

  /// Allocate zeroed moments shaped like `params`.
  void init(const ParamRefs& params);
  bool initialized() const { return !first_moment.empty(); }
};

/// One bias-corrected Adam update using each Param's `grad`.
void adam_step(const ParamRefs& params, AdamState& state);

}  // namespace team::nn
