#pragma once

#include <cstdint>
#include <functional>

#include "team/nn/tensor.hpp"

namespace team::nn {

/// Loss callback for finite_difference_check. When `with_grad` is true the
/// callback must also run backward so analytic gradients land in the
/// params' `grad` buffers (which the checker zeroes first).
using LossFn = std::function<double(bool with_grad)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  int probes = 0;
};

/// Compares analytic gradients against central differences on
/// `probe_count` coordinates drawn uniformly over all params.
/// Relative error per probe is |analytic - numeric| / max(|numeric|, 1e-6).
/// Throws NumericError on a non-finite loss.
GradCheckResult finite_difference_check(const LossFn& loss_fn, const ParamRefs& params,
                                        int probe_count, std::uint64_t seed,
                                        double step = 1e-5);

}  // namespace team::nn
