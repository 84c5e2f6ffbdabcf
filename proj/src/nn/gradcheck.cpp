#include "team/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "team/error.hpp"

namespace team::nn {

namespace {

double checked(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericError(std::string("finite_difference_check: non-finite ") + what);
  return v;
}

}  // namespace

GradCheckResult finite_difference_check(const LossFn& loss_fn, const ParamRefs& params,
                                        int probe_count, std::uint64_t seed, double step) {
  if (params.empty()) throw ConfigError("finite_difference_check: no parameters");
  zero_grads(params);
  checked(loss_fn(true), "loss");

  std::vector<Matrix> analytic;
  Eigen::Index total = 0;
  for (const Param* p : params) {
    analytic.push_back(p->grad);
    total += p->size();
  }
  if (total == 0) throw ConfigError("finite_difference_check: parameters are empty");

  Rng rng(seed);
  GradCheckResult result;
  for (int k = 0; k < probe_count; ++k) {
    auto flat = static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::size_t>(total)));
    std::size_t which = 0;
    while (flat >= params[which]->size()) {
      flat -= params[which]->size();
      ++which;
    }
    Param& p = *params[which];
    double& coord = p.value.data()[flat];
    const double saved = coord;
    coord = saved + step;
    const double up = checked(loss_fn(false), "loss");
    coord = saved - step;
    const double down = checked(loss_fn(false), "loss");
    coord = saved;

    const double numeric = (up - down) / (2.0 * step);
    const double a = analytic[which].data()[flat];
    const double rel = std::abs(a - numeric) / std::max(std::abs(numeric), 1e-6);
    result.max_relative_error = std::max(result.max_relative_error, rel);
    ++result.probes;
  }
  return result;
}

}  // namespace team::nn
