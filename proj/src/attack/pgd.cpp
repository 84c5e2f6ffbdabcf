#include "team/attack/pgd.hpp"

#include <algorithm>
#include <cmath>

#include "team/error.hpp"
#include "team/rng.hpp"

namespace team::attack {

void PgdConfig::validate() const {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw ConfigError("pgd: epsilon must be finite and >= 0");
  if (!(step_size > 0.0)) throw ConfigError("pgd: step_size must be > 0");
  if (epsilon > 0.0 && step_size > epsilon) throw ConfigError("pgd: step_size must not exceed epsilon");
  if (steps < 1) throw ConfigError("pgd: steps must be >= 1");
}

nlohmann::json PgdConfig::to_json() const {
  return {{"epsilon", epsilon}, {"step_size", step_size}, {"steps", steps}, {"seed", seed},
          {"random_start", random_start}};
}

PgdConfig PgdConfig::from_json(const nlohmann::json& j) {
  PgdConfig c;
  c.epsilon = j.at("epsilon").get<double>();
  c.step_size = j.at("step_size").get<double>();
  c.steps = j.at("steps").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.random_start = j.at("random_start").get<bool>();
  return c;
}

namespace {

// xs[t] is (features x batch); only rows in `rows` of steps in `adv` move.
void run_pgd(const models::ClassifierModel& model, std::vector<Matrix>& xs, const std::vector<std::size_t>& adv,
             const std::vector<std::size_t>& rows, const PgdConfig& cfg) {
  const std::vector<Matrix> x0 = xs;
  const Eigen::Index batch = xs.front().cols();
  auto project = [&](std::size_t t) {
    for (std::size_t r : rows) {
      const auto i = static_cast<Eigen::Index>(r);
      for (Eigen::Index b = 0; b < batch; ++b) {
        const double lo = std::max(0.0, x0[t](i, b) - cfg.epsilon);
        const double hi = std::min(1.0, x0[t](i, b) + cfg.epsilon);
        xs[t](i, b) = std::clamp(xs[t](i, b), std::min(lo, x0[t](i, b)), std::max(hi, x0[t](i, b)));
      }
    }
  };
  if (cfg.random_start) {
    Rng rng(cfg.seed);
    for (std::size_t t : adv) {
      for (std::size_t r : rows) {
        for (Eigen::Index b = 0; b < batch; ++b) {
          xs[t](static_cast<Eigen::Index>(r), b) += uniform(rng, -cfg.epsilon, cfg.epsilon);
        }
      }
      project(t);
    }
  }
  const std::vector<int> targets(static_cast<std::size_t>(batch), model.normal_class);
  for (int it = 0; it < cfg.steps; ++it) {
    nn::Tape tape;
    const rnn::BoundCell bound = rnn::bind_frozen(tape, model.cell);
    std::vector<nn::Var> in;
    std::vector<bool> is_adv(xs.size(), false);
    for (std::size_t t : adv) is_adv[t] = true;
    for (std::size_t t = 0; t < xs.size(); ++t) in.push_back(is_adv[t] ? tape.variable(xs[t]) : tape.constant(xs[t]));
    const auto hs = rnn::unroll(tape, bound, in);
    nn::Var loss;
    bool first = true;
    for (std::size_t t : adv) {
      const nn::Var ce = tape.softmax_cross_entropy(nn::dense_forward(tape, hs[t], model.head), targets);
      loss = first ? ce : tape.add(loss, ce);
      first = false;
    }
    tape.backward(loss);
    if (!std::isfinite(tape.scalar(loss))) throw NumericError("pgd: non-finite loss at step " + std::to_string(it));
    for (std::size_t t : adv) {
      const Matrix g = tape.grad(in[t]);
      for (std::size_t r : rows) {
        const auto i = static_cast<Eigen::Index>(r);
        for (Eigen::Index b = 0; b < batch; ++b) {
          const double s = g(i, b) > 0.0 ? 1.0 : (g(i, b) < 0.0 ? -1.0 : 0.0);
          xs[t](i, b) -= cfg.step_size * s;
        }
      }
      project(t);
    }
  }
}

void check_inputs(const models::ClassifierModel& model, const data::FeatureMask& mask, const PgdConfig& cfg) {
  cfg.validate();
  if (mask.nonfunctional.empty()) throw ConfigError("pgd: the mask marks no perturbable feature");
  if (static_cast<Eigen::Index>(mask.width) != model.feature_width()) {
    throw UsageError("pgd: mask width " + std::to_string(mask.width) + " does not match model width " +
                     std::to_string(model.feature_width()));
  }
}

}  // namespace

data::Window pgd_attack(const models::ClassifierModel& model, const data::Window& window,
                        const std::vector<std::size_t>& adv_positions, const data::FeatureMask& mask,
                        const PgdConfig& cfg) {
  check_inputs(model, mask, cfg);
  if (window.empty()) throw InputError("pgd: empty window");
  std::vector<Matrix> xs;
  for (const auto& r : window) {
    if (r.features.size() != model.feature_width()) throw UsageError("pgd: record width does not match the model");
    xs.emplace_back(r.features);
  }
  for (std::size_t t : adv_positions) {
    if (t >= window.size()) throw UsageError("pgd: adv position " + std::to_string(t) + " outside the window");
  }
  if (!adv_positions.empty()) run_pgd(model, xs, adv_positions, mask.nonfunctional, cfg);
  data::Window out = window;
  for (std::size_t t = 0; t < out.size(); ++t) out[t].features = xs[t].col(0);
  return out;
}

std::vector<AdversarialWindow> pgd_generate(const models::ClassifierModel& model,
                                            const std::vector<data::TimeStepComposition>& windows,
                                            const data::FeatureMask& mask, const PgdConfig& cfg) {
  check_inputs(model, mask, cfg);
  std::vector<AdversarialWindow> out;
  constexpr std::size_t kChunk = 128;
  for (std::size_t start = 0; start < windows.size(); start += kChunk) {
    const std::size_t end = std::min(windows.size(), start + kChunk);
    const std::size_t steps = windows[start].time_n();
    const std::size_t adv_n = windows[start].adv_slots.size();
    std::vector<Matrix> xs(steps, Matrix(model.feature_width(), static_cast<Eigen::Index>(end - start)));
    for (std::size_t b = start; b < end; ++b) {
      if (windows[b].time_n() != steps || windows[b].adv_slots.size() != adv_n) {
        throw UsageError("pgd: windows must share adv_n and time_n");
      }
      const auto recs = windows[b].records();
      for (std::size_t t = 0; t < steps; ++t) {
        if (recs[t].features.size() != model.feature_width()) {
          throw UsageError("pgd: record width does not match the model");
        }
        xs[t].col(static_cast<Eigen::Index>(b - start)) = recs[t].features;
      }
    }
    std::vector<std::size_t> adv(adv_n);
    for (std::size_t t = 0; t < adv_n; ++t) adv[t] = t;
    run_pgd(model, xs, adv, mask.nonfunctional, cfg);
    for (std::size_t b = start; b < end; ++b) {
      AdversarialWindow w = unperturbed_window(windows[b]);
      for (std::size_t t = 0; t < adv_n; ++t) w.records[t].features = xs[t].col(static_cast<Eigen::Index>(b - start));
      out.push_back(std::move(w));
    }
  }
  return out;
}

}  // namespace team::attack
