#pragma once

#include <cstdint>
#include <vector>

#include "json.hpp"

#include "team/attack/team.hpp"

namespace team::attack {

/// L-infinity PGD restricted to non-functional features of the adv slots.
struct PgdConfig {
  double epsilon = 0.3;     // radius in normalized feature units
  double step_size = 0.03;  // alpha
  int steps = 40;
  std::uint64_t seed = 0;
  bool random_start = false;

  void validate() const;
  nlohmann::json to_json() const;
  static PgdConfig from_json(const nlohmann::json& j);
};

/// Signed-gradient descent on the summed CE(logits, normal) at the adv
/// positions, projected onto the epsilon ball around the source intersected
/// with [0,1]. Only masked coordinates of adv slots move.
data::Window pgd_attack(const models::ClassifierModel& model, const data::Window& window,
                        const std::vector<std::size_t>& adv_positions, const data::FeatureMask& mask,
                        const PgdConfig& cfg);

/// Batched over compositions; adv slots are the perturbed positions.
std::vector<AdversarialWindow> pgd_generate(const models::ClassifierModel& model,
                                            const std::vector<data::TimeStepComposition>& windows,
                                            const data::FeatureMask& mask, const PgdConfig& cfg);

}  // namespace team::attack
