#pragma once

#include <vector>

#include "team/attack/team.hpp"
#include "team/eval/metrics.hpp"

namespace team::synth {

struct CalibrationResult {
  std::vector<double> grid;
  std::vector<double> validation_asr;  // percent, pooled over the targets
  std::size_t best = 0;                // first grid index with the highest ASR
  models::ClassifierModel surrogate;   // trained at grid[best]
  attack::AttackArtifact artifact;     // TEAM against that surrogate
};

/// Picks the surrogate's time dilation: for each hn in `grid`, trains a
/// surrogate with `surrogate_cfg` (hn replaced), trains TEAM on
/// `attack_windows`, and scores the transfer ASR of the generated prefixes on
/// `validation_windows` against `targets`. Seeds stay fixed across the grid
/// so only hn changes.
CalibrationResult calibrate_hn(const data::Dataset& train, const std::vector<std::string>& class_names, int normal_class,
                               const std::string& schema_fingerprint, const models::TrainConfig& surrogate_cfg,
                               const attack::AttackConfig& attack_cfg,
                               const std::vector<data::TimeStepComposition>& attack_windows,
                               const std::vector<data::TimeStepComposition>& validation_windows,
                               const data::FeatureMask& mask, const std::vector<const models::ClassifierModel*>& targets,
                               const std::vector<double>& grid = {1.25, 1.5, 2.0, 3.0});

}  // namespace team::synth
