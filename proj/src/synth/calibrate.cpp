#include "team/synth/calibrate.hpp"

#include "team/error.hpp"

namespace team::synth {

CalibrationResult calibrate_hn(const data::Dataset& train, const std::vector<std::string>& class_names, int normal_class,
                               const std::string& schema_fingerprint, const models::TrainConfig& surrogate_cfg,
                               const attack::AttackConfig& attack_cfg,
                               const std::vector<data::TimeStepComposition>& attack_windows,
                               const std::vector<data::TimeStepComposition>& validation_windows,
                               const data::FeatureMask& mask, const std::vector<const models::ClassifierModel*>& targets,
                               const std::vector<double>& grid) {
  if (grid.empty()) throw ConfigError("calibrate_hn: empty grid");
  if (targets.empty()) throw ConfigError("calibrate_hn: no targets to measure transfer against");
  if (validation_windows.empty()) throw CountError("calibrate_hn: empty validation slice");
  CalibrationResult out;
  out.grid = grid;
  double best = -1.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    models::TrainConfig sc = surrogate_cfg;
    sc.role = models::ModelRole::surrogate;
    sc.hn = grid[k];
    auto sur = models::train_classifier(train, class_names, normal_class, sc, schema_fingerprint).model;
    attack::AttackConfig ac = attack_cfg;
    ac.hn = 0.0;
    auto art = attack::team_train(sur, attack_windows, mask, ac);
    const auto adv = attack::team_generate(art, validation_windows);
    eval::Count pooled;
    for (const auto* t : targets) pooled += eval::compute_asr(*t, adv);
    out.validation_asr.push_back(pooled.percent());
    if (pooled.percent() > best) {
      best = pooled.percent();
      out.best = k;
      out.surrogate = std::move(sur);
      out.artifact = std::move(art);
    }
  }
  return out;
}

}  // namespace team::synth
