#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "team/attack/autoencoder.hpp"
#include "team/data/windows.hpp"
#include "team/models/classifier.hpp"

namespace team::attack {

enum class Provenance { ae, oe };

const char* to_string(Provenance p);

/// A window as the target sees it, with the clean source kept alongside.
struct AdversarialWindow {
  data::Window records;
  data::Window original;
  std::vector<Provenance> tags;  // one per record
  int attack_type = 0;
  std::size_t source_index = 0;

  std::size_t adv_count() const;
};

/// Adversarial prefix: each adv slot keeps its functional features and gets
/// the autoencoder's reconstruction of its non-functional ones. Org slots
/// pass through untouched.
AdversarialWindow compose_window(const data::TimeStepComposition& comp, const AutoEncoder& ae,
                                 const data::FeatureMask& mask);

/// Marks the first `adv_n` records of a clean window as AE slots without
/// changing them (no-op attack, used as the control condition).
AdversarialWindow unperturbed_window(const data::TimeStepComposition& comp);

struct AttackConfig {
  std::string attack_type;
  std::size_t time_n = 8;
  std::size_t adv_n = 6;
  std::size_t org_n = 2;
  int epochs = 2000;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  double hn = 0.0;  // 0 = whatever the surrogate uses; otherwise must match it
  bool keep_best = true;
  bool stop_at_perfect = true;  // end early once validation success reaches 100%
  double org_weight = 1.0;      // weight of L_org in the total loss
  std::size_t batch = 32;
  double val_fraction = 0.2;  // tail of the window stream used for keep_best
  std::vector<Eigen::Index> hidden;  // empty = default_hidden_widths
  int pretrain_epochs = 0;           // identity pretraining before the attack

  void validate() const;
  nlohmann::json to_json() const;
  static AttackConfig from_json(const nlohmann::json& j);
};

struct EpochStats {
  double total = 0.0;
  double adv = 0.0;  // L_adv
  double org = 0.0;  // L_org (unweighted)
  double val_success = 0.0;  // fraction of validation records the surrogate calls normal
};

struct AttackArtifact {
  AutoEncoder ae;
  AttackConfig config;
  int attack_class = 0;
  int normal_class = 0;
  Eigen::Index feature_width = 0;
  std::vector<std::size_t> nonfunctional;  // feature indices the autoencoder rewrites
  std::string schema_fingerprint;
  std::string surrogate_hash;  // parameter_hash of the guiding surrogate
  std::string surrogate_cell;
  double surrogate_hn = 1.0;
  std::vector<EpochStats> curve;
  int best_epoch = -1;
  double best_val_success = 0.0;

  data::FeatureMask mask() const;
};

/// Loss nodes of one batch: total = adv + org_weight * org.
struct TeamGraph {
  nn::Var total;
  nn::Var adv;
  std::optional<nn::Var> org;
};

/// Records AE -> splice -> frozen surrogate -> per-step CE(normal) on `tape`.
/// Gradients reach only the autoencoder's parameters. Each window's loss is
/// weighted by `window_weight`.
TeamGraph build_team_graph(nn::Tape& tape, const models::ClassifierModel& surrogate, AutoEncoder& ae,
                           std::span<const data::TimeStepComposition* const> batch, const data::FeatureMask& mask,
                           double org_weight, double window_weight);

/// Trains one autoencoder for one attack type against a frozen surrogate.
AttackArtifact team_train(const models::ClassifierModel& surrogate,
                          const std::vector<data::TimeStepComposition>& windows, const data::FeatureMask& mask,
                          const AttackConfig& cfg);

/// Pure: same artifact and windows give identical output.
std::vector<AdversarialWindow> team_generate(const AttackArtifact& artifact,
                                             const std::vector<data::TimeStepComposition>& windows);

/// Fraction of all records in the windows that `model` labels normal.
double surrogate_success(const models::ClassifierModel& model, const std::vector<AdversarialWindow>& windows);

void save_artifact(const AttackArtifact& a, const std::string& path);
AttackArtifact load_artifact(const std::string& path);

}  // namespace team::attack
