#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

#include "team/data/windows.hpp"
#include "team/nn/dense.hpp"
#include "team/rnn/cells.hpp"

namespace team::models {

using nn::Matrix;
using nn::Vector;
using rnn::CellKind;

enum class ModelRole { target, surrogate };

const char* to_string(ModelRole r);
ModelRole model_role_from_string(const std::string& s);

/// One recurrent layer followed by a linear head applied at every step.
struct ClassifierModel {
  rnn::RecurrentCell cell;
  nn::DenseLayer head;  // hidden -> class count, linear
  std::vector<std::string> class_names;
  int normal_class = 0;
  ModelRole role = ModelRole::target;
  std::string schema_fingerprint;

  nn::ParamRefs params();
  std::vector<const nn::Param*> params() const;
  Eigen::Index feature_width() const { return cell.input_dim(); }
  std::size_t class_count() const { return class_names.size(); }

  /// Throws AssertionFailure unless a target model has hn exactly 1.
  void check_role() const;
};

ClassifierModel make_classifier(CellKind kind, Eigen::Index feature_width, Eigen::Index hidden_dim,
                                std::vector<std::string> class_names, int normal_class, double hn,
                                bool dilate_input_weights, ModelRole role, Rng& rng);

/// SHA-256 over cell kind, hn, dilation switch and every parameter value.
std::string parameter_hash(const ClassifierModel& m);

struct TrainConfig {
  CellKind cell = CellKind::lstm;
  ModelRole role = ModelRole::target;
  int epochs = 20;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  Eigen::Index hidden_dim = 64;
  std::size_t time_n = 8;
  double hn = 1.0;
  bool dilate_input_weights = true;
  double data_fraction = 1.0;
  std::size_t batch = 32;         // windows per optimizer step
  double holdout_fraction = 0.1;  // of the selected windows

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

/// Surrogate defaults: half the data, time dilation on.
TrainConfig surrogate_defaults();

struct TrainReport {
  double train_accuracy = 0.0;    // per-step, on the training windows
  double holdout_accuracy = 0.0;  // per-step, on the held-out windows
  std::vector<double> loss_curve;  // mean summed-per-step CE per window, per epoch
  std::size_t total_windows = 0;
  std::size_t selected_windows = 0;  // after data_fraction
  std::size_t train_windows = 0;
  std::size_t holdout_windows = 0;
  std::string selection_hash;  // hash of the selected window indices

  nlohmann::json to_json() const;
  static TrainReport from_json(const nlohmann::json& j);
};

/// Replaces the recurrent unroll during training (tests use it to train with
/// an independent reference cell). Returns one hidden state per input.
using UnrollFn = std::function<std::vector<nn::Var>(nn::Tape&, rnn::RecurrentCell&, const std::vector<nn::Var>&)>;

struct TrainResult {
  ClassifierModel model;
  TrainReport report;
};

/// Windowed per-step training: every window of `time_n` consecutive records
/// contributes the sum of its per-step cross-entropies; a batch averages
/// over its windows. `data_fraction` keeps a prefix of a seeded shuffle of
/// the windows, and the last `holdout_fraction` of that selection is held out.
TrainResult train_classifier(const data::Dataset& ds, const std::vector<std::string>& class_names,
                             int normal_class, const TrainConfig& cfg, const std::string& schema_fingerprint = "",
                             const UnrollFn& unroll = {});

struct Prediction {
  std::vector<int> labels;  // argmax per step, ties to the lowest class index
  Matrix logits;            // classes x time_n
};

/// Throws UsageError on a feature width that does not match the model.
Prediction predict_window(const ClassifierModel& m, const data::Window& w);
/// Batched form; windows must share one length.
std::vector<Prediction> predict_windows(const ClassifierModel& m, const std::vector<data::Window>& ws);

/// Fraction of per-step predictions equal to the record labels.
double accuracy(const ClassifierModel& m, const std::vector<data::Window>& ws);

struct Checkpoint {
  ClassifierModel model;
  TrainConfig config;
  TrainReport report;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
/// Throws IntegrityError on truncation, hash mismatch or version skew.
Checkpoint load_checkpoint(const std::string& path);

/// Normalizer sidecar path stored beside a checkpoint.
std::string normalizer_path(const std::string& checkpoint_path);

}  // namespace team::models
