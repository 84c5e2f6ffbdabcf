#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"

#include "team/attack/team.hpp"

namespace team::eval {

/// A percent always travels with the counts it was computed from.
struct Count {
  std::size_t evaluated = 0;
  std::size_t misjudged = 0;  // labeled normal by the target

  double percent() const;
  Count& operator+=(const Count& o);
  bool operator==(const Count&) const = default;
  nlohmann::json to_json() const;
  static Count from_json(const nlohmann::json& j);
};

/// MAR: share of original attack records labeled normal, over every window
/// position. Throws InputError if a record is not of `attack_type` and
/// CountError if there are no records.
Count compute_mar(const models::ClassifierModel& target, const std::vector<data::Window>& windows, int attack_type);

/// ASR: share of AE-tagged records labeled normal. Throws UsageError if no
/// record carries an AE tag.
Count compute_asr(const models::ClassifierModel& target, const std::vector<attack::AdversarialWindow>& windows);

struct NextMoment {
  Count mar1;       // first OE after the AE prefix
  Count mar2;       // second OE after the AE prefix
  Count base_mar1;  // same positions in the clean source windows
  Count base_mar2;
};

/// Pooled over windows. Throws ConfigError if a window has fewer than two
/// OE records after its AE prefix.
NextMoment next_moment_eval(const models::ClassifierModel& target,
                            const std::vector<attack::AdversarialWindow>& windows);

/// One raw prediction: the target's label for a record as attacked and for
/// the clean record at the same position.
struct LogRow {
  std::size_t window = 0;
  std::size_t position = 0;
  attack::Provenance tag = attack::Provenance::oe;
  std::string label;
  std::string predicted;
  std::string original_predicted;
};

struct ReportCell {
  std::string attack_type;
  std::string method;  // TEAM, PGD or OE
  std::string surrogate;  // cell kind guiding the attack, "-" for none
  std::string target;     // cell kind of the evaluated model
  bool white_box = false;
  Count mar;
  Count asr;
  Count mar1;
  Count mar2;
  Count base_mar1;
  Count base_mar2;

  bool operator==(const ReportCell&) const = default;
  std::string key() const;
  nlohmann::json to_json() const;
  static ReportCell from_json(const nlohmann::json& j);
};

struct CellEvaluation {
  ReportCell cell;
  std::vector<LogRow> log;
};

/// Scores one set of adversarial windows against one target in a single
/// pass: MAR on the clean windows, ASR on AE slots, MAR1/MAR2 (when at least
/// two OE slots follow the prefix) and the per-record log.
CellEvaluation evaluate_windows(const models::ClassifierModel& target,
                                const std::vector<attack::AdversarialWindow>& windows, const std::string& attack_type,
                                const std::string& method, const std::string& surrogate);

/// Every artifact against every target on the same clean windows. The
/// diagonal (matching cell kinds) is flagged white-box. Throws UsageError
/// when schema fingerprints disagree.
std::vector<CellEvaluation> transfer_matrix(const std::vector<attack::AttackArtifact>& artifacts,
                                            const std::vector<models::ClassifierModel>& targets,
                                            const std::vector<data::TimeStepComposition>& windows);

struct MetricsReport {
  nlohmann::json meta = nlohmann::json::object();  // seeds, config hashes, split
  std::vector<ReportCell> cells;

  bool operator==(const MetricsReport&) const = default;
  nlohmann::json to_json() const;
  static MetricsReport from_json(const nlohmann::json& j);
  /// Fixed-width table, one row per cell, each percent followed by its counts.
  std::string to_text() const;
};

/// Surrogate-by-target grid of one metric ("asr", "mar1", ...) for one
/// attack type and method; the white-box diagonal is marked with '*'.
std::string transfer_table(const MetricsReport& r, const std::string& attack_type, const std::string& method,
                           const std::string& metric);

enum class ReportFormat { json, text };

/// Deterministic: the same report gives the same bytes.
std::string render_report(const MetricsReport& r, ReportFormat format);
void emit_report(const MetricsReport& r, ReportFormat format, const std::string& path);
MetricsReport read_report(const std::string& path);

/// Prediction log CSV: one row per (cell, window, position).
void write_prediction_log(const std::vector<CellEvaluation>& cells, const std::string& path);

}  // namespace team::eval
