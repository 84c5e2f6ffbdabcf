#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

#include "team/attack/pgd.hpp"
#include "team/config.hpp"
#include "team/data/synthetic.hpp"
#include "team/eval/metrics.hpp"

namespace team::synth {

/// Every key a recipe may set, with its default. Recipe files are merged
/// over this tree, so unknown keys are rejected.
nlohmann::json recipe_defaults();

/// A resolved recipe: the defaults overlaid with the file and any overrides.
struct Recipe {
  nlohmann::json tree;
  std::string base_dir = ".";  // CSV and schema paths resolve against this

  std::string name() const;
  void validate() const;
};

Recipe load_recipe(const std::string& path, const std::vector<config::Override>& overrides = {});
Recipe recipe_from_json(const nlohmann::json& j);

/// Training and test data with the normalizer fitted on the training part.
struct PreparedData {
  data::FeatureSchema schema;
  data::Normalizer norm;
  data::Dataset train;
  data::Dataset test;
};

struct RawSplit {
  data::FeatureSchema schema;
  data::RawTable train;
  data::RawTable test;
};

/// `data` section: synthetic generation split chronologically, or a schema
/// with train and test CSVs.
RawSplit load_raw(const nlohmann::json& data_section, std::uint64_t seed, const std::string& base_dir = ".");

/// Normalizes with `fixed` when given (it must match the schema), otherwise
/// fits the normalizer on the training part.
PreparedData prepare_data(const nlohmann::json& data_section, std::uint64_t seed, const std::string& base_dir = ".",
                          const data::Normalizer* fixed = nullptr);

struct AssertionOutcome {
  std::string name;
  std::string expression;  // human-readable check
  double observed = 0.0;
  bool passed = false;
};

struct RunResult {
  std::string run_dir;
  eval::MetricsReport report;
  std::vector<AssertionOutcome> assertions;
  std::vector<std::string> files;  // written files, relative to run_dir, sorted

  bool all_passed() const;
  /// Names of failed assertions, comma separated.
  std::string failed_names() const;
};

using Logger = std::function<void(const std::string&)>;

/// Stage seeds come from team::derive_seed(master, stage name), so any
/// stage can be re-run alone. Seed keys inside the recipe are ignored.
/// Runs data -> targets -> surrogates -> attacks -> evaluation -> assertions
/// and writes everything under `<out_root>/<name>-seed<seed>`. A failing
/// stage raises the original error class with the stage name prepended.
/// Assertion outcomes are returned, not thrown.
RunResult run_recipe(const Recipe& recipe, std::uint64_t master_seed, const std::string& out_root,
                     const Logger& log = {});

/// Throws AssertionFailure naming every failed assertion.
void require_assertions(const RunResult& r);

/// SHA-256 over the run's files in sorted order (name and bytes).
std::string run_digest(const RunResult& r);

}  // namespace team::synth
