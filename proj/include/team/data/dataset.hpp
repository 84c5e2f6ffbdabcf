#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"

#include "team/data/schema.hpp"
#include "team/nn/tensor.hpp"

namespace team::data {

using nn::Vector;

/// Raw CSV contents: the schema's feature columns plus the label, as text.
struct RawTable {
  std::vector<std::string> columns;  // feature columns in schema order
  std::vector<std::vector<std::string>> rows;  // one value per feature column
  std::vector<std::string> labels;             // raw label per row
};

std::vector<std::string> split_csv_line(const std::string& line);

/// Reads a headered (or schema-described headerless) CSV. Header names are
/// whitespace-trimmed. Rows whose label maps to no class raise InputError
/// unless the schema sets `unknown_labels: skip`, in which case they are
/// dropped and counted in `skipped`.
RawTable read_csv(const std::string& path, const FeatureSchema& schema, std::size_t* skipped = nullptr);
RawTable parse_csv(std::istream& in, const FeatureSchema& schema, std::size_t* skipped = nullptr);

/// A normalized record: features in [0,1] (one-hot expanded), class index.
struct Record {
  Vector features;
  int label = 0;
};

struct ColumnStats {
  double min = 0.0;
  double max = 0.0;
  std::vector<std::string> categories;  // categorical only; an `other` slot follows
};

/// Min-max constants fitted on the training split, persisted as a sidecar
/// next to each model checkpoint so test data reuses training statistics.
struct Normalizer {
  std::string schema_fingerprint;
  std::vector<ColumnKind> kinds;
  std::vector<ColumnStats> columns;

  std::size_t feature_width() const;
  /// First feature index of each column.
  std::vector<std::size_t> offsets() const;
  std::vector<std::string> feature_names(const FeatureSchema& schema) const;

  nlohmann::json to_json() const;
  static Normalizer from_json(const nlohmann::json& j);
  void save(const std::string& path) const;
  static Normalizer load(const std::string& path);
};

struct Dataset {
  std::vector<Record> records;
  std::size_t feature_width = 0;
  std::size_t unseen_categories = 0;  // values routed to the `other` bucket
  std::size_t clipped = 0;            // continuous values clipped into [0,1]

  std::size_t size() const { return records.size(); }
};

/// Fixed schema ranges win; otherwise min/max over finite training values.
Normalizer fit_normalizer(const RawTable& train, const FeatureSchema& schema);

/// Min-max scaling (a constant column maps to 0), out-of-range values
/// clipped to [0,1], categoricals one-hot with a trailing `other` slot.
/// NaN maps to 0, +inf to 1 and -inf to 0.
Dataset normalize(const RawTable& raw, const FeatureSchema& schema, const Normalizer& norm);

/// Inverse of normalize for one record: continuous values are unscaled,
/// categorical groups decode to their category (or "other").
std::vector<std::string> denormalize(const Record& r, const Normalizer& norm);

/// Per-feature split of the expanded feature vector for one attack type.
struct FeatureMask {
  std::size_t width = 0;
  std::vector<std::size_t> functional;
  std::vector<std::size_t> nonfunctional;
};

/// Expands the column mask of `attack_type` to feature indices. One-hot
/// categorical groups are always functional.
FeatureMask feature_mask(const FeatureSchema& schema, const Normalizer& norm,
                         const std::string& attack_type);
FeatureMask feature_mask(const std::vector<bool>& nonfunctional_features);

struct FeaturePart {
  Vector values;
  std::vector<std::size_t> indices;
};

struct SplitRecord {
  FeaturePart functional;
  FeaturePart nonfunctional;
};

SplitRecord split_features(const Vector& features, const FeatureMask& mask);
SplitRecord split_features(const Record& r, const FeatureSchema& schema, const Normalizer& norm,
                           const std::string& attack_type);

/// Rebuilds the full-width vector. Throws UsageError if the index maps
/// overlap or do not cover 0..n-1.
Vector splice(const FeaturePart& functional, const FeaturePart& nonfunctional);

/// Writes a headered CSV: feature columns then the label column.
void write_csv(const std::string& path, const RawTable& table, const FeatureSchema& schema);

}  // namespace team::data
