#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace team::data {

enum class ColumnKind { continuous, categorical };

struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::continuous;
  // Fixed range for continuous columns; fitted from training data when absent.
  std::optional<double> min;
  std::optional<double> max;
  // Known categories; fitted from training data when empty.
  std::vector<std::string> categories;
};

struct NonfunctionalMask {
  std::vector<bool> columns;  // true = non-functional (perturbable)
  std::string source;         // free-text provenance note
};

/// Column layout, class list and per-attack-type non-functional masks.
/// See docs/formats.md for the file grammar.
struct FeatureSchema {
  std::string name;
  std::vector<Column> columns;
  std::string label_column;
  std::vector<std::string> class_names;
  std::string normal_class;
  std::map<std::string, std::string> label_map;  // raw label -> class name
  bool skip_unknown_labels = false;
  bool csv_header = true;
  // Full column order of a headerless CSV (features, label and extras).
  std::vector<std::string> csv_columns;
  std::map<std::string, NonfunctionalMask> nonfunctional;  // keyed by class name

  int normal_index() const;
  /// Class index for a class name; throws ConfigError if unknown.
  int class_index(const std::string& class_name) const;
  /// Class index for a raw label (after label_map); nullopt if unknown.
  std::optional<int> label_to_class(const std::string& raw_label) const;
  const NonfunctionalMask& mask_for(const std::string& attack_type) const;
  std::vector<std::string> attack_types() const;

  /// Stable hash of the canonical serialization.
  std::string fingerprint() const;
};

/// Checks every invariant; throws SchemaError naming the offending parts.
void validate(const FeatureSchema& schema);

FeatureSchema parse_schema(const std::string& yaml_text);
FeatureSchema load_schema(const std::string& path);
std::string dump_schema(const FeatureSchema& schema);

}  // namespace team::data
