#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace team::config {

/// Parses YAML (or JSON) text into a JSON tree. Plain scalars become
/// booleans, null, integers or reals when they read as such; quoted
/// scalars stay strings.
nlohmann::json parse_yaml(const std::string& text, const std::string& origin = "<text>");
nlohmann::json load_file(const std::string& path);

/// Recursively overlays `overrides` on `defaults`. A key absent from the
/// defaults raises ConfigError with the closest known key as a suggestion.
/// A null default accepts any value.
nlohmann::json merge(const nlohmann::json& defaults, const nlohmann::json& overrides, const std::string& where = "");

/// One dotted-key assignment and where it came from (for error messages).
struct Override {
  std::string key;    // e.g. "team.epochs"
  std::string value;  // parsed as a YAML scalar or flow collection
  std::string source;  // e.g. "--set team.epochs=5" or "--seed"
};

/// "a.b=value" -> Override. Throws ConfigError without '='.
Override parse_assignment(const std::string& text, const std::string& source);

/// Applies overrides in order. The same key set twice to different values
/// raises ConfigError naming both sources. Unknown keys raise ConfigError.
void apply_overrides(nlohmann::json& tree, const std::vector<Override>& overrides);

/// Edit distance used for "did you mean" suggestions.
std::size_t edit_distance(const std::string& a, const std::string& b);
/// Closest candidate within a small distance, or empty.
std::string suggest(const std::string& word, const std::vector<std::string>& candidates);

}  // namespace team::config
