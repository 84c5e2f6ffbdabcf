#include "team/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "team/error.hpp"

namespace team::config {

namespace {

nlohmann::json scalar_to_json(const YAML::Node& n) {
  const std::string& s = n.Scalar();
  if (n.Tag() == "!") return s;  // quoted
  if (s == "true" || s == "True") return true;
  if (s == "false" || s == "False") return false;
  if (s == "null" || s == "~" || s.empty()) return nullptr;
  std::int64_t i = 0;
  const char* end = s.data() + s.size();
  if (auto [p, ec] = std::from_chars(s.data(), end, i); ec == std::errc() && p == end) return i;
  if (s[0] != '+') {
    std::uint64_t u = 0;
    if (auto [p, ec] = std::from_chars(s.data(), end, u); ec == std::errc() && p == end) return u;
  }
  char* stop = nullptr;
  const double d = std::strtod(s.c_str(), &stop);
  if (stop == s.c_str() + s.size() && s.find_first_of("0123456789") != std::string::npos) return d;
  return s;
}

nlohmann::json to_json(const YAML::Node& n) {
  switch (n.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined:
      return nullptr;
    case YAML::NodeType::Scalar:
      return scalar_to_json(n);
    case YAML::NodeType::Sequence: {
      nlohmann::json a = nlohmann::json::array();
      for (const auto& e : n) a.push_back(to_json(e));
      return a;
    }
    case YAML::NodeType::Map: {
      nlohmann::json o = nlohmann::json::object();
      for (const auto& kv : n) o[kv.first.as<std::string>()] = to_json(kv.second);
      return o;
    }
  }
  return nullptr;
}

std::vector<std::string> keys_of(const nlohmann::json& o) {
  std::vector<std::string> out;
  for (auto it = o.begin(); it != o.end(); ++it) out.push_back(it.key());
  return out;
}

std::string join(const std::string& where, const std::string& key) { return where.empty() ? key : where + "." + key; }

}  // namespace

nlohmann::json parse_yaml(const std::string& text, const std::string& origin) {
  try {
    return to_json(YAML::Load(text));
  } catch (const YAML::Exception& e) {
    throw ConfigError(origin + ": " + e.what());
  }
}

nlohmann::json load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_yaml(ss.str(), path);
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::string suggest(const std::string& word, const std::vector<std::string>& candidates) {
  std::string best;
  std::size_t best_d = std::max<std::size_t>(3, word.size() / 3) + 1;
  for (const auto& c : candidates) {
    const std::size_t d = edit_distance(word, c);
    if (d < best_d) best_d = d, best = c;
  }
  return best;
}

nlohmann::json merge(const nlohmann::json& defaults, const nlohmann::json& overrides, const std::string& where) {
  if (defaults.is_null()) return overrides;
  if (!defaults.is_object()) return overrides;
  if (overrides.is_null()) return defaults;
  if (!overrides.is_object()) throw ConfigError("config: '" + (where.empty() ? "<root>" : where) + "' must be a mapping");
  nlohmann::json out = defaults;
  for (auto it = overrides.begin(); it != overrides.end(); ++it) {
    if (!defaults.contains(it.key())) {
      std::string msg = "config: unknown key '" + join(where, it.key()) + "'";
      const std::string s = suggest(it.key(), keys_of(defaults));
      if (!s.empty()) msg += " (did you mean '" + join(where, s) + "'?)";
      throw ConfigError(msg);
    }
    out[it.key()] = merge(defaults[it.key()], it.value(), join(where, it.key()));
  }
  return out;
}

Override parse_assignment(const std::string& text, const std::string& source) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + text + "' is not of the form key=value");
  return {text.substr(0, eq), text.substr(eq + 1), source};
}

void apply_overrides(nlohmann::json& tree, const std::vector<Override>& overrides) {
  std::map<std::string, const Override*> seen;
  for (const auto& o : overrides) {
    const auto [it, fresh] = seen.emplace(o.key, &o);
    if (!fresh && it->second->value != o.value) {
      throw ConfigError("conflicting overrides for '" + o.key + "': " + it->second->source + " vs " + o.source);
    }
  }
  for (const auto& o : overrides) {
    nlohmann::json patch = parse_yaml(o.value, o.source);
    std::vector<std::string> parts;
    std::stringstream ss(o.key);
    for (std::string p; std::getline(ss, p, '.');) parts.push_back(p);
    for (auto p = parts.rbegin(); p != parts.rend(); ++p) patch = nlohmann::json{{*p, patch}};
    tree = merge(tree, patch);
  }
}

}  // namespace team::config
