#include "team/data/synthetic.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "team/error.hpp"
#include "team/rng.hpp"

namespace team::data {

void SyntheticConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("synthetic config: " + m); };
  if (class_names.size() < 2) fail("need at least two classes");
  if (features == 0) fail("features must be positive");
  if (nonfunctional == 0 || nonfunctional > features) fail("nonfunctional must be in [1, features]");
  if (records == 0) fail("records must be positive");
  if (session_min == 0 || session_max < session_min) fail("need 0 < session_min <= session_max");
  if (!(normal_share >= 0.0 && normal_share <= 1.0)) fail("normal_share must be in [0,1]");
  if (!(noise >= 0.0)) fail("noise must be >= 0");
  if (!(coupling >= 0.0 && coupling < 1.0)) fail("coupling must be in [0,1)");
  for (const auto& h : high_temporal) {
    if (std::find(class_names.begin() + 1, class_names.end(), h) == class_names.end()) {
      fail("high_temporal class '" + h + "' is not an attack class");
    }
  }
}

SyntheticConfig synthetic_config_from_yaml(const std::string& yaml_text) {
  SyntheticConfig c;
  try {
    const YAML::Node n = YAML::Load(yaml_text);
    if (n["name"]) c.name = n["name"].as<std::string>();
    if (n["class_names"]) c.class_names = n["class_names"].as<std::vector<std::string>>();
    if (n["high_temporal"]) c.high_temporal = n["high_temporal"].as<std::vector<std::string>>();
    if (n["features"]) c.features = n["features"].as<std::size_t>();
    if (n["nonfunctional"]) c.nonfunctional = n["nonfunctional"].as<std::size_t>();
    if (n["records"]) c.records = n["records"].as<std::size_t>();
    if (n["session_min"]) c.session_min = n["session_min"].as<std::size_t>();
    if (n["session_max"]) c.session_max = n["session_max"].as<std::size_t>();
    if (n["normal_share"]) c.normal_share = n["normal_share"].as<double>();
    if (n["separation"]) c.separation = n["separation"].as<double>();
    if (n["noise"]) c.noise = n["noise"].as<double>();
    if (n["coupling"]) c.coupling = n["coupling"].as<double>();
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("synthetic config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string synthetic_config_to_yaml(const SyntheticConfig& c) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << c.name;
  out << YAML::Key << "class_names" << YAML::Value << YAML::Flow << c.class_names;
  out << YAML::Key << "high_temporal" << YAML::Value << YAML::Flow << c.high_temporal;
  out << YAML::Key << "features" << YAML::Value << c.features;
  out << YAML::Key << "nonfunctional" << YAML::Value << c.nonfunctional;
  out << YAML::Key << "records" << YAML::Value << c.records;
  out << YAML::Key << "session_min" << YAML::Value << c.session_min;
  out << YAML::Key << "session_max" << YAML::Value << c.session_max;
  out << YAML::Key << "normal_share" << YAML::Value << c.normal_share;
  out << YAML::Key << "separation" << YAML::Value << c.separation;
  out << YAML::Key << "noise" << YAML::Value << c.noise;
  out << YAML::Key << "coupling" << YAML::Value << c.coupling;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

SyntheticData gen_synthetic(const SyntheticConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  const std::size_t d = cfg.features;
  const std::size_t n_classes = cfg.class_names.size();

  SyntheticData out;
  FeatureSchema& s = out.schema;
  s.name = cfg.name;
  s.label_column = "label";
  s.class_names = cfg.class_names;
  s.normal_class = cfg.class_names.front();
  for (std::size_t j = 0; j < d; ++j) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "f%02zu", j);
    s.columns.push_back(Column{buf, ColumnKind::continuous, 0.0, 1.0, {}});
  }

  // Class means.
  std::vector<std::vector<double>> mean(n_classes, std::vector<double>(d));
  for (std::size_t j = 0; j < d; ++j) mean[0][j] = uniform(rng, 0.3, 0.7);
  for (std::size_t c = 1; c < n_classes; ++c) {
    for (std::size_t j = 0; j < d; ++j) {
      const double sign = (rng() & 1U) ? 1.0 : -1.0;
      mean[c][j] = mean[0][j] + sign * cfg.separation;
    }
  }

  // Non-functional columns per attack type.
  for (std::size_t c = 1; c < n_classes; ++c) {
    std::vector<std::size_t> cols(d);
    std::iota(cols.begin(), cols.end(), 0);
    team::shuffle(cols.begin(), cols.end(), rng);
    NonfunctionalMask m;
    m.columns.assign(d, false);
    for (std::size_t k = 0; k < cfg.nonfunctional; ++k) m.columns[cols[k]] = true;
    m.source = "synthetic: random subset of " + std::to_string(cfg.nonfunctional) + " columns";
    s.nonfunctional[cfg.class_names[c]] = std::move(m);
  }

  std::vector<bool> temporal(n_classes, false);
  for (const auto& h : cfg.high_temporal) {
    for (std::size_t c = 1; c < n_classes; ++c) {
      if (cfg.class_names[c] == h) temporal[c] = true;
    }
  }

  out.table.columns.reserve(d);
  for (const auto& c : s.columns) out.table.columns.push_back(c.name);

  const double innovation = std::sqrt(1.0 - cfg.coupling * cfg.coupling);
  std::vector<double> drift(d);
  char buf[40];
  while (out.table.rows.size() < cfg.records) {
    std::size_t cls = 0;
    if (uniform(rng, 0.0, 1.0) >= cfg.normal_share) cls = 1 + uniform_index(rng, n_classes - 1);
    const std::size_t len = cfg.session_min + uniform_index(rng, cfg.session_max - cfg.session_min + 1);
    for (std::size_t j = 0; j < d; ++j) drift[j] = cfg.noise * standard_normal(rng);
    for (std::size_t t = 0; t < len && out.table.rows.size() < cfg.records; ++t) {
      std::vector<std::string> row;
      row.reserve(d);
      for (std::size_t j = 0; j < d; ++j) {
        double e = 0.0;
        if (temporal[cls]) {
          if (t > 0) drift[j] = cfg.coupling * drift[j] + innovation * cfg.noise * standard_normal(rng);
          e = drift[j];
        } else {
          e = cfg.noise * standard_normal(rng);
        }
        const double v = std::clamp(mean[cls][j] + e, 0.0, 1.0);
        std::snprintf(buf, sizeof buf, "%.17g", v);
        row.emplace_back(buf);
      }
      out.table.rows.push_back(std::move(row));
      out.table.labels.push_back(cfg.class_names[cls]);
    }
  }
  validate(s);
  return out;
}

}  // namespace team::data
