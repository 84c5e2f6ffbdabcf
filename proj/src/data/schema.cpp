#include "team/data/schema.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>

#include "team/error.hpp"
#include "team/hash.hpp"

namespace team::data {

int FeatureSchema::normal_index() const { return class_index(normal_class); }

int FeatureSchema::class_index(const std::string& class_name) const {
  for (std::size_t k = 0; k < class_names.size(); ++k) {
    if (class_names[k] == class_name) return static_cast<int>(k);
  }
  throw ConfigError("schema '" + name + "': unknown class '" + class_name + "'");
}

std::optional<int> FeatureSchema::label_to_class(const std::string& raw_label) const {
  std::string cls = raw_label;
  if (auto it = label_map.find(raw_label); it != label_map.end()) cls = it->second;
  for (std::size_t k = 0; k < class_names.size(); ++k) {
    if (class_names[k] == cls) return static_cast<int>(k);
  }
  return std::nullopt;
}

const NonfunctionalMask& FeatureSchema::mask_for(const std::string& attack_type) const {
  auto it = nonfunctional.find(attack_type);
  if (it == nonfunctional.end()) {
    throw ConfigError("schema '" + name + "' has no non-functional mask for attack type '" +
                      attack_type + "'");
  }
  return it->second;
}

std::vector<std::string> FeatureSchema::attack_types() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : nonfunctional) out.push_back(k);
  return out;
}

std::string FeatureSchema::fingerprint() const { return sha256_hex(dump_schema(*this)); }

void validate(const FeatureSchema& s) {
  auto fail = [&](const std::string& what) {
    throw SchemaError("schema '" + s.name + "': " + what);
  };
  if (s.columns.empty()) fail("no feature columns");
  if (s.label_column.empty()) fail("label_column missing");
  std::set<std::string> names;
  for (const auto& c : s.columns) {
    if (c.name.empty()) fail("column with empty name");
    if (!names.insert(c.name).second) fail("duplicate column '" + c.name + "'");
    if (c.kind == ColumnKind::continuous && c.min && c.max && *c.max < *c.min) {
      fail("column '" + c.name + "' has max < min");
    }
  }
  if (names.count(s.label_column)) fail("label column '" + s.label_column + "' is also a feature");
  if (s.class_names.size() < 2) fail("need at least two classes");
  std::set<std::string> classes(s.class_names.begin(), s.class_names.end());
  if (classes.size() != s.class_names.size()) fail("duplicate class names");
  if (!classes.count(s.normal_class)) fail("normal class '" + s.normal_class + "' not in class list");
  for (const auto& [raw, cls] : s.label_map) {
    if (!classes.count(cls)) fail("label_map sends '" + raw + "' to unknown class '" + cls + "'");
  }
  if (!s.csv_header) {
    std::set<std::string> file_cols(s.csv_columns.begin(), s.csv_columns.end());
    std::string missing;
    for (const auto& c : s.columns) {
      if (!file_cols.count(c.name)) missing += (missing.empty() ? "" : ", ") + c.name;
    }
    if (!file_cols.count(s.label_column)) missing += (missing.empty() ? "" : ", ") + s.label_column;
    if (!missing.empty()) fail("csv_columns is missing: " + missing);
  }
  for (const auto& [type, mask] : s.nonfunctional) {
    if (!classes.count(type)) fail("mask for unknown class '" + type + "'");
    if (type == s.normal_class) fail("the normal class cannot carry a non-functional mask");
    if (mask.columns.size() != s.columns.size()) {
      fail("mask '" + type + "' has length " + std::to_string(mask.columns.size()) + " but there are " +
           std::to_string(s.columns.size()) + " columns");
    }
    std::string categorical;
    bool any = false;
    for (std::size_t k = 0; k < mask.columns.size(); ++k) {
      if (!mask.columns[k]) continue;
      any = true;
      if (s.columns[k].kind == ColumnKind::categorical) {
        categorical += (categorical.empty() ? "" : ", ") + s.columns[k].name;
      }
    }
    if (!any) fail("mask '" + type + "' marks no column non-functional");
    if (!categorical.empty()) {
      fail("mask '" + type + "' marks categorical columns non-functional: " + categorical);
    }
  }
}

namespace {

template <typename T>
T get_or(const YAML::Node& n, const char* key, T fallback) {
  return n[key] ? n[key].as<T>() : fallback;
}

NonfunctionalMask parse_mask(const std::string& type, const YAML::Node& node,
                             const std::vector<Column>& columns, const std::string& schema_name) {
  NonfunctionalMask mask;
  if (node.IsSequence()) {
    // shorthand: a plain list of column names
    YAML::Node wrapped;
    wrapped["columns"] = node;
    return parse_mask(type, wrapped, columns, schema_name);
  }
  mask.source = get_or<std::string>(node, "source", "");
  if (node["mask"]) {
    for (const auto& v : node["mask"]) mask.columns.push_back(v.as<int>() != 0);
    return mask;
  }
  if (!node["columns"]) {
    throw SchemaError("schema '" + schema_name + "': mask '" + type + "' needs 'columns' or 'mask'");
  }
  mask.columns.assign(columns.size(), false);
  std::string unknown;
  for (const auto& v : node["columns"]) {
    const auto col = v.as<std::string>();
    bool found = false;
    for (std::size_t k = 0; k < columns.size(); ++k) {
      if (columns[k].name == col) {
        mask.columns[k] = true;
        found = true;
      }
    }
    if (!found) unknown += (unknown.empty() ? "" : ", ") + col;
  }
  if (!unknown.empty()) {
    throw SchemaError("schema '" + schema_name + "': mask '" + type + "' names unknown columns: " + unknown);
  }
  return mask;
}

}  // namespace

FeatureSchema parse_schema(const std::string& yaml_text) {
  FeatureSchema s;
  try {
    const YAML::Node root = YAML::Load(yaml_text);
    s.name = get_or<std::string>(root, "name", "unnamed");
    s.label_column = get_or<std::string>(root, "label_column", "");
    s.normal_class = get_or<std::string>(root, "normal_class", "normal");
    s.csv_header = get_or<bool>(root, "csv_header", true);
    s.skip_unknown_labels = get_or<std::string>(root, "unknown_labels", "error") == "skip";
    if (root["classes"]) s.class_names = root["classes"].as<std::vector<std::string>>();
    if (root["csv_columns"]) s.csv_columns = root["csv_columns"].as<std::vector<std::string>>();
    if (root["label_map"]) {
      for (const auto& kv : root["label_map"]) {
        const auto cls = kv.second.as<std::string>();
        if (kv.first.IsSequence()) {
          for (const auto& raw : kv.first) s.label_map[raw.as<std::string>()] = cls;
        } else {
          s.label_map[kv.first.as<std::string>()] = cls;
        }
      }
    }
    for (const auto& c : root["columns"]) {
      Column col;
      if (c.IsScalar()) {
        col.name = c.as<std::string>();
      } else {
        col.name = c["name"].as<std::string>();
        const auto kind = get_or<std::string>(c, "kind", "continuous");
        if (kind == "categorical") {
          col.kind = ColumnKind::categorical;
        } else if (kind != "continuous") {
          throw SchemaError("column '" + col.name + "': unknown kind '" + kind + "'");
        }
        if (c["min"]) col.min = c["min"].as<double>();
        if (c["max"]) col.max = c["max"].as<double>();
        if (c["categories"]) col.categories = c["categories"].as<std::vector<std::string>>();
      }
      s.columns.push_back(std::move(col));
    }
    if (root["nonfunctional"]) {
      for (const auto& kv : root["nonfunctional"]) {
        const auto type = kv.first.as<std::string>();
        s.nonfunctional[type] = parse_mask(type, kv.second, s.columns, s.name);
      }
    }
  } catch (const YAML::Exception& e) {
    throw SchemaError(std::string("schema parse error: ") + e.what());
  }
  validate(s);
  return s;
}

FeatureSchema load_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open schema file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_schema(ss.str());
}

std::string dump_schema(const FeatureSchema& s) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << s.name;
  out << YAML::Key << "label_column" << YAML::Value << s.label_column;
  out << YAML::Key << "classes" << YAML::Value << YAML::Flow << s.class_names;
  out << YAML::Key << "normal_class" << YAML::Value << s.normal_class;
  out << YAML::Key << "csv_header" << YAML::Value << s.csv_header;
  out << YAML::Key << "unknown_labels" << YAML::Value << (s.skip_unknown_labels ? "skip" : "error");
  if (!s.csv_columns.empty()) {
    out << YAML::Key << "csv_columns" << YAML::Value << YAML::Flow << s.csv_columns;
  }
  if (!s.label_map.empty()) {
    out << YAML::Key << "label_map" << YAML::Value << YAML::BeginMap;
    for (const auto& [raw, cls] : s.label_map) out << YAML::Key << raw << YAML::Value << cls;
    out << YAML::EndMap;
  }
  out << YAML::Key << "columns" << YAML::Value << YAML::BeginSeq;
  for (const auto& c : s.columns) {
    out << YAML::Flow << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << c.name;
    out << YAML::Key << "kind" << YAML::Value
        << (c.kind == ColumnKind::categorical ? "categorical" : "continuous");
    if (c.min) out << YAML::Key << "min" << YAML::Value << *c.min;
    if (c.max) out << YAML::Key << "max" << YAML::Value << *c.max;
    if (!c.categories.empty()) out << YAML::Key << "categories" << YAML::Value << YAML::Flow << c.categories;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::Key << "nonfunctional" << YAML::Value << YAML::BeginMap;
  for (const auto& [type, mask] : s.nonfunctional) {
    out << YAML::Key << type << YAML::Value << YAML::BeginMap;
    if (!mask.source.empty()) out << YAML::Key << "source" << YAML::Value << mask.source;
    out << YAML::Key << "columns" << YAML::Value << YAML::BeginSeq;
    for (std::size_t k = 0; k < mask.columns.size(); ++k) {
      if (mask.columns[k]) out << s.columns[k].name;
    }
    out << YAML::EndSeq << YAML::EndMap;
  }
  out << YAML::EndMap;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace team::data
