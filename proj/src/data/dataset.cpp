#include "team/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <set>

#include "team/error.hpp"

namespace team::data {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& field, const std::string& column, std::size_t row) {
  const std::string t = trim(field);
  if (t.empty()) return std::numeric_limits<double>::quiet_NaN();
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end == t.c_str() || *end != '\0') {
    throw InputError("row " + std::to_string(row) + ", column '" + column + "': '" + t +
                     "' is not a number");
  }
  return v;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool needs_quotes(const std::string& s) {
  return s.find_first_of(",\"\n") != std::string::npos;
}

std::string quote(const std::string& s) {
  if (!needs_quotes(s)) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool in_quotes = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char c = line[k];
    if (in_quotes) {
      if (c == '"') {
        if (k + 1 < line.size() && line[k + 1] == '"') {
          cur += '"';
          ++k;
        } else {
          in_quotes = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

RawTable parse_csv(std::istream& in, const FeatureSchema& schema, std::size_t* skipped) {
  std::vector<std::string> header;
  std::string line;
  std::size_t line_no = 0;
  if (schema.csv_header) {
    if (!std::getline(in, line)) throw InputError("CSV is empty (expected a header line)");
    ++line_no;
    for (auto& h : split_csv_line(line)) header.push_back(trim(h));
  } else {
    header = schema.csv_columns;
  }
  std::map<std::string, std::size_t> pos;
  for (std::size_t k = 0; k < header.size(); ++k) pos.emplace(header[k], k);

  RawTable table;
  std::vector<std::size_t> feature_pos;
  std::string missing;
  for (const auto& c : schema.columns) {
    table.columns.push_back(c.name);
    auto it = pos.find(c.name);
    if (it == pos.end()) {
      missing += (missing.empty() ? "" : ", ") + c.name;
      continue;
    }
    feature_pos.push_back(it->second);
  }
  auto label_it = pos.find(schema.label_column);
  if (label_it == pos.end()) missing += (missing.empty() ? "" : ", ") + schema.label_column;
  if (!missing.empty()) throw InputError("CSV lacks schema columns: " + missing);
  const std::size_t label_pos = label_it->second;

  std::size_t dropped = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() < header.size()) {
      throw InputError("CSV line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                       " fields, expected " + std::to_string(header.size()));
    }
    const std::string label = trim(fields[label_pos]);
    if (!schema.label_to_class(label)) {
      if (schema.skip_unknown_labels) {
        ++dropped;
        continue;
      }
      throw InputError("CSV line " + std::to_string(line_no) + ": label '" + label +
                       "' maps to no class of schema '" + schema.name + "'");
    }
    std::vector<std::string> row;
    row.reserve(feature_pos.size());
    for (std::size_t p : feature_pos) row.push_back(std::move(fields[p]));
    table.rows.push_back(std::move(row));
    table.labels.push_back(label);
  }
  if (skipped) *skipped = dropped;
  return table;
}

RawTable read_csv(const std::string& path, const FeatureSchema& schema, std::size_t* skipped) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open CSV '" + path + "'");
  return parse_csv(in, schema, skipped);
}

void write_csv(const std::string& path, const RawTable& table, const FeatureSchema& schema) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write CSV '" + path + "'");
  for (std::size_t k = 0; k < table.columns.size(); ++k) out << quote(table.columns[k]) << ',';
  out << quote(schema.label_column) << '\n';
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    for (const auto& v : table.rows[r]) out << quote(v) << ',';
    out << quote(table.labels[r]) << '\n';
  }
}

std::size_t Normalizer::feature_width() const {
  std::size_t w = 0;
  for (std::size_t k = 0; k < kinds.size(); ++k) {
    w += kinds[k] == ColumnKind::categorical ? columns[k].categories.size() + 1 : 1;
  }
  return w;
}

std::vector<std::size_t> Normalizer::offsets() const {
  std::vector<std::size_t> out;
  std::size_t w = 0;
  for (std::size_t k = 0; k < kinds.size(); ++k) {
    out.push_back(w);
    w += kinds[k] == ColumnKind::categorical ? columns[k].categories.size() + 1 : 1;
  }
  return out;
}

std::vector<std::string> Normalizer::feature_names(const FeatureSchema& schema) const {
  std::vector<std::string> out;
  for (std::size_t k = 0; k < kinds.size(); ++k) {
    const auto& name = schema.columns.at(k).name;
    if (kinds[k] == ColumnKind::continuous) {
      out.push_back(name);
    } else {
      for (const auto& c : columns[k].categories) out.push_back(name + "=" + c);
      out.push_back(name + "=<other>");
    }
  }
  return out;
}

nlohmann::json Normalizer::to_json() const {
  nlohmann::json cols = nlohmann::json::array();
  for (std::size_t k = 0; k < kinds.size(); ++k) {
    nlohmann::json c;
    if (kinds[k] == ColumnKind::continuous) {
      c["kind"] = "continuous";
      c["min"] = columns[k].min;
      c["max"] = columns[k].max;
    } else {
      c["kind"] = "categorical";
      c["categories"] = columns[k].categories;
    }
    cols.push_back(std::move(c));
  }
  return {{"format", "team-normalizer"}, {"version", 1}, {"schema_fingerprint", schema_fingerprint},
          {"columns", std::move(cols)}};
}

Normalizer Normalizer::from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "team-normalizer" || j.at("version") != 1) {
      throw IntegrityError("normalizer: unsupported format or version");
    }
    Normalizer n;
    n.schema_fingerprint = j.at("schema_fingerprint").get<std::string>();
    for (const auto& c : j.at("columns")) {
      ColumnStats st;
      if (c.at("kind") == "continuous") {
        n.kinds.push_back(ColumnKind::continuous);
        st.min = c.at("min").get<double>();
        st.max = c.at("max").get<double>();
      } else {
        n.kinds.push_back(ColumnKind::categorical);
        st.categories = c.at("categories").get<std::vector<std::string>>();
      }
      n.columns.push_back(std::move(st));
    }
    return n;
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(std::string("normalizer: malformed JSON: ") + e.what());
  }
}

void Normalizer::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write normalizer '" + path + "'");
  out << to_json().dump(2) << '\n';
}

Normalizer Normalizer::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open normalizer '" + path + "'");
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw IntegrityError("normalizer '" + path + "': " + e.what());
  }
}

Normalizer fit_normalizer(const RawTable& train, const FeatureSchema& schema) {
  Normalizer n;
  n.schema_fingerprint = schema.fingerprint();
  for (std::size_t k = 0; k < schema.columns.size(); ++k) {
    const Column& col = schema.columns[k];
    n.kinds.push_back(col.kind);
    ColumnStats st;
    if (col.kind == ColumnKind::categorical) {
      st.categories = col.categories;
      if (st.categories.empty()) {
        std::set<std::string> seen;
        for (const auto& row : train.rows) seen.insert(trim(row[k]));
        st.categories.assign(seen.begin(), seen.end());
      }
    } else {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -std::numeric_limits<double>::infinity();
      if (!col.min || !col.max) {
        for (std::size_t r = 0; r < train.rows.size(); ++r) {
          const double v = parse_number(train.rows[r][k], col.name, r);
          if (!std::isfinite(v)) continue;
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
        if (!std::isfinite(lo)) lo = hi = 0.0;
      }
      st.min = col.min ? *col.min : lo;
      st.max = col.max ? *col.max : hi;
    }
    n.columns.push_back(std::move(st));
  }
  return n;
}

Dataset normalize(const RawTable& raw, const FeatureSchema& schema, const Normalizer& norm) {
  if (norm.kinds.size() != schema.columns.size()) {
    throw ConfigError("normalizer has " + std::to_string(norm.kinds.size()) + " columns, schema '" +
                      schema.name + "' has " + std::to_string(schema.columns.size()));
  }
  Dataset ds;
  ds.feature_width = norm.feature_width();
  const auto offs = norm.offsets();
  ds.records.reserve(raw.rows.size());
  for (std::size_t r = 0; r < raw.rows.size(); ++r) {
    Record rec;
    rec.features = Vector::Zero(static_cast<Eigen::Index>(ds.feature_width));
    const auto cls = schema.label_to_class(trim(raw.labels[r]));
    if (!cls) throw InputError("row " + std::to_string(r) + ": unknown label '" + raw.labels[r] + "'");
    rec.label = *cls;
    for (std::size_t k = 0; k < norm.kinds.size(); ++k) {
      const auto off = static_cast<Eigen::Index>(offs[k]);
      const ColumnStats& st = norm.columns[k];
      if (norm.kinds[k] == ColumnKind::categorical) {
        const std::string v = trim(raw.rows[r][k]);
        auto it = std::find(st.categories.begin(), st.categories.end(), v);
        if (it == st.categories.end()) {
          ++ds.unseen_categories;
          rec.features(off + static_cast<Eigen::Index>(st.categories.size())) = 1.0;
        } else {
          rec.features(off + (it - st.categories.begin())) = 1.0;
        }
        continue;
      }
      const double v = parse_number(raw.rows[r][k], schema.columns[k].name, r);
      double x = 0.0;
      if (std::isnan(v)) {
        x = 0.0;
      } else if (st.max > st.min) {
        x = (v - st.min) / (st.max - st.min);
      }
      if (x < 0.0 || x > 1.0) {
        ++ds.clipped;
        x = std::clamp(x, 0.0, 1.0);
      }
      rec.features(off) = x;
    }
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

std::vector<std::string> denormalize(const Record& r, const Normalizer& norm) {
  std::vector<std::string> out;
  const auto offs = norm.offsets();
  for (std::size_t k = 0; k < norm.kinds.size(); ++k) {
    const auto off = static_cast<Eigen::Index>(offs[k]);
    const ColumnStats& st = norm.columns[k];
    if (norm.kinds[k] == ColumnKind::categorical) {
      const auto n = static_cast<Eigen::Index>(st.categories.size());
      Eigen::Index best = 0;
      for (Eigen::Index q = 1; q <= n; ++q) {
        if (r.features(off + q) > r.features(off + best)) best = q;
      }
      out.push_back(best < n ? st.categories[static_cast<std::size_t>(best)] : "other");
    } else {
      out.push_back(format_double(st.min + r.features(off) * (st.max - st.min)));
    }
  }
  return out;
}

FeatureMask feature_mask(const std::vector<bool>& nonfunctional_features) {
  FeatureMask m;
  m.width = nonfunctional_features.size();
  for (std::size_t k = 0; k < m.width; ++k) {
    (nonfunctional_features[k] ? m.nonfunctional : m.functional).push_back(k);
  }
  return m;
}

FeatureMask feature_mask(const FeatureSchema& schema, const Normalizer& norm,
                         const std::string& attack_type) {
  const NonfunctionalMask& cols = schema.mask_for(attack_type);
  if (cols.columns.size() != norm.kinds.size()) {
    throw SchemaError("mask '" + attack_type + "' does not match the normalizer's column count");
  }
  std::vector<bool> features(norm.feature_width(), false);
  const auto offs = norm.offsets();
  for (std::size_t k = 0; k < norm.kinds.size(); ++k) {
    if (cols.columns[k] && norm.kinds[k] == ColumnKind::continuous) features[offs[k]] = true;
  }
  return feature_mask(features);
}

SplitRecord split_features(const Vector& features, const FeatureMask& mask) {
  if (static_cast<std::size_t>(features.size()) != mask.width) {
    throw UsageError("split_features: record width " + std::to_string(features.size()) +
                     " vs mask width " + std::to_string(mask.width));
  }
  auto gather = [&](const std::vector<std::size_t>& idx) {
    FeaturePart p;
    p.indices = idx;
    p.values.resize(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) {
      p.values(static_cast<Eigen::Index>(k)) = features(static_cast<Eigen::Index>(idx[k]));
    }
    return p;
  };
  return {gather(mask.functional), gather(mask.nonfunctional)};
}

SplitRecord split_features(const Record& r, const FeatureSchema& schema, const Normalizer& norm,
                           const std::string& attack_type) {
  return split_features(r.features, feature_mask(schema, norm, attack_type));
}

Vector splice(const FeaturePart& functional, const FeaturePart& nonfunctional) {
  for (const FeaturePart* p : {&functional, &nonfunctional}) {
    if (static_cast<std::size_t>(p->values.size()) != p->indices.size()) {
      throw UsageError("splice: part has " + std::to_string(p->values.size()) + " values but " +
                       std::to_string(p->indices.size()) + " indices");
    }
  }
  const std::size_t n = functional.indices.size() + nonfunctional.indices.size();
  std::vector<char> seen(n, 0);
  Vector out(static_cast<Eigen::Index>(n));
  for (const FeaturePart* p : {&functional, &nonfunctional}) {
    for (std::size_t k = 0; k < p->indices.size(); ++k) {
      const std::size_t i = p->indices[k];
      if (i >= n) throw UsageError("splice: index " + std::to_string(i) + " outside 0.." + std::to_string(n - 1));
      if (seen[i]) throw UsageError("splice: index " + std::to_string(i) + " appears in both parts");
      seen[i] = 1;
      out(static_cast<Eigen::Index>(i)) = p->values(static_cast<Eigen::Index>(k));
    }
  }
  return out;
}

}  // namespace team::data
