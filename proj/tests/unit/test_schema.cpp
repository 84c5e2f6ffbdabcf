#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "team/data/dataset.hpp"
#include "team/data/schema.hpp"
#include "team/data/windows.hpp"
#include "team/error.hpp"
#include "team/hash.hpp"
#include "team/rng.hpp"

using namespace team;
using namespace team::data;

namespace {

std::string bundled(const std::string& file) { return std::string(TEAM_DATA_DIR) + "/schemas/" + file; }

const char* kTiny = R"(
name: tiny
label_column: label
classes: [normal, dos]
columns:
  - {name: a, min: 0, max: 100}
  - {name: b}
  - {name: proto, kind: categorical, categories: [tcp, udp]}
  - {name: c}
nonfunctional:
  dos: [b, c]
)";

std::vector<std::string> marked(const FeatureSchema& s, const std::string& type) {
  std::vector<std::string> out;
  const auto& m = s.mask_for(type).columns;
  for (std::size_t k = 0; k < m.size(); ++k) {
    if (m[k]) out.push_back(s.columns[k].name);
  }
  return out;
}

RawTable tiny_table() {
  std::istringstream in(
      "a,b,proto,c,label\n"
      "25,1,tcp,7,normal\n"
      "50,3,udp,7,dos\n"
      "100,5,tcp,7,dos\n");
  return parse_csv(in, parse_schema(kTiny));
}

}  // namespace

TEST_CASE("bundled CIC-IDS2017 Dos mask is exactly its 10 columns") {
  const auto s = load_schema(bundled("cic_ids2017.yaml"));
  CHECK(s.columns.size() == 78);
  const std::vector<std::string> expect = {"Subflow Fwd Packets", "Subflow Fwd Bytes", "Subflow Bwd Packets",
                                           "Subflow Bwd Bytes",   "Active Std",        "Active Max",
                                           "Idle Mean",           "Idle Std",          "Idle Max",
                                           "Idle Min"};
  CHECK(marked(s, "dos") == expect);
  CHECK(marked(s, "web_attack").size() == 9);
  CHECK(marked(s, "patator").size() == 18);
  CHECK(marked(s, "portscan").size() == 19);
  CHECK(marked(s, "ddos").size() == 13);
  CHECK(marked(s, "infiltration_botnet").size() == 16);
  CHECK(s.label_to_class("BENIGN") == s.normal_index());
  CHECK_FALSE(s.label_to_class("Heartbleed").has_value());
  CHECK(s.skip_unknown_labels);
}

TEST_CASE("bundled NSL-KDD schema") {
  const auto s = load_schema(bundled("nsl_kdd.yaml"));
  CHECK(s.columns.size() == 41);
  CHECK_FALSE(s.csv_header);
  CHECK(s.csv_columns.size() == 43);
  CHECK(marked(s, "dos").size() == 10);
  CHECK(marked(s, "u2r_r2l").size() == 9);
  CHECK(s.mask_for("dos").source.find("reconstructed") != std::string::npos);
  CHECK(s.label_to_class("neptune") == s.class_index("dos"));
  CHECK(s.label_to_class("guess_passwd") == s.class_index("u2r_r2l"));
}

TEST_CASE("schema round trips through dump") {
  const auto s = load_schema(bundled("cic_ids2017.yaml"));
  const auto again = parse_schema(dump_schema(s));
  CHECK(dump_schema(again) == dump_schema(s));
  CHECK(again.fingerprint() == s.fingerprint());
}

TEST_CASE("schema errors") {
  SUBCASE("mask length differs from column count") {
    const char* y = R"(
name: bad
label_column: label
classes: [normal, dos]
columns: [a, b, c]
nonfunctional:
  dos: {mask: [1, 0]}
)";
    CHECK_THROWS_AS(parse_schema(y), SchemaError);
  }
  SUBCASE("unknown mask columns are listed") {
    const char* y = R"(
name: bad
label_column: label
classes: [normal, dos]
columns: [a, b]
nonfunctional:
  dos: [a, zz, yy]
)";
    try {
      parse_schema(y);
      FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("zz") != std::string::npos);
      CHECK(msg.find("yy") != std::string::npos);
    }
  }
  SUBCASE("empty mask") {
    const char* y = "name: bad\nlabel_column: label\nclasses: [normal, dos]\ncolumns: [a]\n"
                    "nonfunctional:\n  dos: {mask: [0]}\n";
    CHECK_THROWS_AS(parse_schema(y), SchemaError);
  }
  SUBCASE("normal class missing") {
    const char* y = "name: bad\nlabel_column: label\nclasses: [benign, dos]\ncolumns: [a]\n";
    CHECK_THROWS_AS(parse_schema(y), SchemaError);
  }
  SUBCASE("categorical column marked non-functional") {
    const char* y = "name: bad\nlabel_column: label\nclasses: [normal, dos]\n"
                    "columns: [{name: a, kind: categorical}, b]\nnonfunctional:\n  dos: [a, b]\n";
    CHECK_THROWS_AS(parse_schema(y), SchemaError);
  }
  SUBCASE("missing mask") {
    CHECK_THROWS_AS(parse_schema(kTiny).mask_for("probe"), ConfigError);
  }
}

TEST_CASE("csv ingestion") {
  const auto s = parse_schema(kTiny);
  SUBCASE("unknown labels raise by default") {
    std::istringstream in("a,b,proto,c,label\n1,2,tcp,3,weird\n");
    CHECK_THROWS_AS(parse_csv(in, s), InputError);
  }
  SUBCASE("unknown labels skipped on request") {
    auto s2 = s;
    s2.skip_unknown_labels = true;
    std::istringstream in("a,b,proto,c,label\n1,2,tcp,3,weird\n1,2,tcp,3,dos\n");
    std::size_t skipped = 0;
    const auto t = parse_csv(in, s2, &skipped);
    CHECK(t.rows.size() == 1);
    CHECK(skipped == 1);
  }
  SUBCASE("header names are trimmed and reordered") {
    std::istringstream in(" c , label,a, b ,proto\n3,dos,1,2,udp\n");
    const auto t = parse_csv(in, s);
    REQUIRE(t.rows.size() == 1);
    CHECK(t.rows[0] == std::vector<std::string>{"1", "2", "udp", "3"});
  }
  SUBCASE("missing column") {
    std::istringstream in("a,b,label\n1,2,dos\n");
    CHECK_THROWS_AS(parse_csv(in, s), InputError);
  }
}

TEST_CASE("normalize") {
  const auto s = parse_schema(kTiny);
  const auto raw = tiny_table();
  const auto norm = fit_normalizer(raw, s);
  const auto ds = normalize(raw, s, norm);
  REQUIRE(ds.size() == 3);
  // a, b, proto(tcp, udp, other), c
  CHECK(ds.feature_width == 6);
  CHECK(ds.records[0].features[0] == 0.25);
  CHECK(ds.records[1].features[1] == 0.5);
  SUBCASE("constant column maps to 0") {
    for (const auto& r : ds.records) CHECK(r.features[5] == 0.0);
  }
  SUBCASE("one-hot groups sum to 1 and unseen goes to other") {
    std::istringstream in("a,b,proto,c,label\n10,2,icmp,7,dos\n");
    const auto test = normalize(parse_csv(in, s), s, norm);
    CHECK(test.unseen_categories == 1);
    CHECK(test.records[0].features.segment(2, 3).sum() == 1.0);
    CHECK(test.records[0].features[4] == 1.0);
  }
  SUBCASE("test values outside the training range are clipped") {
    std::istringstream in("a,b,proto,c,label\n150,-4,tcp,7,dos\n");
    const auto test = normalize(parse_csv(in, s), s, norm);
    CHECK(test.clipped == 2);
    CHECK(test.records[0].features[0] == 1.0);
    CHECK(test.records[0].features[1] == 0.0);
  }
  SUBCASE("labels") {
    CHECK(ds.records[0].label == 0);
    CHECK(ds.records[2].label == 1);
  }
}

TEST_CASE("denormalize round trip within 1e-9") {
  const auto s = parse_schema(kTiny);
  Rng rng(11);
  RawTable raw;
  raw.columns = {"a", "b", "proto", "c"};
  for (int k = 0; k < 200; ++k) {
    char a[40], b[40], c[40];
    std::snprintf(a, sizeof a, "%.17g", uniform(rng, 0.0, 100.0));
    std::snprintf(b, sizeof b, "%.17g", uniform(rng, -3e6, 5e7));
    std::snprintf(c, sizeof c, "%.17g", uniform(rng, 1e-5, 2e-5));
    raw.rows.push_back({a, b, (rng() & 1U) ? "tcp" : "udp", c});
    raw.labels.push_back("dos");
  }
  const auto norm = fit_normalizer(raw, s);
  const auto ds = normalize(raw, s, norm);
  for (std::size_t r = 0; r < raw.rows.size(); ++r) {
    const auto back = denormalize(ds.records[r], norm);
    for (std::size_t c : {0, 1, 3}) {
      const double x = std::stod(raw.rows[r][c]);
      const double y = std::stod(back[c]);
      CHECK(std::abs(x - y) <= 1e-9 * std::max(1.0, std::abs(x)));
    }
    CHECK(back[2] == raw.rows[r][2]);
  }
}

TEST_CASE("normalizer sidecar round trip") {
  const auto s = parse_schema(kTiny);
  const auto norm = fit_normalizer(tiny_table(), s);
  const auto again = Normalizer::from_json(norm.to_json());
  CHECK(again.to_json().dump() == norm.to_json().dump());
  CHECK(again.schema_fingerprint == s.fingerprint());
}

TEST_CASE("split and splice") {
  const auto s = parse_schema(kTiny);
  const auto raw = tiny_table();
  const auto norm = fit_normalizer(raw, s);
  const auto ds = normalize(raw, s, norm);

  SUBCASE("categoricals stay functional") {
    const auto m = feature_mask(s, norm, "dos");
    CHECK(m.nonfunctional == std::vector<std::size_t>{1, 5});
    CHECK(m.functional == std::vector<std::size_t>{0, 2, 3, 4});
  }
  SUBCASE("all-true mask") {
    const auto m = feature_mask(std::vector<bool>(6, true));
    const auto sp = split_features(ds.records[1].features, m);
    CHECK(sp.functional.values.size() == 0);
    CHECK(sp.nonfunctional.values == ds.records[1].features);
  }
  SUBCASE("splice reproduces the record bit for bit") {
    const auto sp = split_features(ds.records[2], s, norm, "dos");
    const auto back = splice(sp.functional, sp.nonfunctional);
    CHECK(back == ds.records[2].features);
  }
  SUBCASE("overlap and gaps are rejected") {
    FeaturePart f{Vector::Zero(2), {0, 1}};
    FeaturePart n{Vector::Zero(2), {1, 2}};
    CHECK_THROWS_AS(splice(f, n), UsageError);
    FeaturePart g{Vector::Zero(1), {3}};
    CHECK_THROWS_AS(splice(f, g), UsageError);
  }
}

TEST_CASE("split/splice involution on random records and masks") {
  Rng rng(5);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, 40);
    Vector x(static_cast<Eigen::Index>(n));
    for (Eigen::Index k = 0; k < x.size(); ++k) x[k] = uniform(rng, 0.0, 1.0);
    std::vector<bool> mask(n);
    for (std::size_t k = 0; k < n; ++k) mask[k] = rng() & 1U;
    const auto m = feature_mask(mask);
    const auto sp = split_features(x, m);
    CHECK(sp.functional.values.size() + sp.nonfunctional.values.size() == static_cast<Eigen::Index>(n));
    REQUIRE(splice(sp.functional, sp.nonfunctional) == x);
  }
}

TEST_CASE("CIC-IDS2017 Web Attack split places exactly its 9 columns") {
  const auto s = load_schema(bundled("cic_ids2017.yaml"));
  RawTable raw;
  for (const auto& c : s.columns) raw.columns.push_back(c.name);
  raw.rows.push_back({});
  raw.rows.push_back({});
  for (std::size_t k = 0; k < s.columns.size(); ++k) {
    raw.rows[0].push_back("0");
    raw.rows[1].push_back(std::to_string(k + 1));
  }
  raw.labels = {"BENIGN", "Web Attack - XSS"};
  const auto norm = fit_normalizer(raw, s);
  const auto ds = normalize(raw, s, norm);
  const auto sp = split_features(ds.records[1], s, norm, "web_attack");
  std::set<std::string> names;
  const auto fnames = norm.feature_names(s);
  for (std::size_t idx : sp.nonfunctional.indices) names.insert(fnames[idx]);
  const std::set<std::string> expect = {"Fwd Packet Length Mean", "Bwd Packet Length Mean", "Min Packet Length",
                                        "Max Packet Length",      "Packet Length Mean",     "Packet Length Std",
                                        "Packet Length Variance", "Down/Up Ratio",          "Average Packet Size"};
  CHECK(names == expect);
  CHECK(ds.records[1].label == s.class_index("web_attack"));
  CHECK(splice(sp.functional, sp.nonfunctional) == ds.records[1].features);
}

namespace {

Dataset labeled(const std::vector<int>& labels) {
  Dataset ds;
  ds.feature_width = 1;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    Record r;
    r.features = Vector::Constant(1, static_cast<double>(k));
    r.label = labels[k];
    ds.records.push_back(r);
  }
  return ds;
}

std::string window_digest(const std::vector<TimeStepComposition>& ws) {
  std::string s;
  for (const auto& w : ws) {
    for (const auto& r : w.records()) s += std::to_string(r.features[0]) + ",";
    s += ";";
  }
  return sha256_hex(s);
}

}  // namespace

TEST_CASE("make_windows") {
  std::vector<int> labels;
  for (int k = 0; k < 40; ++k) labels.push_back(k % 5 == 0 ? 0 : 1);  // 32 attack records
  const auto ds = labeled(std::vector<int>(labels.begin(), labels.begin() + 20));  // 16 attack records

  SUBCASE("16 records give 2 disjoint windows") {
    const auto ws = make_windows(ds, 8, 6, 2, 1, 3);
    REQUIRE(ws.size() == 2);
    std::set<double> seen;
    for (const auto& w : ws) {
      CHECK(w.adv_slots.size() == 6);
      CHECK(w.org_slots.size() == 2);
      for (const auto& r : w.records()) {
        CHECK(r.label == 1);
        CHECK(seen.insert(r.features[0]).second);
      }
    }
  }
  SUBCASE("records inside a window keep dataset order") {
    for (const auto& w : make_windows(ds, 8, 6, 2, 1, 9)) {
      const auto rs = w.records();
      for (std::size_t k = 1; k < rs.size(); ++k) CHECK(rs[k - 1].features[0] < rs[k].features[0]);
    }
  }
  SUBCASE("same seed, same stream") {
    const auto big = labeled(labels);
    CHECK(window_digest(make_windows(big, 4, 3, 1, 1, 42)) == window_digest(make_windows(big, 4, 3, 1, 1, 42)));
    CHECK(window_digest(make_windows(big, 4, 3, 1, 1, 42)) != window_digest(make_windows(big, 4, 3, 1, 1, 43)));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(make_windows(ds, 8, 6, 1, 1, 0), ConfigError);
    CHECK_THROWS_AS(make_windows(ds, 8, 6, 2, 0, 0), CountError);
  }
  SUBCASE("stream windows") {
    CHECK(stream_windows(ds, 8).size() == 2);
    CHECK(stream_windows(ds, 20).size() == 1);
  }
}
