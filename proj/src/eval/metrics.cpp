#include "team/eval/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "team/error.hpp"

namespace team::eval {

double Count::percent() const {
  if (evaluated == 0) return 0.0;
  return 100.0 * static_cast<double>(misjudged) / static_cast<double>(evaluated);
}

Count& Count::operator+=(const Count& o) {
  evaluated += o.evaluated;
  misjudged += o.misjudged;
  return *this;
}

nlohmann::json Count::to_json() const {
  return {{"evaluated", evaluated}, {"misjudged", misjudged}, {"percent", percent()}};
}

Count Count::from_json(const nlohmann::json& j) {
  Count c;
  c.evaluated = j.at("evaluated").get<std::size_t>();
  c.misjudged = j.at("misjudged").get<std::size_t>();
  if (c.misjudged > c.evaluated) throw InputError("report: misjudged exceeds evaluated");
  return c;
}

namespace {

std::vector<data::Window> adversarial_records(const std::vector<attack::AdversarialWindow>& ws) {
  std::vector<data::Window> out;
  out.reserve(ws.size());
  for (const auto& w : ws) out.push_back(w.records);
  return out;
}

std::vector<data::Window> original_records(const std::vector<attack::AdversarialWindow>& ws) {
  std::vector<data::Window> out;
  out.reserve(ws.size());
  for (const auto& w : ws) out.push_back(w.original);
  return out;
}

void check_uniform(const std::vector<attack::AdversarialWindow>& ws) {
  for (const auto& w : ws) {
    if (w.records.size() != w.tags.size() || w.original.size() != w.records.size()) {
      throw UsageError("eval: window records, originals and tags differ in length");
    }
    if (w.records.size() != ws.front().records.size()) throw UsageError("eval: windows differ in length");
  }
}

// Index of the first OE after the AE prefix, or the window length if none.
std::size_t prefix_end(const attack::AdversarialWindow& w) {
  std::size_t t = 0;
  while (t < w.tags.size() && w.tags[t] == attack::Provenance::ae) ++t;
  return t;
}

NextMoment next_moment_from(const std::vector<attack::AdversarialWindow>& ws,
                            const std::vector<models::Prediction>& adv, const std::vector<models::Prediction>& org,
                            int normal) {
  NextMoment nm;
  for (std::size_t k = 0; k < ws.size(); ++k) {
    const std::size_t p = prefix_end(ws[k]);
    if (p + 2 > ws[k].tags.size() || ws[k].tags[p + 1] != attack::Provenance::oe) {
      throw ConfigError("eval: MAR2 needs at least two OE records after the AE prefix (window " +
                        std::to_string(k) + ")");
    }
    auto bump = [&](Count& c, int label) {
      ++c.evaluated;
      c.misjudged += label == normal;
    };
    bump(nm.mar1, adv[k].labels[p]);
    bump(nm.mar2, adv[k].labels[p + 1]);
    bump(nm.base_mar1, org[k].labels[p]);
    bump(nm.base_mar2, org[k].labels[p + 1]);
  }
  return nm;
}

}  // namespace

Count compute_mar(const models::ClassifierModel& target, const std::vector<data::Window>& windows, int attack_type) {
  Count c;
  for (const auto& w : windows) {
    for (const auto& r : w) {
      if (r.label != attack_type) throw InputError("compute_mar: window holds a record that is not of the attack type");
    }
  }
  const auto preds = models::predict_windows(target, windows);
  for (const auto& p : preds) {
    for (int l : p.labels) {
      ++c.evaluated;
      c.misjudged += l == target.normal_class;
    }
  }
  if (c.evaluated == 0) throw CountError("compute_mar: no records to evaluate");
  return c;
}

Count compute_asr(const models::ClassifierModel& target, const std::vector<attack::AdversarialWindow>& windows) {
  check_uniform(windows);
  const auto preds = models::predict_windows(target, adversarial_records(windows));
  Count c;
  for (std::size_t k = 0; k < windows.size(); ++k) {
    for (std::size_t t = 0; t < windows[k].tags.size(); ++t) {
      if (windows[k].tags[t] != attack::Provenance::ae) continue;
      ++c.evaluated;
      c.misjudged += preds[k].labels[t] == target.normal_class;
    }
  }
  if (c.evaluated == 0) throw UsageError("compute_asr: no record carries an AE tag");
  return c;
}

NextMoment next_moment_eval(const models::ClassifierModel& target,
                            const std::vector<attack::AdversarialWindow>& windows) {
  check_uniform(windows);
  if (windows.empty()) throw CountError("next_moment_eval: no windows");
  const auto adv = models::predict_windows(target, adversarial_records(windows));
  const auto org = models::predict_windows(target, original_records(windows));
  return next_moment_from(windows, adv, org, target.normal_class);
}

std::string ReportCell::key() const { return attack_type + "/" + method + "/" + surrogate + "/" + target; }

nlohmann::json ReportCell::to_json() const {
  return {{"attack_type", attack_type}, {"method", method},       {"surrogate", surrogate},
          {"target", target},           {"white_box", white_box}, {"mar", mar.to_json()},
          {"asr", asr.to_json()},       {"mar1", mar1.to_json()}, {"mar2", mar2.to_json()},
          {"base_mar1", base_mar1.to_json()}, {"base_mar2", base_mar2.to_json()}};
}

ReportCell ReportCell::from_json(const nlohmann::json& j) {
  ReportCell c;
  c.attack_type = j.at("attack_type").get<std::string>();
  c.method = j.at("method").get<std::string>();
  c.surrogate = j.at("surrogate").get<std::string>();
  c.target = j.at("target").get<std::string>();
  c.white_box = j.at("white_box").get<bool>();
  c.mar = Count::from_json(j.at("mar"));
  c.asr = Count::from_json(j.at("asr"));
  c.mar1 = Count::from_json(j.at("mar1"));
  c.mar2 = Count::from_json(j.at("mar2"));
  c.base_mar1 = Count::from_json(j.at("base_mar1"));
  c.base_mar2 = Count::from_json(j.at("base_mar2"));
  return c;
}

CellEvaluation evaluate_windows(const models::ClassifierModel& target,
                                const std::vector<attack::AdversarialWindow>& windows, const std::string& attack_type,
                                const std::string& method, const std::string& surrogate) {
  if (windows.empty()) throw CountError("evaluate: no windows");
  check_uniform(windows);
  const auto adv = models::predict_windows(target, adversarial_records(windows));
  const auto org = models::predict_windows(target, original_records(windows));
  const int normal = target.normal_class;
  const auto& names = target.class_names;

  CellEvaluation ev;
  ReportCell& c = ev.cell;
  c.attack_type = attack_type;
  c.method = method;
  c.surrogate = surrogate;
  c.target = rnn::to_string(target.cell.kind());
  c.white_box = surrogate == c.target;
  bool any_ae = false;
  for (std::size_t k = 0; k < windows.size(); ++k) {
    const auto& w = windows[k];
    for (std::size_t t = 0; t < w.records.size(); ++t) {
      ++c.mar.evaluated;
      c.mar.misjudged += org[k].labels[t] == normal;
      if (w.tags[t] == attack::Provenance::ae) {
        any_ae = true;
        ++c.asr.evaluated;
        c.asr.misjudged += adv[k].labels[t] == normal;
      }
      ev.log.push_back({k, t, w.tags[t], names.at(static_cast<std::size_t>(w.original[t].label)),
                        names.at(static_cast<std::size_t>(adv[k].labels[t])),
                        names.at(static_cast<std::size_t>(org[k].labels[t]))});
    }
  }
  if (!any_ae) throw UsageError("evaluate: no record carries an AE tag");
  const std::size_t p = prefix_end(windows.front());
  if (p + 2 <= windows.front().tags.size()) {
    const auto nm = next_moment_from(windows, adv, org, normal);
    c.mar1 = nm.mar1;
    c.mar2 = nm.mar2;
    c.base_mar1 = nm.base_mar1;
    c.base_mar2 = nm.base_mar2;
  }
  return ev;
}

std::vector<CellEvaluation> transfer_matrix(const std::vector<attack::AttackArtifact>& artifacts,
                                            const std::vector<models::ClassifierModel>& targets,
                                            const std::vector<data::TimeStepComposition>& windows) {
  if (artifacts.empty() || targets.empty()) throw UsageError("transfer: need at least one artifact and one target");
  const std::string& fp = targets.front().schema_fingerprint;
  for (const auto& t : targets) {
    if (t.schema_fingerprint != fp) throw UsageError("transfer: targets were trained under different schemas");
  }
  std::vector<CellEvaluation> out;
  for (const auto& a : artifacts) {
    if (a.schema_fingerprint != fp) {
      throw UsageError("transfer: artifact for " + a.config.attack_type + " (surrogate " + a.surrogate_cell +
                       ") was built under a different schema than the targets");
    }
    const auto adv = attack::team_generate(a, windows);
    for (const auto& t : targets) out.push_back(evaluate_windows(t, adv, a.config.attack_type, "TEAM", a.surrogate_cell));
  }
  return out;
}

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json cs = nlohmann::json::array();
  for (const auto& c : cells) cs.push_back(c.to_json());
  return {{"meta", meta}, {"cells", cs}};
}

MetricsReport MetricsReport::from_json(const nlohmann::json& j) {
  MetricsReport r;
  r.meta = j.at("meta");
  for (const auto& c : j.at("cells")) r.cells.push_back(ReportCell::from_json(c));
  return r;
}

namespace {

std::string fmt_count(const Count& c) {
  if (c.evaluated == 0) return "-";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f (%zu/%zu)", c.percent(), c.misjudged, c.evaluated);
  return buf;
}

}  // namespace

std::string MetricsReport::to_text() const {
  const std::vector<std::string> head = {"attack", "method", "surrogate", "target", "box",
                                         "MAR",    "ASR",    "MAR1",      "MAR2",   "base MAR1", "base MAR2"};
  std::vector<std::vector<std::string>> rows = {head};
  for (const auto& c : cells) {
    rows.push_back({c.attack_type, c.method, c.surrogate, c.target, c.white_box ? "white" : "black",
                    fmt_count(c.mar), fmt_count(c.asr), fmt_count(c.mar1), fmt_count(c.mar2),
                    fmt_count(c.base_mar1), fmt_count(c.base_mar2)});
  }
  std::vector<std::size_t> width(head.size(), 0);
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
  }
  std::ostringstream out;
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      out << std::left << std::setw(static_cast<int>(width[i])) << r[i];
      if (i + 1 < r.size()) out << "  ";
    }
    out << '\n';
  }
  return out.str();
}

std::string transfer_table(const MetricsReport& r, const std::string& attack_type, const std::string& method,
                           const std::string& metric) {
  std::vector<std::string> surrogates, targets;
  auto add = [](std::vector<std::string>& v, const std::string& x) {
    if (std::find(v.begin(), v.end(), x) == v.end()) v.push_back(x);
  };
  for (const auto& c : r.cells) {
    if (c.attack_type != attack_type || c.method != method) continue;
    add(surrogates, c.surrogate);
    add(targets, c.target);
  }
  auto pick = [&](const ReportCell& c) -> const Count& {
    if (metric == "mar") return c.mar;
    if (metric == "mar1") return c.mar1;
    if (metric == "mar2") return c.mar2;
    if (metric == "asr") return c.asr;
    throw UsageError("transfer_table: unknown metric '" + metric + "'");
  };
  std::vector<std::vector<std::string>> rows;
  rows.push_back({attack_type + " " + method + " " + metric});
  for (const auto& t : targets) rows.front().push_back("target " + t);
  for (const auto& s : surrogates) {
    std::vector<std::string> row = {"surrogate " + s};
    for (const auto& t : targets) {
      std::string v = "-";
      for (const auto& c : r.cells) {
        if (c.attack_type == attack_type && c.method == method && c.surrogate == s && c.target == t) {
          v = fmt_count(pick(c)) + (c.white_box ? " *" : "");
        }
      }
      row.push_back(v);
    }
    rows.push_back(row);
  }
  std::vector<std::size_t> width(rows.front().size(), 0);
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  }
  std::ostringstream out;
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      out << std::left << std::setw(static_cast<int>(width[i])) << row[i];
      if (i + 1 < row.size()) out << "  ";
    }
    out << '\n';
  }
  return out.str();
}

std::string render_report(const MetricsReport& r, ReportFormat format) {
  if (format == ReportFormat::text) return r.to_text();
  return r.to_json().dump(2) + "\n";
}

void emit_report(const MetricsReport& r, ReportFormat format, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write report " + path);
  out << render_report(r, format);
  if (!out) throw IoError("failed writing report " + path);
}

MetricsReport read_report(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read report " + path);
  try {
    return MetricsReport::from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed report " + path + ": " + e.what());
  }
}

void write_prediction_log(const std::vector<CellEvaluation>& cells, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write prediction log " + path);
  out << "attack_type,method,surrogate,target,window,position,tag,label,predicted,original_predicted\n";
  for (const auto& ev : cells) {
    const auto& c = ev.cell;
    for (const auto& r : ev.log) {
      out << c.attack_type << ',' << c.method << ',' << c.surrogate << ',' << c.target << ',' << r.window << ','
          << r.position << ',' << attack::to_string(r.tag) << ',' << r.label << ',' << r.predicted << ','
          << r.original_predicted << '\n';
    }
  }
  if (!out) throw IoError("failed writing prediction log " + path);
}

}  // namespace team::eval
