#include "team/synth/recipe.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "team/error.hpp"
#include "team/hash.hpp"
#include "team/rng.hpp"

namespace team::synth {

namespace fs = std::filesystem;

nlohmann::json recipe_defaults() {
  nlohmann::json synthetic = config::parse_yaml(data::synthetic_config_to_yaml(data::SyntheticConfig{}));
  auto team = attack::AttackConfig{}.to_json();
  team.erase("attack_type");
  auto pgd = attack::PgdConfig{}.to_json();
  pgd["enabled"] = false;
  return {
      {"name", "recipe"},
      {"data",
       {{"source", "synthetic"},
        {"synthetic", synthetic},
        {"train_share", 0.8},
        {"schema", ""},
        {"train_csv", ""},
        {"test_csv", ""}}},
      {"attack_types", nlohmann::json::array()},
      {"cells", {"ornn", "lstm", "gru"}},
      {"target", models::TrainConfig{}.to_json()},
      {"surrogate", models::surrogate_defaults().to_json()},
      {"team", team},
      {"pgd", pgd},
      {"assertions", nlohmann::json::array()},
  };
}

std::string Recipe::name() const { return tree.at("name").get<std::string>(); }

namespace {

const std::vector<std::string> kMetrics = {"asr",    "mar",    "mar1",           "mar2",
                                           "base_mar1", "base_mar2", "uplift1", "uplift2",
                                           "target_accuracy"};
const std::vector<std::string> kOps = {">=", ">", "<=", "<", "=="};

template <class T>
T parse_section(const nlohmann::json& j, const char* what) {
  try {
    T c = T::from_json(j);
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string(what) + ": " + e.what());
  }
}

data::SyntheticConfig synthetic_from(const nlohmann::json& j) {
  // JSON is valid YAML flow syntax.
  return data::synthetic_config_from_yaml(j.dump());
}

models::TrainConfig train_config(const nlohmann::json& tree, const char* section, const std::string& cell,
                                 std::uint64_t seed) {
  auto j = tree.at(section);
  j["cell"] = cell;
  j["seed"] = seed;
  return parse_section<models::TrainConfig>(j, section);
}

attack::AttackConfig attack_config(const nlohmann::json& tree, const std::string& type, std::uint64_t seed) {
  auto j = tree.at("team");
  j["attack_type"] = type;
  j["seed"] = seed;
  return parse_section<attack::AttackConfig>(j, "team");
}

attack::PgdConfig pgd_config(const nlohmann::json& tree, std::uint64_t seed) {
  auto j = tree.at("pgd");
  j.erase("enabled");
  j["seed"] = seed;
  return parse_section<attack::PgdConfig>(j, "pgd");
}

std::string resolve(const std::string& base, const std::string& p) {
  if (p.empty() || fs::path(p).is_absolute()) return p;
  return (fs::path(base) / p).string();
}

// Re-raises the active team::Error as the same class with the stage prefixed.
[[noreturn]] void rethrow_in_stage(const std::string& stage) {
  try {
    throw;
  } catch (const Error& e) {
    const std::string m = "stage " + stage + ": " + e.what();
    const std::string k = e.kind();
    if (k == "ConfigError") throw ConfigError(m);
    if (k == "InputError") throw InputError(m);
    if (k == "UsageError") throw UsageError(m);
    if (k == "NumericError") throw NumericError(m);
    if (k == "SchemaError") throw SchemaError(m);
    if (k == "IntegrityError") throw IntegrityError(m);
    if (k == "CountError") throw CountError(m);
    if (k == "AssertionFailure") throw AssertionFailure(m);
    throw IoError(m);
  }
}

template <class F>
auto stage(const std::string& name, const Logger& log, F&& f) {
  if (log) log("stage " + name);
  try {
    return f();
  } catch (const Error&) {
    rethrow_in_stage(name);
  }
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write " + p.string());
  out << text;
  if (!out) throw IoError("failed writing " + p.string());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double metric_of(const eval::ReportCell& c, const std::string& m) {
  if (m == "asr") return c.asr.percent();
  if (m == "mar") return c.mar.percent();
  if (m == "mar1") return c.mar1.percent();
  if (m == "mar2") return c.mar2.percent();
  if (m == "base_mar1") return c.base_mar1.percent();
  if (m == "base_mar2") return c.base_mar2.percent();
  if (m == "uplift1") return c.mar1.percent() - c.base_mar1.percent();
  return c.mar2.percent() - c.base_mar2.percent();
}

bool compare(double observed, const std::string& op, double value) {
  if (op == ">=") return observed >= value;
  if (op == ">") return observed > value;
  if (op == "<=") return observed <= value;
  if (op == "<") return observed < value;
  return observed == value;
}

std::string field_or(const nlohmann::json& a, const char* key, const std::string& fallback) {
  return a.contains(key) ? a.at(key).get<std::string>() : fallback;
}

AssertionOutcome evaluate_assertion(const nlohmann::json& a, const eval::MetricsReport& report) {
  AssertionOutcome out;
  out.name = a.at("name").get<std::string>();
  const std::string metric = a.at("metric").get<std::string>();
  const std::string op = field_or(a, "op", ">=");
  const double value = a.at("value").get<double>();
  const std::string aggregate = field_or(a, "aggregate", "mean");
  std::vector<double> xs;
  std::string scope;
  if (metric == "target_accuracy") {
    const std::string target = field_or(a, "target", "");
    for (const auto& [cell, acc] : report.meta.at("target_accuracy").items()) {
      if (target.empty() || target == cell) xs.push_back(acc.get<double>());
    }
    scope = target.empty() ? "all targets" : target;
  } else {
    const std::string attack = field_or(a, "attack", "");
    const std::string method = field_or(a, "method", "TEAM");
    const std::string surrogate = field_or(a, "surrogate", "");
    const std::string target = field_or(a, "target", "");
    const std::string box = field_or(a, "box", "");
    for (const auto& c : report.cells) {
      if (!attack.empty() && c.attack_type != attack) continue;
      if (c.method != method) continue;
      if (!surrogate.empty() && c.surrogate != surrogate) continue;
      if (!target.empty() && c.target != target) continue;
      if (box == "white" && !c.white_box) continue;
      if (box == "black" && c.white_box) continue;
      xs.push_back(metric_of(c, metric));
    }
    scope = method + " attack=" + (attack.empty() ? "*" : attack) + " surrogate=" +
            (surrogate.empty() ? "*" : surrogate) + " target=" + (target.empty() ? "*" : target) +
            (box.empty() ? "" : " box=" + box);
  }
  if (xs.empty()) throw ConfigError("assertion '" + out.name + "' matches no report cell");
  if (aggregate == "min") {
    out.observed = *std::min_element(xs.begin(), xs.end());
  } else if (aggregate == "max") {
    out.observed = *std::max_element(xs.begin(), xs.end());
  } else {
    double s = 0.0;
    for (double x : xs) s += x;
    out.observed = s / static_cast<double>(xs.size());
  }
  std::ostringstream e;
  e << aggregate << " " << metric << " over " << scope << " " << op << " " << value;
  out.expression = e.str();
  out.passed = compare(out.observed, op, value);
  return out;
}

}  // namespace

void Recipe::validate() const {
  try {
    const auto& d = tree.at("data");
    const std::string src = d.at("source").get<std::string>();
    if (src == "synthetic") {
      synthetic_from(d.at("synthetic"));
      const double share = d.at("train_share").get<double>();
      if (!(share > 0.0 && share < 1.0)) throw ConfigError("data.train_share must be in (0,1)");
    } else if (src == "csv") {
      for (const char* k : {"schema", "train_csv", "test_csv"}) {
        if (d.at(k).get<std::string>().empty()) throw ConfigError(std::string("data.") + k + " is required for csv data");
      }
    } else {
      throw ConfigError("data.source must be synthetic or csv, got '" + src + "'");
    }
    if (tree.at("cells").empty()) throw ConfigError("cells must list at least one cell kind");
    for (const auto& c : tree.at("cells")) {
      const auto kind = c.get<std::string>();
      train_config(tree, "target", kind, 0);
      train_config(tree, "surrogate", kind, 0);
    }
    attack_config(tree, "x", 0);
    pgd_config(tree, 0);
    for (const auto& a : tree.at("assertions")) {
      if (!a.contains("name") || !a.contains("metric") || !a.contains("value")) {
        throw ConfigError("every assertion needs name, metric and value");
      }
      const auto m = a.at("metric").get<std::string>();
      if (std::find(kMetrics.begin(), kMetrics.end(), m) == kMetrics.end()) {
        std::string msg = "assertion '" + a.at("name").get<std::string>() + "': unknown metric '" + m + "'";
        const auto s = config::suggest(m, kMetrics);
        if (!s.empty()) msg += " (did you mean '" + s + "'?)";
        throw ConfigError(msg);
      }
      const auto op = field_or(a, "op", ">=");
      if (std::find(kOps.begin(), kOps.end(), op) == kOps.end()) throw ConfigError("assertion op '" + op + "' unknown");
      const auto agg = field_or(a, "aggregate", "mean");
      if (agg != "mean" && agg != "min" && agg != "max") throw ConfigError("assertion aggregate '" + agg + "' unknown");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("recipe: ") + e.what());
  }
}

Recipe recipe_from_json(const nlohmann::json& j) {
  Recipe r;
  r.tree = config::merge(recipe_defaults(), j);
  r.validate();
  return r;
}

Recipe load_recipe(const std::string& path, const std::vector<config::Override>& overrides) {
  Recipe r;
  r.tree = config::merge(recipe_defaults(), config::load_file(path));
  config::apply_overrides(r.tree, overrides);
  r.base_dir = fs::path(path).parent_path().string();
  if (r.base_dir.empty()) r.base_dir = ".";
  r.validate();
  return r;
}

RawSplit load_raw(const nlohmann::json& d, std::uint64_t seed, const std::string& base_dir) {
  RawSplit r;
  if (d.at("source").get<std::string>() == "synthetic") {
    auto gen = data::gen_synthetic(synthetic_from(d.at("synthetic")), seed);
    const auto cut = static_cast<std::size_t>(d.at("train_share").get<double>() *
                                              static_cast<double>(gen.table.rows.size()));
    r.train.columns = r.test.columns = gen.table.columns;
    for (std::size_t k = 0; k < gen.table.rows.size(); ++k) {
      auto& dst = k < cut ? r.train : r.test;
      dst.rows.push_back(std::move(gen.table.rows[k]));
      dst.labels.push_back(std::move(gen.table.labels[k]));
    }
    r.schema = std::move(gen.schema);
  } else {
    r.schema = data::load_schema(resolve(base_dir, d.at("schema").get<std::string>()));
    r.train = data::read_csv(resolve(base_dir, d.at("train_csv").get<std::string>()), r.schema);
    r.test = data::read_csv(resolve(base_dir, d.at("test_csv").get<std::string>()), r.schema);
  }
  return r;
}

PreparedData prepare_data(const nlohmann::json& d, std::uint64_t seed, const std::string& base_dir,
                          const data::Normalizer* fixed) {
  RawSplit raw = load_raw(d, seed, base_dir);
  PreparedData p;
  p.schema = std::move(raw.schema);
  if (fixed) {
    if (fixed->schema_fingerprint != p.schema.fingerprint()) {
      throw SchemaError("the normalizer was fitted under a different schema than the data");
    }
    p.norm = *fixed;
  } else {
    p.norm = data::fit_normalizer(raw.train, p.schema);
  }
  p.train = data::normalize(raw.train, p.schema, p.norm);
  p.test = data::normalize(raw.test, p.schema, p.norm);
  return p;
}

bool RunResult::all_passed() const {
  return std::all_of(assertions.begin(), assertions.end(), [](const auto& a) { return a.passed; });
}

std::string RunResult::failed_names() const {
  std::string out;
  for (const auto& a : assertions) {
    if (a.passed) continue;
    if (!out.empty()) out += ",";
    out += a.name;
  }
  return out;
}

void require_assertions(const RunResult& r) {
  if (r.all_passed()) return;
  std::string detail;
  for (const auto& a : r.assertions) {
    if (a.passed) continue;
    std::ostringstream s;
    s << " [" << a.name << ": " << a.expression << ", observed " << a.observed << "]";
    detail += s.str();
  }
  throw AssertionFailure("recipe assertions failed: " + r.failed_names() + detail);
}

std::string run_digest(const RunResult& r) {
  std::string all;
  for (const auto& f : r.files) {
    all += f;
    all += '\0';
    all += sha256_hex(slurp(fs::path(r.run_dir) / f));
  }
  return sha256_hex(all);
}

RunResult run_recipe(const Recipe& recipe, std::uint64_t master_seed, const std::string& out_root,
                     const Logger& log) {
  recipe.validate();
  const auto& tree = recipe.tree;
  RunResult res;
  const fs::path dir = fs::path(out_root) / (recipe.name() + "-seed" + std::to_string(master_seed));
  res.run_dir = dir.string();
  fs::create_directories(dir / "models");
  fs::create_directories(dir / "attacks");
  auto record = [&](const std::string& rel) { res.files.push_back(rel); };

  nlohmann::json stage_seeds = nlohmann::json::object();
  auto seed_for = [&](const std::string& s) {
    const std::uint64_t v = derive_seed(master_seed, s);
    stage_seeds[s] = v;
    return v;
  };

  write_text(dir / "resolved_recipe.json", tree.dump(2) + "\n");
  record("resolved_recipe.json");

  const PreparedData pd = stage("data", log, [&] { return prepare_data(tree.at("data"), seed_for("data"), recipe.base_dir); });
  pd.norm.save((dir / "normalizer.json").string());
  record("normalizer.json");
  if (log) log("  train " + std::to_string(pd.train.size()) + " records, test " + std::to_string(pd.test.size()));

  const std::string fp = pd.schema.fingerprint();
  const int normal = pd.schema.normal_index();
  std::vector<std::string> types;
  for (const auto& t : tree.at("attack_types")) types.push_back(t.get<std::string>());
  if (types.empty()) types = pd.schema.attack_types();
  std::vector<std::string> cells;
  for (const auto& c : tree.at("cells")) cells.push_back(c.get<std::string>());

  nlohmann::json target_acc = nlohmann::json::object();
  nlohmann::json surrogate_acc = nlohmann::json::object();
  std::vector<models::ClassifierModel> targets, surrogates;
  for (const char* role : {"target", "surrogate"}) {
    for (const auto& cell : cells) {
      const std::string name = std::string(role) + "-" + cell;
      auto out = stage("train " + name, log, [&] {
        const auto cfg = train_config(tree, role, cell, seed_for(name));
        auto r = models::train_classifier(pd.train, pd.schema.class_names, normal, cfg, fp);
        const std::string rel = "models/" + name + ".ckpt";
        models::save_checkpoint({r.model, cfg, r.report}, (dir / rel).string());
        pd.norm.save(models::normalizer_path((dir / rel).string()));
        record(rel);
        record(models::normalizer_path(rel));
        return r.model;
      });
      const auto time_n = tree.at(role).at("time_n").get<std::size_t>();
      const double acc = 100.0 * models::accuracy(out, data::stream_windows(pd.test, time_n));
      (std::string(role) == "target" ? target_acc : surrogate_acc)[cell] = acc;
      if (log) log("  " + name + " test accuracy " + std::to_string(acc));
      (std::string(role) == "target" ? targets : surrogates).push_back(std::move(out));
    }
  }

  const bool pgd_on = tree.at("pgd").at("enabled").get<bool>();
  nlohmann::json attack_meta = nlohmann::json::object();
  std::vector<eval::CellEvaluation> evals;
  for (const auto& type : types) {
    const int cls = pd.schema.class_index(type);
    const auto mask = data::feature_mask(pd.schema, pd.norm, type);
    const auto probe = attack_config(tree, type, 0);
    const auto train_w = stage("windows " + type, log, [&] {
      return data::make_windows(pd.train, probe.time_n, probe.adv_n, probe.org_n, cls, seed_for("windows/train/" + type));
    });
    const auto test_w = stage("windows " + type, log, [&] {
      return data::make_windows(pd.test, probe.time_n, probe.adv_n, probe.org_n, cls, seed_for("windows/test/" + type));
    });

    std::vector<attack::AttackArtifact> arts;
    for (std::size_t k = 0; k < cells.size(); ++k) {
      const std::string name = "team-" + type + "-" + cells[k];
      arts.push_back(stage("attack " + name, log, [&] {
        auto a = attack::team_train(surrogates[k], train_w, mask, attack_config(tree, type, seed_for(name)));
        const std::string rel = "attacks/" + name + ".art";
        attack::save_artifact(a, (dir / rel).string());
        record(rel);
        return a;
      }));
      attack_meta[name] = {{"epochs_run", arts.back().curve.size()},
                           {"best_epoch", arts.back().best_epoch},
                           {"best_val_success", arts.back().best_val_success}};
      if (log) log("  " + name + " best validation success " + std::to_string(arts.back().best_val_success));
    }

    stage("evaluate " + type, log, [&] {
      std::vector<attack::AdversarialWindow> control;
      for (const auto& c : test_w) control.push_back(attack::unperturbed_window(c));
      for (const auto& t : targets) evals.push_back(eval::evaluate_windows(t, control, type, "OE", "-"));
      for (auto& e : eval::transfer_matrix(arts, targets, test_w)) evals.push_back(std::move(e));
      if (pgd_on) {
        for (std::size_t k = 0; k < cells.size(); ++k) {
          const auto adv = attack::pgd_generate(surrogates[k], test_w, mask,
                                                pgd_config(tree, seed_for("pgd/" + type + "/" + cells[k])));
          for (const auto& t : targets) evals.push_back(eval::evaluate_windows(t, adv, type, "PGD", cells[k]));
        }
      }
      return 0;
    });
  }

  res.report.meta = {{"recipe", recipe.name()},
                     {"seed", master_seed},
                     {"split", "test"},
                     {"config_hash", sha256_hex(tree.dump())},
                     {"schema_fingerprint", fp},
                     {"stage_seeds", stage_seeds},
                     {"target_accuracy", target_acc},
                     {"surrogate_accuracy", surrogate_acc},
                     {"attacks", attack_meta}};
  for (const auto& e : evals) res.report.cells.push_back(e.cell);

  eval::emit_report(res.report, eval::ReportFormat::json, (dir / "report.json").string());
  eval::emit_report(res.report, eval::ReportFormat::text, (dir / "report.txt").string());
  eval::write_prediction_log(evals, (dir / "predictions.csv").string());
  record("report.json");
  record("report.txt");
  record("predictions.csv");

  res.assertions = stage("assertions", log, [&] {
    std::vector<AssertionOutcome> out;
    for (const auto& a : tree.at("assertions")) out.push_back(evaluate_assertion(a, res.report));
    return out;
  });
  nlohmann::json aj = nlohmann::json::array();
  for (const auto& a : res.assertions) {
    aj.push_back({{"name", a.name}, {"expression", a.expression}, {"observed", a.observed}, {"passed", a.passed}});
  }
  write_text(dir / "assertions.json", aj.dump(2) + "\n");
  record("assertions.json");
  std::sort(res.files.begin(), res.files.end());
  return res;
}

}  // namespace team::synth
