#include "team/cli/app.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "team/config.hpp"
#include "team/error.hpp"
#include "team/hash.hpp"
#include "team/rng.hpp"
#include "team/synth/recipe.hpp"

namespace team::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(const char* kind) {
  const std::string k = kind;
  if (k == "AssertionFailure") return kAssertion;
  static const std::set<std::string> user = {"ConfigError", "UsageError",     "SchemaError", "InputError",
                                             "IoError",     "IntegrityError", "CountError"};
  return user.count(k) ? kUserError : kInternal;
}

namespace {

struct Context {
  json tree;
  fs::path out_dir;
  std::uint64_t seed = 0;
  std::ostream& out;
  synth::Logger log;
};

// ------------------------------------------------------------------ helpers

json data_defaults() { return synth::recipe_defaults().at("data"); }

template <class T>
T parse_section(const json& j, const char* what) {
  try {
    T c = T::from_json(j);
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string(what) + ": " + e.what());
  }
}

std::string need_string(const json& tree, const std::string& key, const std::string& flag) {
  const auto v = tree.at(key).get<std::string>();
  if (v.empty()) throw UsageError(key + " is required (set it in the config or with " + flag + ")");
  return v;
}

std::vector<std::string> string_list(const json& tree, const std::string& key) {
  std::vector<std::string> v;
  for (const auto& e : tree.at(key)) v.push_back(e.get<std::string>());
  return v;
}

void write_json(const fs::path& p, const json& j) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw IoError("cannot write " + p.string());
  f << j.dump(2) << "\n";
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw IoError("cannot write " + p.string());
  f << s;
}

struct LoadedModels {
  std::vector<models::ClassifierModel> models;
  data::Normalizer norm;
};

// Loads checkpoints that must share one schema; the normalizer comes from the
// first checkpoint's sidecar.
LoadedModels load_models(const std::vector<std::string>& paths) {
  if (paths.empty()) throw UsageError("no model checkpoint given");
  LoadedModels l;
  for (const auto& p : paths) {
    l.models.push_back(models::load_checkpoint(p).model);
    if (l.models.back().schema_fingerprint != l.models.front().schema_fingerprint) {
      throw SchemaError("checkpoint " + p + " was trained under a different schema than " + paths.front());
    }
  }
  l.norm = data::Normalizer::load(models::normalizer_path(paths.front()));
  return l;
}

synth::PreparedData data_for(const Context& c, const data::Normalizer* norm) {
  return synth::prepare_data(c.tree.at("data"), derive_seed(c.seed, "data"), ".", norm);
}

void check_schema(const std::string& what, const std::string& fp, const synth::PreparedData& pd) {
  if (fp != pd.schema.fingerprint()) {
    throw SchemaError(what + " was built under schema " + fp.substr(0, 12) + " but the data uses schema " +
                      pd.schema.fingerprint().substr(0, 12));
  }
}

std::vector<data::TimeStepComposition> test_windows(const Context& c, const synth::PreparedData& pd,
                                                    const std::string& type, std::size_t time_n, std::size_t adv_n,
                                                    std::size_t org_n) {
  return data::make_windows(pd.test, time_n, adv_n, org_n, pd.schema.class_index(type),
                            derive_seed(c.seed, "windows/test/" + type));
}

void print_metrics(std::ostream& out, const eval::MetricsReport& r) {
  for (const auto& c : r.cells) {
    const std::pair<const char*, const eval::Count*> ms[] = {{"mar", &c.mar},   {"asr", &c.asr},
                                                             {"mar1", &c.mar1}, {"mar2", &c.mar2},
                                                             {"base_mar1", &c.base_mar1}, {"base_mar2", &c.base_mar2}};
    for (const auto& [name, k] : ms) {
      if (k->evaluated == 0) continue;
      out << "metric=" << name << " attack=" << c.attack_type << " method=" << c.method << " surrogate=" << c.surrogate
          << " target=" << c.target << " percent=" << std::fixed << std::setprecision(2) << k->percent()
          << " misjudged=" << k->misjudged << " evaluated=" << k->evaluated << "\n";
    }
  }
}

void emit_all(const Context& c, eval::MetricsReport& report, const std::vector<eval::CellEvaluation>& evals) {
  report.meta["seed"] = c.seed;
  report.meta["split"] = "test";
  json hashed = c.tree;
  hashed.erase("out");  // where a run is written does not change what it computes
  report.meta["config_hash"] = sha256_hex(hashed.dump());
  for (const auto& e : evals) report.cells.push_back(e.cell);
  eval::emit_report(report, eval::ReportFormat::json, (c.out_dir / "report.json").string());
  eval::emit_report(report, eval::ReportFormat::text, (c.out_dir / "report.txt").string());
  eval::write_prediction_log(evals, (c.out_dir / "predictions.csv").string());
  print_metrics(c.out, report);
}

// ----------------------------------------------------------------- commands

json gen_synth_defaults() {
  auto d = data_defaults();
  return {{"seed", 0}, {"out", ""}, {"synthetic", d.at("synthetic")}, {"train_share", d.at("train_share")}};
}

void gen_synth(Context& c) {
  json d = data_defaults();
  d["synthetic"] = c.tree.at("synthetic");
  d["train_share"] = c.tree.at("train_share");
  const auto raw = synth::load_raw(d, derive_seed(c.seed, "data"));
  write_text(c.out_dir / "schema.yaml", data::dump_schema(raw.schema));
  data::write_csv((c.out_dir / "train.csv").string(), raw.train, raw.schema);
  data::write_csv((c.out_dir / "test.csv").string(), raw.test, raw.schema);
  c.out << "records_train=" << raw.train.rows.size() << "\n"
        << "records_test=" << raw.test.rows.size() << "\n"
        << "schema=" << (c.out_dir / "schema.yaml").string() << "\n";
}

json train_defaults(bool surrogate) {
  auto m = surrogate ? models::surrogate_defaults().to_json() : models::TrainConfig{}.to_json();
  m.erase("seed");
  m.erase("role");
  return {{"seed", 0}, {"out", ""}, {"data", data_defaults()}, {"model", m}};
}

void train(Context& c, bool surrogate) {
  auto j = c.tree.at("model");
  const std::string cell = j.at("cell").get<std::string>();
  const std::string name = std::string(surrogate ? "surrogate-" : "target-") + cell;
  j["role"] = surrogate ? "surrogate" : "target";
  j["seed"] = derive_seed(c.seed, name);
  const auto cfg = parse_section<models::TrainConfig>(j, "model");
  const auto pd = data_for(c, nullptr);
  if (c.log) c.log("training " + name + " on " + std::to_string(pd.train.size()) + " records");
  auto r = models::train_classifier(pd.train, pd.schema.class_names, pd.schema.normal_index(), cfg,
                                    pd.schema.fingerprint());
  const auto ckpt = (c.out_dir / "model.ckpt").string();
  models::save_checkpoint({r.model, cfg, r.report}, ckpt);
  pd.norm.save(models::normalizer_path(ckpt));
  write_json(c.out_dir / "train_report.json", r.report.to_json());
  const double test_acc = models::accuracy(r.model, data::stream_windows(pd.test, cfg.time_n));
  c.out << "train_accuracy=" << r.report.train_accuracy << "\n"
        << "holdout_accuracy=" << r.report.holdout_accuracy << "\n"
        << "test_accuracy=" << test_acc << "\n"
        << "parameter_hash=" << models::parameter_hash(r.model) << "\n"
        << "checkpoint=" << ckpt << "\n";
}

json attack_team_defaults() {
  auto a = attack::AttackConfig{}.to_json();
  a.erase("seed");
  return {{"seed", 0}, {"out", ""}, {"data", data_defaults()}, {"surrogate", ""}, {"attack", a}};
}

void attack_team(Context& c) {
  const auto path = need_string(c.tree, "surrogate", "--surrogate");
  auto l = load_models({path});
  const auto& sur = l.models.front();
  const auto pd = data_for(c, &l.norm);
  check_schema("surrogate " + path, sur.schema_fingerprint, pd);
  auto j = c.tree.at("attack");
  const std::string type = j.at("attack_type").get<std::string>();
  if (type.empty()) throw UsageError("attack.attack_type is required (or --attack-type)");
  const std::string name = "team-" + type + "-" + rnn::to_string(sur.cell.kind());
  j["seed"] = derive_seed(c.seed, name);
  const auto cfg = parse_section<attack::AttackConfig>(j, "attack");
  const int cls = pd.schema.class_index(type);
  const auto mask = data::feature_mask(pd.schema, pd.norm, type);
  const auto train_w = data::make_windows(pd.train, cfg.time_n, cfg.adv_n, cfg.org_n, cls,
                                          derive_seed(c.seed, "windows/train/" + type));
  if (c.log) c.log("training " + name + " on " + std::to_string(train_w.size()) + " windows");
  const auto art = attack::team_train(sur, train_w, mask, cfg);
  attack::save_artifact(art, (c.out_dir / "attack.art").string());
  const auto adv = attack::team_generate(art, test_windows(c, pd, type, cfg.time_n, cfg.adv_n, cfg.org_n));
  const auto asr = eval::compute_asr(sur, adv);
  write_json(c.out_dir / "summary.json", {{"epochs_run", art.curve.size()},
                                          {"best_epoch", art.best_epoch},
                                          {"best_val_success", art.best_val_success},
                                          {"surrogate_asr", asr.to_json()}});
  c.out << "epochs_run=" << art.curve.size() << "\n"
        << "best_val_success=" << art.best_val_success << "\n"
        << "surrogate_asr=" << std::fixed << std::setprecision(2) << asr.percent() << " (" << asr.misjudged << "/"
        << asr.evaluated << ")\n"
        << "artifact=" << (c.out_dir / "attack.art").string() << "\n";
}

json attack_pgd_defaults() {
  auto p = attack::PgdConfig{}.to_json();
  p.erase("seed");
  return {{"seed", 0},        {"out", ""},     {"data", data_defaults()}, {"model", ""},
          {"targets", json::array()}, {"attack_type", ""}, {"time_n", 8}, {"adv_n", 6},
          {"org_n", 2},       {"pgd", p}};
}

void attack_pgd(Context& c) {
  const auto model_path = need_string(c.tree, "model", "--model");
  auto target_paths = string_list(c.tree, "targets");
  if (target_paths.empty()) target_paths = {model_path};
  auto src = load_models({model_path});
  auto tl = load_models(target_paths);
  const auto pd = data_for(c, &src.norm);
  check_schema("model " + model_path, src.models.front().schema_fingerprint, pd);
  for (std::size_t k = 0; k < tl.models.size(); ++k) {
    check_schema("target " + target_paths[k], tl.models[k].schema_fingerprint, pd);
  }
  const std::string type = need_string(c.tree, "attack_type", "--attack-type");
  auto pj = c.tree.at("pgd");
  const std::string cell = rnn::to_string(src.models.front().cell.kind());
  pj["seed"] = derive_seed(c.seed, "pgd/" + type + "/" + cell);
  const auto cfg = parse_section<attack::PgdConfig>(pj, "pgd");
  const auto ws = test_windows(c, pd, type, c.tree.at("time_n").get<std::size_t>(),
                               c.tree.at("adv_n").get<std::size_t>(), c.tree.at("org_n").get<std::size_t>());
  const auto adv = attack::pgd_generate(src.models.front(), ws, data::feature_mask(pd.schema, pd.norm, type), cfg);
  std::vector<eval::CellEvaluation> evals;
  for (const auto& t : tl.models) evals.push_back(eval::evaluate_windows(t, adv, type, "PGD", cell));
  eval::MetricsReport r;
  r.meta["command"] = "attack-pgd";
  emit_all(c, r, evals);
}

json evaluate_defaults() {
  return {{"seed", 0},         {"out", ""},   {"data", data_defaults()}, {"artifact", ""},
          {"targets", json::array()}, {"attack_type", ""}, {"time_n", 8},  {"adv_n", 6},
          {"org_n", 2}};
}

void evaluate(Context& c) {
  const auto target_paths = string_list(c.tree, "targets");
  auto tl = load_models(target_paths);
  const auto pd = data_for(c, &tl.norm);
  for (std::size_t k = 0; k < tl.models.size(); ++k) {
    check_schema("target " + target_paths[k], tl.models[k].schema_fingerprint, pd);
  }
  std::optional<attack::AttackArtifact> art;
  std::string type = c.tree.at("attack_type").get<std::string>();
  std::size_t time_n = c.tree.at("time_n").get<std::size_t>();
  std::size_t adv_n = c.tree.at("adv_n").get<std::size_t>();
  std::size_t org_n = c.tree.at("org_n").get<std::size_t>();
  const auto art_path = c.tree.at("artifact").get<std::string>();
  if (!art_path.empty()) {
    art = attack::load_artifact(art_path);
    check_schema("artifact " + art_path, art->schema_fingerprint, pd);
    if (!type.empty() && type != art->config.attack_type) {
      throw ConfigError("attack_type " + type + " conflicts with artifact attack type " + art->config.attack_type);
    }
    type = art->config.attack_type;
    time_n = art->config.time_n;
    adv_n = art->config.adv_n;
    org_n = art->config.org_n;
  }
  if (type.empty()) throw UsageError("attack_type is required when no artifact is given (or --attack-type)");
  const auto ws = test_windows(c, pd, type, time_n, adv_n, org_n);
  std::vector<attack::AdversarialWindow> control;
  for (const auto& w : ws) control.push_back(attack::unperturbed_window(w));
  std::vector<eval::CellEvaluation> evals;
  for (const auto& t : tl.models) evals.push_back(eval::evaluate_windows(t, control, type, "OE", "-"));
  if (art) {
    const auto adv = attack::team_generate(*art, ws);
    for (const auto& t : tl.models) evals.push_back(eval::evaluate_windows(t, adv, type, "TEAM", art->surrogate_cell));
  }
  eval::MetricsReport r;
  r.meta["command"] = "evaluate";
  emit_all(c, r, evals);
}

json transfer_defaults() {
  return {{"seed", 0}, {"out", ""}, {"data", data_defaults()}, {"artifacts", json::array()},
          {"targets", json::array()}};
}

void transfer(Context& c) {
  const auto target_paths = string_list(c.tree, "targets");
  const auto art_paths = string_list(c.tree, "artifacts");
  if (art_paths.empty()) throw UsageError("artifacts is required (or --artifact, repeatable)");
  auto tl = load_models(target_paths);
  const auto pd = data_for(c, &tl.norm);
  for (std::size_t k = 0; k < tl.models.size(); ++k) {
    check_schema("target " + target_paths[k], tl.models[k].schema_fingerprint, pd);
  }
  std::map<std::string, std::vector<attack::AttackArtifact>> by_type;
  for (const auto& p : art_paths) {
    auto a = attack::load_artifact(p);
    by_type[a.config.attack_type].push_back(std::move(a));
  }
  std::vector<eval::CellEvaluation> evals;
  for (const auto& [type, arts] : by_type) {
    const auto& cfg = arts.front().config;
    for (const auto& a : arts) {
      if (a.config.time_n != cfg.time_n || a.config.adv_n != cfg.adv_n) {
        throw ConfigError("artifacts for " + type + " disagree on the window composition");
      }
    }
    const auto ws = test_windows(c, pd, type, cfg.time_n, cfg.adv_n, cfg.org_n);
    std::vector<attack::AdversarialWindow> control;
    for (const auto& w : ws) control.push_back(attack::unperturbed_window(w));
    for (const auto& t : tl.models) evals.push_back(eval::evaluate_windows(t, control, type, "OE", "-"));
    for (auto& e : eval::transfer_matrix(arts, tl.models, ws)) evals.push_back(std::move(e));
  }
  eval::MetricsReport r;
  r.meta["command"] = "transfer";
  emit_all(c, r, evals);
  std::string tables;
  for (const auto& [type, arts] : by_type) {
    for (const char* m : {"asr", "mar1"}) tables += eval::transfer_table(r, type, "TEAM", m) + "\n";
  }
  write_text(c.out_dir / "matrix.txt", tables);
  c.out << tables;
}

// ------------------------------------------------------------------ driver

struct Command {
  std::string name;
  std::string help;
  json (*defaults)();
  void (*handler)(Context&);
  // Convenience flag -> dotted config key; `many` flags collect a list.
  struct Alias {
    std::string flag;
    std::string key;
    bool many = false;
    std::string help;
  };
  std::vector<Alias> aliases;
};

const std::vector<Command>& commands() {
  static const std::vector<Command> cs = {
      {"gen-synth", "Write a synthetic dataset (schema.yaml, train.csv, test.csv)", gen_synth_defaults, gen_synth, {}},
      {"train-target",
       "Train an undilated target classifier",
       [] { return train_defaults(false); },
       [](Context& c) { train(c, false); },
       {{"--cell", "model.cell", false, "ornn, lstm or gru"}}},
      {"train-surrogate",
       "Train a time-dilated surrogate on part of the data",
       [] { return train_defaults(true); },
       [](Context& c) { train(c, true); },
       {{"--cell", "model.cell", false, "ornn, lstm or gru"}, {"--hn", "model.hn", false, "time dilation factor"}}},
      {"attack-team",
       "Train a TEAM autoencoder against a surrogate",
       attack_team_defaults,
       attack_team,
       {{"--surrogate", "surrogate", false, "surrogate checkpoint"},
        {"--attack-type", "attack.attack_type", false, "attack class to disguise"}}},
      {"attack-pgd",
       "Run masked PGD from a model and score it on targets",
       attack_pgd_defaults,
       attack_pgd,
       {{"--model", "model", false, "checkpoint the gradients come from"},
        {"--target", "targets", true, "target checkpoint (repeatable)"},
        {"--attack-type", "attack_type", false, "attack class"}}},
      {"evaluate",
       "Score an artifact (or the clean baseline) on targets",
       evaluate_defaults,
       evaluate,
       {{"--artifact", "artifact", false, "TEAM artifact"},
        {"--target", "targets", true, "target checkpoint (repeatable)"},
        {"--attack-type", "attack_type", false, "attack class when no artifact is given"}}},
      {"transfer",
       "Score every artifact against every target",
       transfer_defaults,
       transfer,
       {{"--artifact", "artifacts", true, "TEAM artifact (repeatable)"},
        {"--target", "targets", true, "target checkpoint (repeatable)"}}},
  };
  return cs;
}

std::string one_line(std::string s) {
  for (char& ch : s) {
    if (ch == '\n' || ch == '\r') ch = ' ';
  }
  return s;
}

struct Parsed {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool verbose = false;
  std::map<std::string, std::vector<std::string>> alias_values;
  std::string recipe;
};

void add_common(CLI::App* sub, Parsed& p) {
  sub->add_option("--config", p.config, "YAML or JSON config file");
  sub->add_option("--set", p.sets, "override a dotted config key: key=value (repeatable)");
  sub->add_option("--seed", p.seed, "master seed; all randomness derives from it");
  sub->add_option("--out", p.out, "output directory");
  sub->add_flag("-v,--verbose", p.verbose, "progress on stderr");
}

// Rejects unknown long flags before CLI11 sees them, with a suggestion.
void check_flags(CLI::App& app, int argc, const char* const* argv) {
  if (argc < 2) return;
  const std::string subname = argv[1];
  if (subname == "-h" || subname == "--help") return;
  std::vector<std::string> subs;
  for (const auto* s : app.get_subcommands({})) subs.push_back(s->get_name());
  CLI::App* sub = nullptr;
  for (auto* s : app.get_subcommands({})) {
    if (s->get_name() == subname) sub = s;
  }
  if (!sub) {
    std::string msg = "unknown command '" + subname + "'";
    const auto s = config::suggest(subname, subs);
    if (!s.empty()) msg += " (did you mean '" + s + "'?)";
    throw UsageError(msg);
  }
  std::map<std::string, bool> known;  // long flag -> takes a value
  for (const auto* o : sub->get_options()) {
    for (const auto& n : o->get_lnames()) known["--" + n] = o->get_expected_min() > 0;
  }
  std::vector<std::string> names;
  for (const auto& [n, v] : known) names.push_back(n);
  for (int i = 2; i < argc; ++i) {
    const std::string tok = argv[i];
    if (tok.rfind("--", 0) != 0) continue;
    const std::string name = tok.substr(0, tok.find('='));
    const auto it = known.find(name);
    if (it == known.end()) {
      std::string msg = "unknown flag '" + name + "' for " + subname;
      const auto s = config::suggest(name, names);
      if (!s.empty()) msg += " (did you mean '" + s + "'?)";
      throw UsageError(msg);
    }
    if (it->second && tok.find('=') == std::string::npos) ++i;  // skip the value
  }
}

int run_recipe_command(const Parsed& p, std::ostream& out, const synth::Logger& log) {
  const std::string path = !p.recipe.empty() ? p.recipe : p.config;
  if (path.empty()) throw UsageError("recipe: give a recipe file (positional or --config)");
  if (!p.recipe.empty() && !p.config.empty() && p.recipe != p.config) {
    throw ConfigError("conflicting recipe files: positional " + p.recipe + " vs --config " + p.config);
  }
  std::vector<config::Override> ov;
  for (const auto& s : p.sets) ov.push_back(config::parse_assignment(s, "--set " + s));
  const auto recipe = synth::load_recipe(path, ov);
  const std::string out_root = p.out.empty() ? "runs" : p.out;
  const auto res = synth::run_recipe(recipe, p.seed.value_or(0), out_root, log);
  for (const auto& a : res.assertions) {
    out << "assertion=" << a.name << " passed=" << (a.passed ? "true" : "false") << " observed=" << a.observed
        << " check=\"" << a.expression << "\"\n";
  }
  out << "run_dir=" << res.run_dir << "\n"
      << "digest=" << synth::run_digest(res) << "\n";
  synth::require_assertions(res);
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"TEAM: temporal adversarial examples against recurrent intrusion detectors", "team"};
  app.require_subcommand(1);
  Parsed p;
  std::map<std::string, CLI::App*> subs;
  for (const auto& cmd : commands()) {
    auto* sub = app.add_subcommand(cmd.name, cmd.help);
    add_common(sub, p);
    for (const auto& a : cmd.aliases) {
      auto* o = sub->add_option(a.flag, p.alias_values[cmd.name + a.flag], a.help + " (config key " + a.key + ")");
      if (!a.many) o->expected(1);
    }
    subs[cmd.name] = sub;
  }
  auto* rsub = app.add_subcommand("recipe", "Run an experiment recipe end to end");
  add_common(rsub, p);
  rsub->add_option("recipe", p.recipe, "recipe file");

  try {
    try {
      check_flags(app, argc, argv);
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
      out << app.help(argc >= 2 && subs.count(argv[1]) ? argv[1] : "");
      return kOk;
    } catch (const CLI::CallForAllHelp&) {
      out << app.help();
      return kOk;
    } catch (const CLI::ParseError& e) {
      throw UsageError(e.what());
    }
    synth::Logger log;
    if (p.verbose) log = [&err](const std::string& s) { err << s << "\n"; };

    if (rsub->parsed()) return run_recipe_command(p, out, log);

    const Command* cmd = nullptr;
    for (const auto& c : commands()) {
      if (subs.at(c.name)->parsed()) cmd = &c;
    }
    json tree = cmd->defaults();
    if (!p.config.empty()) tree = config::merge(tree, config::load_file(p.config));
    std::vector<config::Override> ov;
    for (const auto& s : p.sets) ov.push_back(config::parse_assignment(s, "--set " + s));
    for (const auto& a : cmd->aliases) {
      const auto& v = p.alias_values[cmd->name + a.flag];
      if (v.empty()) continue;
      const std::string value = a.many ? json(v).dump() : json(v.front()).dump();
      ov.push_back({a.key, value, a.flag + " " + (a.many ? json(v).dump() : v.front())});
    }
    if (p.seed) ov.push_back({"seed", std::to_string(*p.seed), "--seed " + std::to_string(*p.seed)});
    if (!p.out.empty()) ov.push_back({"out", json(p.out).dump(), "--out " + p.out});
    config::apply_overrides(tree, ov);

    Context ctx{tree, {}, 0, out, log};
    try {
      ctx.seed = tree.at("seed").get<std::uint64_t>();
    } catch (const json::exception&) {
      throw ConfigError("seed must be a non-negative integer");
    }
    const auto out_dir = tree.at("out").get<std::string>();
    if (out_dir.empty()) throw UsageError(cmd->name + ": --out is required");
    ctx.out_dir = out_dir;
    fs::create_directories(ctx.out_dir);
    write_json(ctx.out_dir / "resolved_config.json", tree);
    cmd->handler(ctx);
    return kOk;
  } catch (const Error& e) {
    err << "error: class=" << e.kind() << " message=" << one_line(e.what()) << "\n";
    return exit_code_for(e.kind());
  } catch (const json::exception& e) {
    err << "error: class=ConfigError message=" << one_line(e.what()) << "\n";
    return kUserError;
  } catch (const fs::filesystem_error& e) {
    err << "error: class=IoError message=" << one_line(e.what()) << "\n";
    return kUserError;
  } catch (const std::exception& e) {
    err << "error: class=InternalError message=" << one_line(e.what()) << "\n";
    return kInternal;
  }
}

}  // namespace team::cli
