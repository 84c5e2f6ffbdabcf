// Runs the nine acceptance criteria and prints one line per criterion.
// Usage: acceptance [--expect-fail id]... [--results file] [criterion ids...]
// With no ids every criterion runs. --results also writes the summary lines
// to a file.
// A criterion listed with --expect-fail is a documented known failure: it
// prints XFAIL instead of FAIL and does not affect the exit code.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "../oracle/recount.hpp"
#include "../reference_cells.hpp"
#include "team/attack/team.hpp"
#include "team/error.hpp"
#include "team/eval/metrics.hpp"
#include "team/nn/gradcheck.hpp"
#include "team/rng.hpp"
#include "team/synth/calibrate.hpp"
#include "team/synth/recipe.hpp"

using namespace team;
using models::CellKind;
using nn::Matrix;
using nn::Vector;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

void progress(const std::string& s) { std::cerr << "  .. " << s << std::endl; }

struct Outcome {
  bool pass = false;
  bool skipped = false;
  std::string detail;
};

const CellKind kCells[] = {CellKind::ornn, CellKind::lstm, CellKind::gru};

// ------------------------------------------------------------ 1: hn = 1

Vector random_vec(Eigen::Index n, Rng& rng) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = uniform(rng, -1.5, 1.5);
  return v;
}

template <class P>
const P& as(const rnn::RecurrentCell& c) {
  return std::get<P>(c.variant());
}

Outcome hn_one_reduction() {
  const auto t0 = Clock::now();
  Rng rng(derive_seed(1, "acceptance/hn1"));
  double worst = 0.0;
  int comparisons = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto in = 1 + static_cast<Eigen::Index>(uniform_index(rng, 8));
    const auto hid = 1 + static_cast<Eigen::Index>(uniform_index(rng, 8));
    const Vector x = random_vec(in, rng), h = random_vec(hid, rng), cc = random_vec(hid, rng);
    const auto o = rnn::RecurrentCell::create(CellKind::ornn, in, hid, 1.0, true, rng);
    const auto l = rnn::RecurrentCell::create(CellKind::lstm, in, hid, 1.0, true, rng);
    const auto g = rnn::RecurrentCell::create(CellKind::gru, in, hid, 1.0, true, rng);
    const auto so = rnn::td_ornn_step(x, {h, std::nullopt}, as<rnn::OrnnParams>(o));
    worst = std::max(worst, (so.h - testing::ref_ornn(x, h, as<rnn::OrnnParams>(o))).cwiseAbs().maxCoeff());
    const auto sl = rnn::td_lstm_step(x, {h, cc}, as<rnn::LstmParams>(l));
    const auto rl = testing::ref_lstm(x, h, cc, as<rnn::LstmParams>(l));
    worst = std::max({worst, (sl.h - rl.h).cwiseAbs().maxCoeff(), (*sl.cc - rl.cc).cwiseAbs().maxCoeff()});
    const auto sg = rnn::td_gru_step(x, {h, std::nullopt}, as<rnn::GruParams>(g));
    worst = std::max(worst, (sg.h - testing::ref_gru(x, h, as<rnn::GruParams>(g)).h).cwiseAbs().maxCoeff());
    comparisons += 3;
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-12 && secs < 1.0, false,
          std::to_string(comparisons) + " step comparisons, max |diff| " + fmt("%.2e", worst) + ", " +
              fmt("%.3f", secs) + " s"};
}

// --------------------------------------------------------- 2: gradients

double cell_grad_error(CellKind kind, int steps, std::uint64_t seed) {
  Rng rng(seed);
  auto cell = rnn::RecurrentCell::create(kind, 5, 7, 1.6, true, rng);
  nn::DenseLayer head("head", 7, 3, nn::Activation::linear, rng);
  std::vector<Matrix> xs;
  for (int t = 0; t < steps; ++t) {
    Matrix m(5, 3);
    for (Eigen::Index q = 0; q < m.size(); ++q) m.data()[q] = uniform(rng, 0, 1);
    xs.push_back(m);
  }
  const std::vector<int> targets = {0, 2, 1};
  auto params = cell.params();
  params.push_back(&head.weights);
  params.push_back(&head.bias);
  auto loss = [&](bool with_grad) {
    nn::Tape tape;
    const auto bound = rnn::bind_trainable(tape, cell);
    std::vector<nn::Var> in;
    for (const auto& m : xs) in.push_back(tape.constant(m));
    const auto hs = rnn::unroll(tape, bound, in);
    nn::Var total = tape.constant(Matrix::Zero(1, 1));
    for (const auto& hv : hs) {
      total = tape.add(total, tape.softmax_cross_entropy(nn::dense_forward(tape, hv, head, true), targets));
    }
    if (with_grad) tape.backward(total);
    return tape.scalar(total);
  };
  // Step 1e-4: the summed window loss is large enough that rounding in the
  // difference quotient swamps near-zero coordinates at smaller steps.
  return nn::finite_difference_check(loss, params, 40, seed, 1e-4).max_relative_error;
}

double team_grad_error(CellKind kind, std::uint64_t seed) {
  data::SyntheticConfig sc;
  sc.features = 12;
  sc.nonfunctional = 5;
  sc.records = 600;
  const auto gen = data::gen_synthetic(sc, seed);
  const auto norm = data::fit_normalizer(gen.table, gen.schema);
  const auto ds = data::normalize(gen.table, gen.schema, norm);
  const auto mask = data::feature_mask(gen.schema, norm, "dos");
  const auto windows = data::make_windows(ds, 8, 6, 2, 1, seed);
  Rng rng(seed);
  auto sur = models::make_classifier(kind, 12, 6, gen.schema.class_names, 0, 1.8, true, models::ModelRole::surrogate,
                                     rng);
  auto ae = attack::AutoEncoder::create(5, {5, 3, 3, 5}, rng);
  std::vector<const data::TimeStepComposition*> batch;
  for (std::size_t k = 0; k < 4 && k < windows.size(); ++k) batch.push_back(&windows[k]);
  auto loss = [&](bool with_grad) {
    nn::Tape tape;
    const auto g = attack::build_team_graph(tape, sur, ae, batch, mask, 1.0, 0.25);
    if (with_grad) tape.backward(g.total);
    return tape.scalar(g.total);
  };
  return nn::finite_difference_check(loss, ae.params(), 40, seed).max_relative_error;
}

Outcome gradient_suite() {
  const auto t0 = Clock::now();
  double single = 0.0, window = 0.0, team = 0.0;
  std::uint64_t s = 11;
  for (CellKind k : kCells) {
    single = std::max(single, cell_grad_error(k, 1, ++s));
    window = std::max(window, cell_grad_error(k, 8, ++s));
    team = std::max(team, team_grad_error(k, ++s));
  }
  const double secs = seconds_since(t0);
  const bool ok = single < 1e-4 && window < 1e-4 && team < 1e-4 && secs < 30.0;
  return {ok, false,
          "max relative error: single step " + fmt("%.1e", single) + ", 8-step window " + fmt("%.1e", window) +
              ", TEAM graph " + fmt("%.1e", team) + "; " + fmt("%.1f", secs) + " s"};
}

// ------------------------------------------------------ 3: split/splice

Outcome split_splice() {
  Rng rng(derive_seed(3, "acceptance/splice"));
  std::size_t violations = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, 80);
    std::vector<bool> nf(n);
    for (std::size_t i = 0; i < n; ++i) nf[i] = uniform(rng, 0, 1) < 0.4;
    const auto mask = data::feature_mask(nf);
    Vector x(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = uniform(rng, 0, 1);
    auto parts = data::split_features(x, mask);
    if (data::splice(parts.functional, parts.nonfunctional) != x) ++violations;
    for (Eigen::Index i = 0; i < parts.nonfunctional.values.size(); ++i) parts.nonfunctional.values[i] = uniform(rng, 0, 1);
    const Vector y = data::splice(parts.functional, parts.nonfunctional);
    for (std::size_t f : mask.functional) {
      if (y[static_cast<Eigen::Index>(f)] != x[static_cast<Eigen::Index>(f)]) {
        ++violations;
        break;
      }
    }
  }
  return {violations == 0, false, "10000 random (record, mask) pairs, " + std::to_string(violations) + " violations"};
}

// ---------------------------------------------------- synthetic worlds

// Desk-scale setting shared by criteria 4-7.
struct World {
  std::uint64_t seed = 0;
  synth::PreparedData pd;
  data::FeatureMask mask;
  std::vector<models::ClassifierModel> targets;
  std::vector<models::ClassifierModel> surrogates;  // default dilation
  std::vector<attack::AttackArtifact> artifacts;
  std::vector<data::TimeStepComposition> attack_w, val_w, test_w;
  std::vector<double> target_accuracy;  // percent, per cell
  std::vector<eval::CellEvaluation> evals;
  double build_seconds = 0.0;
};

models::TrainConfig model_config(CellKind k, bool surrogate, std::uint64_t seed) {
  models::TrainConfig c = surrogate ? models::surrogate_defaults() : models::TrainConfig{};
  c.cell = k;
  c.hidden_dim = 16;
  c.epochs = 30;
  c.lr = 0.01;
  c.seed = seed;
  return c;
}

attack::AttackConfig team_config(std::uint64_t seed) {
  attack::AttackConfig c;
  c.attack_type = "dos";
  c.epochs = 500;
  c.lr = 0.01;
  c.seed = seed;
  return c;
}

std::vector<attack::AdversarialWindow> controls(const std::vector<data::TimeStepComposition>& ws) {
  std::vector<attack::AdversarialWindow> out;
  for (const auto& w : ws) out.push_back(attack::unperturbed_window(w));
  return out;
}

World build_world(std::uint64_t seed) {
  const auto t0 = Clock::now();
  World w;
  w.seed = seed;
  auto data_section = synth::recipe_defaults().at("data");  // bundled high-temporal defaults
  w.pd = synth::prepare_data(data_section, derive_seed(seed, "data"));
  w.mask = data::feature_mask(w.pd.schema, w.pd.norm, "dos");
  const auto& names = w.pd.schema.class_names;
  const auto fp = w.pd.schema.fingerprint();
  const int normal = w.pd.schema.normal_index();
  const int dos = w.pd.schema.class_index("dos");
  auto all_train = data::make_windows(w.pd.train, 8, 6, 2, dos, derive_seed(seed, "windows/train/dos"));
  const std::size_t cut = all_train.size() - all_train.size() / 5;
  w.attack_w.assign(all_train.begin(), all_train.begin() + static_cast<std::ptrdiff_t>(cut));
  w.val_w.assign(all_train.begin() + static_cast<std::ptrdiff_t>(cut), all_train.end());
  w.test_w = data::make_windows(w.pd.test, 8, 6, 2, dos, derive_seed(seed, "windows/test/dos"));
  const auto test_stream = data::stream_windows(w.pd.test, 8);
  for (CellKind k : kCells) {
    const std::string cell = rnn::to_string(k);
    w.targets.push_back(
        models::train_classifier(w.pd.train, names, normal, model_config(k, false, derive_seed(seed, "target-" + cell)), fp)
            .model);
    w.target_accuracy.push_back(100.0 * models::accuracy(w.targets.back(), test_stream));
    w.surrogates.push_back(
        models::train_classifier(w.pd.train, names, normal, model_config(k, true, derive_seed(seed, "surrogate-" + cell)),
                                 fp)
            .model);
    w.artifacts.push_back(
        attack::team_train(w.surrogates.back(), w.attack_w, w.mask, team_config(derive_seed(seed, "team-dos-" + cell))));
  }
  const auto ctl = controls(w.test_w);
  for (const auto& t : w.targets) w.evals.push_back(eval::evaluate_windows(t, ctl, "dos", "OE", "-"));
  for (auto& e : eval::transfer_matrix(w.artifacts, w.targets, w.test_w)) w.evals.push_back(std::move(e));
  w.build_seconds = seconds_since(t0);
  progress("world seed " + std::to_string(seed) + " built in " + fmt("%.1f", w.build_seconds) + " s");
  return w;
}

std::map<std::uint64_t, World>& worlds() {
  static std::map<std::uint64_t, World> ws;
  return ws;
}

const World& world(std::uint64_t seed) {
  auto& ws = worlds();
  if (!ws.count(seed)) ws.emplace(seed, build_world(seed));
  return ws.at(seed);
}

// Evaluations from criterion 7, one group per seed, recounted by criterion 4.
std::vector<std::vector<eval::CellEvaluation>>& extra_evals() {
  static std::vector<std::vector<eval::CellEvaluation>> v;
  return v;
}

const std::uint64_t kSeeds[] = {101, 202, 303, 404, 505};

// --------------------------------------------------- 5: white-box attack

Outcome white_box_attack() {
  const World& w = world(kSeeds[0]);
  bool ok = w.build_seconds < 600.0;
  std::ostringstream d;
  for (std::size_t k = 0; k < 3; ++k) {
    const auto& cell = w.evals[3 + 4 * k].cell;  // diagonal of the 3x3 block
    const double acc = w.target_accuracy[k];
    const int epochs = static_cast<int>(w.artifacts[k].curve.size());
    ok = ok && cell.white_box && acc >= 95.0 && cell.asr.percent() >= 90.0 && epochs <= 500;
    d << rnn::to_string(kCells[k]) << ": accuracy " << fmt("%.2f", acc) << "%, white-box ASR "
      << fmt("%.2f", cell.asr.percent()) << "% (" << cell.asr.misjudged << "/" << cell.asr.evaluated << ") after "
      << epochs << " epochs; ";
  }
  d << "training stream of " << data::stream_windows(w.pd.train, 8).size() << " windows, "
    << fmt("%.1f", w.build_seconds) << " s";
  return {ok, false, d.str()};
}

// -------------------------------------------------- 6: next-moment uplift

Outcome next_moment_uplift() {
  double uplift_sum = 0.0;
  bool control_ok = true;
  std::ostringstream d;
  for (std::uint64_t s : kSeeds) {
    const World& w = world(s);
    double u = 0.0;
    int n = 0;
    for (const auto& e : w.evals) {
      if (e.cell.method != "TEAM" || !e.cell.white_box) continue;
      u += e.cell.mar1.percent() - e.cell.base_mar1.percent();
      ++n;
    }
    u /= n;
    uplift_sum += u;
    d << fmt("%.1f", u) << " ";
    for (const auto& t : w.targets) {
      const auto nm = eval::next_moment_eval(t, controls(w.test_w));
      control_ok = control_ok && nm.mar1 == nm.base_mar1 && nm.mar2 == nm.base_mar2;
    }
  }
  const double mean = uplift_sum / 5.0;
  return {mean >= 10.0 && control_ok, false,
          "white-box MAR1 minus baseline per seed [" + d.str() + "] pp, mean " + fmt("%.1f", mean) +
              " pp; unperturbed control " + (control_ok ? "reproduces" : "DOES NOT reproduce") +
              " baseline MAR1/MAR2 exactly"};
}

// ------------------------------------------------ 7: time-dilation ablation

double off_diagonal_asr(const World& w, const attack::AttackArtifact& art, std::size_t k, const std::string& method,
                        std::vector<eval::CellEvaluation>* keep) {
  const auto adv = attack::team_generate(art, w.test_w);
  double sum = 0.0;
  for (std::size_t j = 0; j < 3; ++j) {
    if (j == k) continue;
    auto e = eval::evaluate_windows(w.targets[j], adv, "dos", method, rnn::to_string(kCells[k]));
    sum += e.cell.asr.percent();
    if (keep) keep->push_back(std::move(e));
  }
  return sum / 2.0;
}

Outcome dilation_ablation() {
  double ablated = 0.0, calibrated = 0.0;
  std::map<double, int> chosen;
  for (std::uint64_t s : kSeeds) {
    const World& w = world(s);
    const auto& names = w.pd.schema.class_names;
    const auto fp = w.pd.schema.fingerprint();
    const int normal = w.pd.schema.normal_index();
    extra_evals().emplace_back();
    for (std::size_t k = 0; k < 3; ++k) {
      const std::string cell = rnn::to_string(kCells[k]);
      auto base = model_config(kCells[k], true, derive_seed(s, "surrogate-" + cell));
      const auto tcfg = team_config(derive_seed(s, "team-dos-" + cell));
      auto flat = base;
      flat.hn = 1.0;
      const auto sur1 = models::train_classifier(w.pd.train, names, normal, flat, fp).model;
      const auto art1 = attack::team_train(sur1, w.attack_w, w.mask, tcfg);
      ablated += off_diagonal_asr(w, art1, k, "TEAM-hn1", &extra_evals().back());

      std::vector<const models::ClassifierModel*> others;
      for (std::size_t j = 0; j < 3; ++j) {
        if (j != k) others.push_back(&w.targets[j]);
      }
      const auto cal = synth::calibrate_hn(w.pd.train, names, normal, fp, base, tcfg, w.attack_w, w.val_w, w.mask, others);
      ++chosen[cal.grid[cal.best]];
      calibrated += off_diagonal_asr(w, cal.artifact, k, "TEAM-cal", &extra_evals().back());
    }
    progress("ablation seed " + std::to_string(s) + " done");
  }
  ablated /= 15.0;
  calibrated /= 15.0;
  std::ostringstream picks;
  for (const auto& [hn, n] : chosen) picks << "hn " << hn << " x" << n << " ";
  return {ablated <= calibrated, false,
          "mean off-diagonal ASR over 5 seeds x 3 surrogates: hn=1 " + fmt("%.2f", ablated) + "%, calibrated " +
              fmt("%.2f", calibrated) + "% (calibration picked " + picks.str() + ")"};
}

// ------------------------------------------------------ 4: metric oracle

Outcome metric_oracle() {
  std::vector<std::vector<eval::CellEvaluation>> groups;
  for (const auto& [s, w] : worlds()) groups.push_back(w.evals);
  for (const auto& g : extra_evals()) groups.push_back(g);
  if (worlds().empty()) groups.push_back(world(kSeeds[0]).evals);
  const auto path = fs::temp_directory_path() / "team_acceptance_predictions.csv";
  std::size_t cells = 0, mismatches = 0;
  for (const auto& g : groups) {
    if (g.empty()) continue;
    eval::write_prediction_log(g, path.string());
    const auto counts = oracle::recount(path.string(), "normal");
    for (const auto& e : g) {
      ++cells;
      const auto it = counts.find(e.cell.key());
      if (it == counts.end()) {
        ++mismatches;
        continue;
      }
      const auto& o = it->second;
      auto same = [](const eval::Count& c, const oracle::Pair& p) {
        return c.misjudged == p.first && c.evaluated == p.second;
      };
      if (!same(e.cell.mar, o.mar) || !same(e.cell.asr, o.asr) || !same(e.cell.mar1, o.mar1) ||
          !same(e.cell.mar2, o.mar2) || !same(e.cell.base_mar1, o.base_mar1) || !same(e.cell.base_mar2, o.base_mar2)) {
        ++mismatches;
      }
    }
  }
  fs::remove(path);
  return {mismatches == 0 && cells > 0, false,
          std::to_string(cells) + " evaluated cells recounted from raw prediction logs, " + std::to_string(mismatches) +
              " count mismatches"};
}

// -------------------------------------------------------- 8: determinism

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const auto root = fs::temp_directory_path() / "team_acceptance_determinism";
  fs::remove_all(root);
  const auto recipe = synth::load_recipe(std::string(TEAM_DATA_DIR) + "/recipes/smoke.yaml");
  const auto a = synth::run_recipe(recipe, 17, (root / "a").string());
  const auto b = synth::run_recipe(recipe, 17, (root / "b").string());
  std::size_t differing = a.files == b.files ? 0 : 1;
  std::size_t ckpts = 0;
  for (const auto& f : a.files) {
    if (slurp(fs::path(a.run_dir) / f) != slurp(fs::path(b.run_dir) / f)) ++differing;
    ckpts += f.ends_with(".ckpt") || f.ends_with(".art");
  }
  fs::remove_all(root);
  return {differing == 0, false,
          "smoke recipe run twice with seed 17: " + std::to_string(a.files.size()) + " files (" + std::to_string(ckpts) +
              " checkpoints/artifacts), " + std::to_string(differing) + " differ"};
}

// --------------------------------------------------- 9: real-data smoke

Outcome real_data_smoke() {
  const fs::path dir = fs::path(TEAM_DATA_DIR) / "nsl_kdd";
  if (!fs::exists(dir / "KDDTrain+.txt") || !fs::exists(dir / "KDDTest+.txt")) {
    return {true, true, "NSL-KDD CSVs not found at " + dir.string() + " (KDDTrain+.txt, KDDTest+.txt)"};
  }
  const auto root = fs::temp_directory_path() / "team_acceptance_nsl_kdd";
  fs::remove_all(root);
  const auto recipe = synth::load_recipe(std::string(TEAM_DATA_DIR) + "/recipes/nsl_kdd_dos.yaml");
  const auto res = synth::run_recipe(recipe, 1, root.string());
  bool ok = !res.report.cells.empty();
  for (const auto& c : res.report.cells) {
    for (const eval::Count* k : {&c.mar, &c.asr}) {
      ok = ok && k->evaluated > 0 && k->percent() >= 0.0 && k->percent() <= 100.0;
    }
  }
  const std::string table = eval::transfer_table(res.report, "dos", "TEAM", "asr");
  std::cout << table;
  return {ok, false, std::to_string(res.report.cells.size()) + " report cells, report at " + res.run_dir};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> wanted, expected_fail;
  std::string results_path;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--expect-fail" && i + 1 < argc) {
      expected_fail.insert(std::stoi(argv[++i]));
    } else if (a == "--results" && i + 1 < argc) {
      results_path = argv[++i];
    } else {
      wanted.insert(std::stoi(a));
    }
  }
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  // Criterion 4 recounts every evaluation made by 5-7, so it runs after them.
  const std::vector<Criterion> order = {
      {1, "hn=1 reduction", hn_one_reduction},
      {2, "gradient suite", gradient_suite},
      {3, "split/splice involution", split_splice},
      {5, "desk-scale white-box attack", white_box_attack},
      {6, "next-moment uplift", next_moment_uplift},
      {7, "time-dilation ablation", dilation_ablation},
      {4, "metric oracle", metric_oracle},
      {8, "determinism", determinism},
      {9, "real-data smoke", real_data_smoke},
  };
  std::map<int, std::string> lines;
  bool all = true;
  for (const auto& c : order) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    std::cerr << "running criterion " << c.id << ": " << c.name << std::endl;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, false, std::string("raised ") + e.what()};
    }
    const bool known = expected_fail.count(c.id) > 0;
    const std::string status = o.skipped ? "SKIP" : o.pass ? (known ? "XPASS" : "PASS") : (known ? "XFAIL" : "FAIL");
    all = all && (o.pass || known);
    lines[c.id] = "criterion " + std::to_string(c.id) + " " + status + " " + c.name + " (" +
                  fmt("%.1f", seconds_since(t0)) + " s): " + o.detail;
    std::cerr << "  " << lines[c.id] << std::endl;
  }
  std::ofstream results;
  if (!results_path.empty()) results.open(results_path);
  for (const auto& [id, line] : lines) {
    std::cout << line << "\n";
    if (results) results << line << "\n";
  }
  return all ? 0 : 1;
}
