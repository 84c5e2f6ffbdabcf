#include "team/attack/team.hpp"

#include <cmath>
#include <numeric>

#include "team/error.hpp"
#include "team/models/container.hpp"
#include "team/nn/adam.hpp"
#include "team/rng.hpp"

namespace team::attack {

const char* to_string(Provenance p) { return p == Provenance::ae ? "AE" : "OE"; }

std::size_t AdversarialWindow::adv_count() const {
  std::size_t n = 0;
  for (auto t : tags) n += t == Provenance::ae;
  return n;
}

data::FeatureMask AttackArtifact::mask() const {
  std::vector<bool> nf(static_cast<std::size_t>(feature_width), false);
  for (std::size_t k : nonfunctional) nf.at(k) = true;
  return data::feature_mask(nf);
}

// --------------------------------------------------------------- config

void AttackConfig::validate() const {
  if (attack_type.empty()) throw ConfigError("attack: attack_type is required");
  if (adv_n + org_n != time_n) {
    throw ConfigError("attack: adv_n (" + std::to_string(adv_n) + ") + org_n (" + std::to_string(org_n) +
                      ") must equal time_n (" + std::to_string(time_n) + ")");
  }
  if (adv_n < 1) throw ConfigError("attack: adv_n must be >= 1");
  if (epochs < 1) throw ConfigError("attack: epochs must be >= 1");
  if (!(lr > 0.0)) throw ConfigError("attack: lr must be > 0");
  if (!(hn >= 0.0) || !std::isfinite(hn)) throw ConfigError("attack: hn must be finite and >= 0");
  if (!(org_weight >= 0.0)) throw ConfigError("attack: org_weight must be >= 0");
  if (batch < 1) throw ConfigError("attack: batch must be >= 1");
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) throw ConfigError("attack: val_fraction must be in [0,1)");
  if (pretrain_epochs < 0) throw ConfigError("attack: pretrain_epochs must be >= 0");
}

nlohmann::json AttackConfig::to_json() const {
  return {{"attack_type", attack_type}, {"time_n", time_n},
          {"adv_n", adv_n},             {"org_n", org_n},
          {"epochs", epochs},           {"lr", lr},
          {"seed", seed},               {"hn", hn},
          {"keep_best", keep_best},     {"stop_at_perfect", stop_at_perfect},
          {"org_weight", org_weight},   {"batch", batch},
          {"val_fraction", val_fraction}, {"hidden", hidden},
          {"pretrain_epochs", pretrain_epochs}};
}

AttackConfig AttackConfig::from_json(const nlohmann::json& j) {
  AttackConfig c;
  c.attack_type = j.at("attack_type").get<std::string>();
  c.time_n = j.at("time_n").get<std::size_t>();
  c.adv_n = j.at("adv_n").get<std::size_t>();
  c.org_n = j.at("org_n").get<std::size_t>();
  c.epochs = j.at("epochs").get<int>();
  c.lr = j.at("lr").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.hn = j.at("hn").get<double>();
  c.keep_best = j.at("keep_best").get<bool>();
  c.stop_at_perfect = j.at("stop_at_perfect").get<bool>();
  c.org_weight = j.at("org_weight").get<double>();
  c.batch = j.at("batch").get<std::size_t>();
  c.val_fraction = j.at("val_fraction").get<double>();
  c.hidden = j.at("hidden").get<std::vector<Eigen::Index>>();
  c.pretrain_epochs = j.at("pretrain_epochs").get<int>();
  return c;
}

// ---------------------------------------------------------- composition

namespace {

Matrix step_matrix(std::span<const data::TimeStepComposition* const> batch, std::size_t t, Eigen::Index width) {
  Matrix x(width, static_cast<Eigen::Index>(batch.size()));
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto* c = batch[b];
    const data::Record& r = t < c->adv_slots.size() ? c->adv_slots[t] : c->org_slots[t - c->adv_slots.size()];
    if (r.features.size() != width) {
      throw UsageError("attack: record width " + std::to_string(r.features.size()) + " does not match " +
                       std::to_string(width));
    }
    x.col(static_cast<Eigen::Index>(b)) = r.features;
  }
  return x;
}

Matrix select_rows(const Matrix& x, const std::vector<std::size_t>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = x.row(static_cast<Eigen::Index>(rows[k]));
  return out;
}

void check_mask(const AutoEncoder& ae, const data::FeatureMask& mask) {
  if (static_cast<Eigen::Index>(mask.nonfunctional.size()) != ae.width) {
    throw UsageError("attack: mask has " + std::to_string(mask.nonfunctional.size()) +
                     " non-functional features, autoencoder width is " + std::to_string(ae.width));
  }
}

// Composes a batch with one autoencoder pass over every adv slot.
std::vector<AdversarialWindow> compose_batch(const std::vector<data::TimeStepComposition>& comps,
                                             const AutoEncoder& ae, const data::FeatureMask& mask) {
  check_mask(ae, mask);
  std::vector<AdversarialWindow> out;
  out.reserve(comps.size());
  std::size_t slots = 0;
  for (const auto& c : comps) slots += c.adv_slots.size();
  Matrix nf(ae.width, static_cast<Eigen::Index>(slots));
  Eigen::Index col = 0;
  for (const auto& c : comps) {
    for (const auto& r : c.adv_slots) {
      if (static_cast<std::size_t>(r.features.size()) != mask.width) {
        throw UsageError("attack: record width " + std::to_string(r.features.size()) + " does not match mask width " +
                         std::to_string(mask.width));
      }
      for (std::size_t k = 0; k < mask.nonfunctional.size(); ++k) {
        nf(static_cast<Eigen::Index>(k), col) = r.features[static_cast<Eigen::Index>(mask.nonfunctional[k])];
      }
      ++col;
    }
  }
  Matrix rec = nf;
  if (!ae.is_identity() && slots > 0) {
    nn::Tape tape;
    rec = tape.value(autoencoder_forward(tape, tape.constant(nf), ae));
  }
  col = 0;
  for (const auto& c : comps) {
    AdversarialWindow w;
    w.attack_type = c.attack_type;
    w.source_index = c.source_index;
    w.original = c.records();
    for (const auto& r : c.adv_slots) {
      data::Record a = r;
      for (std::size_t k = 0; k < mask.nonfunctional.size(); ++k) {
        a.features[static_cast<Eigen::Index>(mask.nonfunctional[k])] = rec(static_cast<Eigen::Index>(k), col);
      }
      ++col;
      w.records.push_back(std::move(a));
      w.tags.push_back(Provenance::ae);
    }
    for (const auto& r : c.org_slots) {
      w.records.push_back(r);
      w.tags.push_back(Provenance::oe);
    }
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace

AdversarialWindow compose_window(const data::TimeStepComposition& comp, const AutoEncoder& ae,
                                 const data::FeatureMask& mask) {
  return compose_batch({comp}, ae, mask).front();
}

AdversarialWindow unperturbed_window(const data::TimeStepComposition& comp) {
  AdversarialWindow w;
  w.attack_type = comp.attack_type;
  w.source_index = comp.source_index;
  w.original = comp.records();
  w.records = w.original;
  w.tags.assign(comp.adv_slots.size(), Provenance::ae);
  w.tags.resize(w.records.size(), Provenance::oe);
  return w;
}

// ----------------------------------------------------------------- loss

TeamGraph build_team_graph(nn::Tape& tape, const models::ClassifierModel& surrogate, AutoEncoder& ae,
                           std::span<const data::TimeStepComposition* const> batch, const data::FeatureMask& mask,
                           double org_weight, double window_weight) {
  if (batch.empty()) throw UsageError("attack: empty batch");
  check_mask(ae, mask);
  const std::size_t adv_n = batch.front()->adv_slots.size();
  const std::size_t steps = batch.front()->time_n();
  for (const auto* c : batch) {
    if (c->adv_slots.size() != adv_n || c->time_n() != steps) {
      throw UsageError("attack: windows in a batch must share adv_n and time_n");
    }
  }
  const Eigen::Index width = surrogate.feature_width();
  if (static_cast<std::size_t>(width) != mask.width) {
    throw UsageError("attack: surrogate width " + std::to_string(width) + " does not match mask width " +
                     std::to_string(mask.width));
  }

  const rnn::BoundCell bound = rnn::bind_frozen(tape, surrogate.cell);
  std::vector<nn::Var> xs;
  for (std::size_t t = 0; t < steps; ++t) {
    Matrix x = step_matrix(batch, t, width);
    if (t < adv_n && !ae.is_identity()) {
      const nn::Var rec = autoencoder_forward(tape, tape.constant(select_rows(x, mask.nonfunctional)), ae, true);
      xs.push_back(tape.scatter_rows(rec, mask.nonfunctional, x));
    } else {
      xs.push_back(tape.constant(std::move(x)));
    }
  }
  const auto hs = rnn::unroll(tape, bound, xs);
  const std::vector<int> targets(batch.size(), surrogate.normal_class);
  const std::vector<double> weights(batch.size(), window_weight);
  TeamGraph g;
  for (std::size_t t = 0; t < steps; ++t) {
    const nn::Var logits = nn::dense_forward(tape, hs[t], surrogate.head);
    const nn::Var ce = tape.softmax_cross_entropy(logits, targets, weights);
    if (t < adv_n) {
      g.adv = t == 0 ? ce : tape.add(g.adv, ce);
    } else {
      g.org = t == adv_n ? ce : tape.add(*g.org, ce);
    }
  }
  g.total = g.org ? tape.add(g.adv, tape.scale(*g.org, org_weight)) : g.adv;
  return g;
}

double surrogate_success(const models::ClassifierModel& model, const std::vector<AdversarialWindow>& windows) {
  std::vector<data::Window> ws;
  ws.reserve(windows.size());
  for (const auto& w : windows) ws.push_back(w.records);
  const auto preds = models::predict_windows(model, ws);
  std::size_t hit = 0, total = 0;
  for (const auto& p : preds) {
    for (int l : p.labels) {
      hit += l == model.normal_class;
      ++total;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(total);
}

// ------------------------------------------------------------- training

AttackArtifact team_train(const models::ClassifierModel& surrogate,
                          const std::vector<data::TimeStepComposition>& windows, const data::FeatureMask& mask,
                          const AttackConfig& cfg) {
  cfg.validate();
  if (cfg.hn > 0.0 && cfg.hn != surrogate.cell.hn()) {
    throw ConfigError("attack: configured hn " + std::to_string(cfg.hn) + " does not match the surrogate's " +
                      std::to_string(surrogate.cell.hn()));
  }
  if (windows.empty()) throw CountError("attack: no training windows");
  for (const auto& w : windows) {
    if (w.adv_slots.size() != cfg.adv_n || w.org_slots.size() != cfg.org_n) {
      throw ConfigError("attack: window composition does not match adv_n/org_n");
    }
    if (w.attack_type != windows.front().attack_type) throw UsageError("attack: windows mix attack types");
  }
  if (mask.nonfunctional.empty()) throw ConfigError("attack: the mask marks no non-functional feature");
  const std::string frozen_hash = models::parameter_hash(surrogate);

  std::size_t n_val = 0;
  if (windows.size() >= 2) {
    n_val = std::min(windows.size() - 1,
                     static_cast<std::size_t>(std::floor(cfg.val_fraction * static_cast<double>(windows.size()))));
  }
  std::vector<const data::TimeStepComposition*> train;
  for (std::size_t k = 0; k + n_val < windows.size(); ++k) train.push_back(&windows[k]);
  std::vector<data::TimeStepComposition> val(windows.end() - static_cast<std::ptrdiff_t>(n_val), windows.end());
  if (val.empty()) val = windows;

  AttackArtifact art;
  art.config = cfg;
  art.attack_class = windows.front().attack_type;
  art.normal_class = surrogate.normal_class;
  art.feature_width = static_cast<Eigen::Index>(mask.width);
  art.nonfunctional = mask.nonfunctional;
  art.schema_fingerprint = surrogate.schema_fingerprint;
  art.surrogate_hash = frozen_hash;
  art.surrogate_cell = rnn::to_string(surrogate.cell.kind());
  art.surrogate_hn = surrogate.cell.hn();

  const auto width = static_cast<Eigen::Index>(mask.nonfunctional.size());
  Rng init_rng(derive_seed(cfg.seed, "ae-init"));
  AutoEncoder ae = AutoEncoder::create(width, cfg.hidden.empty() ? default_hidden_widths(width) : cfg.hidden, init_rng);

  if (cfg.pretrain_epochs > 0) {
    std::vector<Vector> samples;
    for (const auto* c : train) {
      for (const auto& r : c->adv_slots) samples.push_back(data::split_features(r.features, mask).nonfunctional.values);
    }
    PretrainConfig pc;
    pc.epochs = cfg.pretrain_epochs;
    pc.lr = cfg.lr;
    pc.seed = derive_seed(cfg.seed, "pretrain");
    pretrain_identity(ae, samples, pc);
  }

  nn::AdamState adam(cfg.lr);
  const auto params = ae.params();
  Rng order_rng(derive_seed(cfg.seed, "order"));
  AutoEncoder best = ae;
  const double n_train = static_cast<double>(train.size());

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    team::shuffle(train.begin(), train.end(), order_rng);
    EpochStats st;
    for (std::size_t start = 0; start < train.size(); start += cfg.batch) {
      const std::size_t end = std::min(train.size(), start + cfg.batch);
      const std::span<const data::TimeStepComposition* const> batch(train.data() + start, end - start);
      const double bsize = static_cast<double>(batch.size());
      nn::Tape tape;
      const TeamGraph g = build_team_graph(tape, surrogate, ae, batch, mask, cfg.org_weight, 1.0 / bsize);
      nn::zero_grads(params);
      tape.backward(g.total);
      const double total = tape.scalar(g.total);
      if (!std::isfinite(total)) {
        double norm = 0.0;
        for (const auto* p : params) norm += p->grad.squaredNorm();
        throw NumericError("attack: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(start / cfg.batch) + " (grad norm " + std::to_string(std::sqrt(norm)) + ")");
      }
      nn::adam_step(params, adam);
      st.total += total * bsize;
      st.adv += tape.scalar(g.adv) * bsize;
      if (g.org) st.org += tape.scalar(*g.org) * bsize;
    }
    st.total /= n_train;
    st.adv /= n_train;
    st.org /= n_train;
    st.val_success = surrogate_success(surrogate, compose_batch(val, ae, mask));
    art.curve.push_back(st);
    if (art.best_epoch < 0 || st.val_success > art.best_val_success) {
      art.best_epoch = epoch;
      art.best_val_success = st.val_success;
      best = ae;
    }
    if (cfg.stop_at_perfect && st.val_success >= 1.0) break;
  }
  art.ae = cfg.keep_best ? best : ae;
  if (!cfg.keep_best) {
    art.best_epoch = static_cast<int>(art.curve.size()) - 1;
    art.best_val_success = art.curve.back().val_success;
  }
  if (models::parameter_hash(surrogate) != frozen_hash) {
    throw AssertionFailure("attack: surrogate parameters changed during training");
  }
  return art;
}

std::vector<AdversarialWindow> team_generate(const AttackArtifact& artifact,
                                             const std::vector<data::TimeStepComposition>& windows) {
  for (const auto& w : windows) {
    if (w.attack_type != artifact.attack_class) {
      throw UsageError("generate: window of class " + std::to_string(w.attack_type) + " given to an artifact for class " +
                       std::to_string(artifact.attack_class));
    }
    if (w.adv_slots.size() != artifact.config.adv_n) {
      throw UsageError("generate: window has " + std::to_string(w.adv_slots.size()) + " adv slots, artifact expects " +
                       std::to_string(artifact.config.adv_n));
    }
  }
  return compose_batch(windows, artifact.ae, artifact.mask());
}

// ------------------------------------------------------------- artifact

void save_artifact(const AttackArtifact& a, const std::string& path) {
  models::Container c;
  c.kind = "team-attack";
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& e : a.curve) {
    curve.push_back({{"total", e.total}, {"adv", e.adv}, {"org", e.org}, {"val_success", e.val_success}});
  }
  c.meta = {{"config", a.config.to_json()},
            {"attack_class", a.attack_class},
            {"normal_class", a.normal_class},
            {"feature_width", a.feature_width},
            {"nonfunctional", a.nonfunctional},
            {"schema_fingerprint", a.schema_fingerprint},
            {"surrogate_hash", a.surrogate_hash},
            {"surrogate_cell", a.surrogate_cell},
            {"surrogate_hn", a.surrogate_hn},
            {"ae_width", a.ae.width},
            {"ae_hidden", a.ae.hidden_widths()},
            {"ae_identity", a.ae.is_identity()},
            {"curve", curve},
            {"best_epoch", a.best_epoch},
            {"best_val_success", a.best_val_success}};
  for (const auto* p : a.ae.params()) c.tensors.emplace_back(p->name, p->value);
  models::write_container(path, c);
}

AttackArtifact load_artifact(const std::string& path) {
  const auto c = models::read_container(path);
  if (c.kind != "team-attack") throw IntegrityError("'" + path + "' holds a '" + c.kind + "', not a TEAM artifact");
  AttackArtifact a;
  try {
    const auto& j = c.meta;
    a.config = AttackConfig::from_json(j.at("config"));
    a.attack_class = j.at("attack_class").get<int>();
    a.normal_class = j.at("normal_class").get<int>();
    a.feature_width = j.at("feature_width").get<Eigen::Index>();
    a.nonfunctional = j.at("nonfunctional").get<std::vector<std::size_t>>();
    a.schema_fingerprint = j.at("schema_fingerprint").get<std::string>();
    a.surrogate_hash = j.at("surrogate_hash").get<std::string>();
    a.surrogate_cell = j.at("surrogate_cell").get<std::string>();
    a.surrogate_hn = j.at("surrogate_hn").get<double>();
    for (const auto& e : j.at("curve")) {
      a.curve.push_back({e.at("total").get<double>(), e.at("adv").get<double>(), e.at("org").get<double>(),
                         e.at("val_success").get<double>()});
    }
    a.best_epoch = j.at("best_epoch").get<int>();
    a.best_val_success = j.at("best_val_success").get<double>();
    const auto width = j.at("ae_width").get<Eigen::Index>();
    if (j.at("ae_identity").get<bool>()) {
      a.ae = AutoEncoder::identity(width);
    } else {
      Rng dummy(0);
      a.ae = AutoEncoder::create(width, j.at("ae_hidden").get<std::vector<Eigen::Index>>(), dummy);
    }
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError("artifact '" + path + "' metadata: " + e.what());
  }
  for (auto* p : a.ae.params()) {
    const Matrix& v = c.tensor(p->name);
    if (v.rows() != p->value.rows() || v.cols() != p->value.cols()) {
      throw IntegrityError("artifact tensor '" + p->name + "' has the wrong shape");
    }
    p->value = v;
    p->zero_grad();
  }
  if (a.nonfunctional.size() != static_cast<std::size_t>(a.ae.width)) {
    throw IntegrityError("artifact mask and autoencoder width disagree");
  }
  return a;
}

}  // namespace team::attack
