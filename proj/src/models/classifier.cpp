#include "team/models/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "team/error.hpp"
#include "team/hash.hpp"
#include "team/models/container.hpp"
#include "team/nn/adam.hpp"
#include "team/nn/loss.hpp"
#include "team/rng.hpp"

namespace team::models {

const char* to_string(ModelRole r) { return r == ModelRole::target ? "target" : "surrogate"; }

ModelRole model_role_from_string(const std::string& s) {
  if (s == "target") return ModelRole::target;
  if (s == "surrogate") return ModelRole::surrogate;
  throw ConfigError("unknown model role '" + s + "' (expected target or surrogate)");
}

nn::ParamRefs ClassifierModel::params() {
  auto out = cell.params();
  out.push_back(&head.weights);
  out.push_back(&head.bias);
  return out;
}

std::vector<const nn::Param*> ClassifierModel::params() const {
  auto out = cell.params();
  out.push_back(&head.weights);
  out.push_back(&head.bias);
  return out;
}

void ClassifierModel::check_role() const {
  if (role == ModelRole::target && cell.hn() != 1.0) {
    throw AssertionFailure("target model has hn = " + std::to_string(cell.hn()) + "; targets must be undilated");
  }
}

ClassifierModel make_classifier(CellKind kind, Eigen::Index feature_width, Eigen::Index hidden_dim,
                                std::vector<std::string> class_names, int normal_class, double hn,
                                bool dilate_input_weights, ModelRole role, Rng& rng) {
  if (class_names.size() < 2) throw ConfigError("classifier needs at least two classes");
  if (normal_class < 0 || normal_class >= static_cast<int>(class_names.size())) {
    throw ConfigError("normal class index out of range");
  }
  ClassifierModel m;
  m.cell = rnn::RecurrentCell::create(kind, feature_width, hidden_dim, hn, dilate_input_weights, rng);
  m.head = nn::DenseLayer("head", hidden_dim, static_cast<Eigen::Index>(class_names.size()),
                          nn::Activation::linear, rng);
  m.class_names = std::move(class_names);
  m.normal_class = normal_class;
  m.role = role;
  m.check_role();
  return m;
}

std::string parameter_hash(const ClassifierModel& m) {
  std::string bytes = rnn::to_string(m.cell.kind());
  auto append = [&bytes](double v) {
    char buf[sizeof(double)];
    std::memcpy(buf, &v, sizeof v);
    bytes.append(buf, sizeof buf);
  };
  append(m.cell.hn());
  bytes += m.cell.dilate_input_weights() ? '1' : '0';
  for (const nn::Param* p : m.params()) {
    bytes += p->name;
    append(static_cast<double>(p->value.rows()));
    append(static_cast<double>(p->value.cols()));
    for (Eigen::Index k = 0; k < p->value.size(); ++k) append(p->value.data()[k]);
  }
  return sha256_hex(bytes);
}

// ---------------------------------------------------------------- config

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (!(lr > 0.0)) throw ConfigError("train: lr must be > 0");
  if (hidden_dim < 1) throw ConfigError("train: hidden_dim must be >= 1");
  if (time_n < 1) throw ConfigError("train: time_n must be >= 1");
  if (!(hn > 0.0) || !std::isfinite(hn)) throw ConfigError("train: hn must be finite and > 0");
  if (!(data_fraction > 0.0 && data_fraction <= 1.0)) throw ConfigError("train: data_fraction must be in (0,1]");
  if (batch < 1) throw ConfigError("train: batch must be >= 1");
  if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) {
    throw ConfigError("train: holdout_fraction must be in [0,1)");
  }
  if (role == ModelRole::target && hn != 1.0) throw ConfigError("train: a target model must use hn = 1");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"cell", rnn::to_string(cell)},
          {"role", to_string(role)},
          {"epochs", epochs},
          {"lr", lr},
          {"seed", seed},
          {"hidden_dim", hidden_dim},
          {"time_n", time_n},
          {"hn", hn},
          {"dilate_input_weights", dilate_input_weights},
          {"data_fraction", data_fraction},
          {"batch", batch},
          {"holdout_fraction", holdout_fraction}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.cell = rnn::cell_kind_from_string(j.at("cell").get<std::string>());
  c.role = model_role_from_string(j.at("role").get<std::string>());
  c.epochs = j.at("epochs").get<int>();
  c.lr = j.at("lr").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.hidden_dim = j.at("hidden_dim").get<Eigen::Index>();
  c.time_n = j.at("time_n").get<std::size_t>();
  c.hn = j.at("hn").get<double>();
  c.dilate_input_weights = j.at("dilate_input_weights").get<bool>();
  c.data_fraction = j.at("data_fraction").get<double>();
  c.batch = j.at("batch").get<std::size_t>();
  c.holdout_fraction = j.at("holdout_fraction").get<double>();
  return c;
}

TrainConfig surrogate_defaults() {
  TrainConfig c;
  c.role = ModelRole::surrogate;
  c.data_fraction = 0.5;
  c.hn = 1.5;
  return c;
}

nlohmann::json TrainReport::to_json() const {
  return {{"train_accuracy", train_accuracy},
          {"holdout_accuracy", holdout_accuracy},
          {"loss_curve", loss_curve},
          {"total_windows", total_windows},
          {"selected_windows", selected_windows},
          {"train_windows", train_windows},
          {"holdout_windows", holdout_windows},
          {"selection_hash", selection_hash}};
}

TrainReport TrainReport::from_json(const nlohmann::json& j) {
  TrainReport r;
  r.train_accuracy = j.at("train_accuracy").get<double>();
  r.holdout_accuracy = j.at("holdout_accuracy").get<double>();
  r.loss_curve = j.at("loss_curve").get<std::vector<double>>();
  r.total_windows = j.at("total_windows").get<std::size_t>();
  r.selected_windows = j.at("selected_windows").get<std::size_t>();
  r.train_windows = j.at("train_windows").get<std::size_t>();
  r.holdout_windows = j.at("holdout_windows").get<std::size_t>();
  r.selection_hash = j.at("selection_hash").get<std::string>();
  return r;
}

// ------------------------------------------------------------- training

namespace {

// Step-major batch: inputs[t] is (features x batch).
std::vector<Matrix> batch_inputs(const std::vector<const data::Window*>& ws, Eigen::Index width) {
  const std::size_t steps = ws.front()->size();
  std::vector<Matrix> out(steps, Matrix(width, static_cast<Eigen::Index>(ws.size())));
  for (std::size_t b = 0; b < ws.size(); ++b) {
    if (ws[b]->size() != steps) throw UsageError("predict: windows in a batch must share one length");
    for (std::size_t t = 0; t < steps; ++t) {
      const Vector& f = (*ws[b])[t].features;
      if (f.size() != width) {
        throw UsageError("feature width " + std::to_string(f.size()) + " does not match model input width " +
                         std::to_string(width));
      }
      out[t].col(static_cast<Eigen::Index>(b)) = f;
    }
  }
  return out;
}

std::vector<Matrix> forward_logits(const ClassifierModel& m, const std::vector<Matrix>& inputs) {
  nn::Tape tape;
  const rnn::BoundCell bound = rnn::bind_frozen(tape, m.cell);
  std::vector<nn::Var> xs;
  xs.reserve(inputs.size());
  for (const auto& x : inputs) xs.push_back(tape.constant(x));
  const auto hs = rnn::unroll(tape, bound, xs);
  std::vector<Matrix> out;
  out.reserve(hs.size());
  for (const auto& h : hs) out.push_back(tape.value(nn::dense_forward(tape, h, m.head)));
  return out;
}

double grad_norm(const nn::ParamRefs& ps) {
  double s = 0.0;
  for (const auto* p : ps) s += p->grad.squaredNorm();
  return std::sqrt(s);
}

std::string join_indices(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t x : v) s += std::to_string(x) + ",";
  return s;
}

}  // namespace

TrainResult train_classifier(const data::Dataset& ds, const std::vector<std::string>& class_names, int normal_class,
                             const TrainConfig& cfg, const std::string& schema_fingerprint, const UnrollFn& unroll) {
  cfg.validate();
  const auto windows = data::stream_windows(ds, cfg.time_n);
  if (windows.empty()) {
    throw CountError("train: " + std::to_string(ds.size()) + " records make no window of " +
                     std::to_string(cfg.time_n));
  }
  for (const auto& r : ds.records) {
    if (r.label < 0 || r.label >= static_cast<int>(class_names.size())) {
      throw InputError("train: record label " + std::to_string(r.label) + " outside the class list");
    }
  }

  TrainResult result;
  TrainReport& rep = result.report;
  rep.total_windows = windows.size();

  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), 0);
  Rng select_rng(derive_seed(cfg.seed, "select"));
  team::shuffle(order.begin(), order.end(), select_rng);
  const auto selected = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(cfg.data_fraction * static_cast<double>(windows.size()))));
  order.resize(std::min(selected, order.size()));
  rep.selected_windows = order.size();
  rep.selection_hash = sha256_hex(join_indices(order));

  std::size_t holdout = 0;
  if (order.size() >= 2) {
    holdout = static_cast<std::size_t>(std::floor(cfg.holdout_fraction * static_cast<double>(order.size())));
  }
  std::vector<std::size_t> train_idx(order.begin(), order.end() - static_cast<std::ptrdiff_t>(holdout));
  std::vector<std::size_t> holdout_idx(order.end() - static_cast<std::ptrdiff_t>(holdout), order.end());
  rep.train_windows = train_idx.size();
  rep.holdout_windows = holdout_idx.size();

  Rng init_rng(derive_seed(cfg.seed, "init"));
  ClassifierModel m = make_classifier(cfg.cell, static_cast<Eigen::Index>(ds.feature_width), cfg.hidden_dim,
                                      class_names, normal_class, cfg.hn, cfg.dilate_input_weights, cfg.role,
                                      init_rng);
  m.schema_fingerprint = schema_fingerprint;

  nn::AdamState adam(cfg.lr);
  const nn::ParamRefs params = m.params();
  Rng order_rng(derive_seed(cfg.seed, "order"));
  const Eigen::Index width = static_cast<Eigen::Index>(ds.feature_width);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    team::shuffle(train_idx.begin(), train_idx.end(), order_rng);
    double epoch_loss = 0.0;
    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < train_idx.size(); start += cfg.batch, ++batch_no) {
      const std::size_t end = std::min(train_idx.size(), start + cfg.batch);
      std::vector<const data::Window*> batch;
      for (std::size_t k = start; k < end; ++k) batch.push_back(&windows[train_idx[k]]);
      const auto inputs = batch_inputs(batch, width);
      const double inv_b = 1.0 / static_cast<double>(batch.size());
      const std::vector<double> weights(batch.size(), inv_b);

      nn::Tape tape;
      std::vector<nn::Var> xs;
      for (const auto& x : inputs) xs.push_back(tape.constant(x));
      std::vector<nn::Var> hs;
      if (unroll) {
        hs = unroll(tape, m.cell, xs);
      } else {
        hs = rnn::unroll(tape, rnn::bind_trainable(tape, m.cell), xs);
      }
      nn::Var loss;
      for (std::size_t t = 0; t < hs.size(); ++t) {
        std::vector<int> targets(batch.size());
        for (std::size_t b = 0; b < batch.size(); ++b) targets[b] = (*batch[b])[t].label;
        const nn::Var logits = nn::dense_forward(tape, hs[t], m.head, true);
        const nn::Var ce = tape.softmax_cross_entropy(logits, targets, weights);
        loss = t == 0 ? ce : tape.add(loss, ce);
      }
      nn::zero_grads(params);
      tape.backward(loss);
      const double value = tape.scalar(loss);
      if (!std::isfinite(value)) {
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch_no) + " (grad norm " + std::to_string(grad_norm(params)) + ")");
      }
      nn::adam_step(params, adam);
      for (const auto* p : params) {
        if (!nn::all_finite(p->value)) {
          throw NumericError("train: parameter " + p->name + " became non-finite at epoch " +
                             std::to_string(epoch) + ", batch " + std::to_string(batch_no) + " (grad norm " +
                             std::to_string(grad_norm(params)) + ")");
        }
      }
      epoch_loss += value * static_cast<double>(batch.size());
    }
    rep.loss_curve.push_back(epoch_loss / static_cast<double>(train_idx.size()));
  }

  auto collect = [&](const std::vector<std::size_t>& idx) {
    std::vector<data::Window> out;
    out.reserve(idx.size());
    for (std::size_t k : idx) out.push_back(windows[k]);
    return out;
  };
  std::sort(train_idx.begin(), train_idx.end());
  rep.train_accuracy = accuracy(m, collect(train_idx));
  rep.holdout_accuracy = holdout_idx.empty() ? rep.train_accuracy : accuracy(m, collect(holdout_idx));
  result.model = std::move(m);
  return result;
}

// ----------------------------------------------------------- prediction

std::vector<Prediction> predict_windows(const ClassifierModel& m, const std::vector<data::Window>& ws) {
  std::vector<Prediction> out;
  if (ws.empty()) return out;
  for (const auto& w : ws) {
    if (w.empty()) throw InputError("predict: empty window");
  }
  constexpr std::size_t kChunk = 256;
  out.reserve(ws.size());
  for (std::size_t start = 0; start < ws.size(); start += kChunk) {
    const std::size_t end = std::min(ws.size(), start + kChunk);
    std::vector<const data::Window*> batch;
    for (std::size_t k = start; k < end; ++k) batch.push_back(&ws[k]);
    const auto logits = forward_logits(m, batch_inputs(batch, m.feature_width()));
    const Eigen::Index classes = static_cast<Eigen::Index>(m.class_count());
    for (std::size_t b = 0; b < batch.size(); ++b) {
      Prediction p;
      p.logits.resize(classes, static_cast<Eigen::Index>(logits.size()));
      for (std::size_t t = 0; t < logits.size(); ++t) {
        p.logits.col(static_cast<Eigen::Index>(t)) = logits[t].col(static_cast<Eigen::Index>(b));
        p.labels.push_back(nn::argmax(p.logits.col(static_cast<Eigen::Index>(t))));
      }
      out.push_back(std::move(p));
    }
  }
  return out;
}

Prediction predict_window(const ClassifierModel& m, const data::Window& w) {
  return predict_windows(m, std::vector<data::Window>{w}).front();
}

double accuracy(const ClassifierModel& m, const std::vector<data::Window>& ws) {
  const auto preds = predict_windows(m, ws);
  std::size_t hit = 0, total = 0;
  for (std::size_t k = 0; k < ws.size(); ++k) {
    for (std::size_t t = 0; t < ws[k].size(); ++t) {
      hit += preds[k].labels[t] == ws[k][t].label;
      ++total;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(total);
}

// ----------------------------------------------------------- checkpoint

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  const ClassifierModel& m = ckpt.model;
  Container c;
  c.kind = "classifier";
  c.meta = {{"cell", rnn::to_string(m.cell.kind())},
            {"role", to_string(m.role)},
            {"hn", m.cell.hn()},
            {"dilate_input_weights", m.cell.dilate_input_weights()},
            {"input_dim", m.cell.input_dim()},
            {"hidden_dim", m.cell.hidden_dim()},
            {"class_names", m.class_names},
            {"normal_class", m.normal_class},
            {"schema_fingerprint", m.schema_fingerprint},
            {"config", ckpt.config.to_json()},
            {"report", ckpt.report.to_json()}};
  for (const nn::Param* p : m.params()) c.tensors.emplace_back(p->name, p->value);
  write_container(path, c);
}

Checkpoint load_checkpoint(const std::string& path) {
  const Container c = read_container(path);
  if (c.kind != "classifier") throw IntegrityError("'" + path + "' holds a '" + c.kind + "', not a classifier");
  Checkpoint ck;
  try {
    const auto& j = c.meta;
    Rng dummy(0);
    ck.model = make_classifier(rnn::cell_kind_from_string(j.at("cell").get<std::string>()),
                               j.at("input_dim").get<Eigen::Index>(), j.at("hidden_dim").get<Eigen::Index>(),
                               j.at("class_names").get<std::vector<std::string>>(), j.at("normal_class").get<int>(),
                               j.at("hn").get<double>(), j.at("dilate_input_weights").get<bool>(),
                               model_role_from_string(j.at("role").get<std::string>()), dummy);
    ck.model.schema_fingerprint = j.at("schema_fingerprint").get<std::string>();
    ck.config = TrainConfig::from_json(j.at("config"));
    ck.report = TrainReport::from_json(j.at("report"));
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError("checkpoint '" + path + "' metadata: " + e.what());
  }
  for (nn::Param* p : ck.model.params()) {
    const Matrix& v = c.tensor(p->name);
    if (v.rows() != p->value.rows() || v.cols() != p->value.cols()) {
      throw IntegrityError("checkpoint tensor '" + p->name + "' has the wrong shape");
    }
    p->value = v;
    p->zero_grad();
  }
  return ck;
}

std::string normalizer_path(const std::string& checkpoint_path) { return checkpoint_path + ".norm.json"; }

}  // namespace team::models
