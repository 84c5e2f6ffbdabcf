#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "../fixtures.hpp"
#include "team/data/windows.hpp"
#include "team/error.hpp"
#include "team/models/classifier.hpp"
#include "team/models/container.hpp"
#include "team/rng.hpp"

using namespace team;
using namespace team::models;
namespace fs = std::filesystem;

namespace {

const testing::SyntheticSplit& split() {
  static const testing::SyntheticSplit s = testing::make_split(testing::small_config(), 21);
  return s;
}

TrainConfig quick(CellKind kind) {
  TrainConfig c;
  c.cell = kind;
  c.hidden_dim = 16;
  c.epochs = 100;
  c.lr = 0.01;
  c.seed = 4;
  return c;
}

TrainResult train(const TrainConfig& c) {
  return train_classifier(split().train, split().schema.class_names, 0, c, split().schema.fingerprint());
}

std::string tmp_path(const std::string& name) {
  return (fs::temp_directory_path() / ("team_test_models_" + name)).string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Textbook cells on the tape, written without any dilation nodes.
std::vector<nn::Var> reference_unroll(nn::Tape& t, rnn::RecurrentCell& cell, const std::vector<nn::Var>& xs) {
  const Eigen::Index batch = t.value(xs.front()).cols();
  const Eigen::Index hid = cell.hidden_dim();
  nn::Var h = t.constant(Matrix::Zero(hid, batch));
  nn::Var cc = t.constant(Matrix::Zero(hid, batch));
  auto aff = [&t](nn::Param& wx, nn::Var x, nn::Param& wh, nn::Var hh, nn::Param& b) {
    return t.add_bias(t.add(t.matmul(t.parameter(wx), x), t.matmul(t.parameter(wh), hh)), t.parameter(b));
  };
  std::vector<nn::Var> out;
  for (const auto& x : xs) {
    if (auto* p = std::get_if<rnn::OrnnParams>(&cell.variant())) {
      h = t.tanh(aff(p->w_xh, x, p->w_hh, h, p->b_h));
    } else if (auto* p = std::get_if<rnn::LstmParams>(&cell.variant())) {
      const auto f = t.sigmoid(aff(p->w_xf, x, p->w_hf, h, p->b_f));
      const auto i = t.sigmoid(aff(p->w_xi, x, p->w_hi, h, p->b_i));
      const auto c = t.tanh(aff(p->w_xc, x, p->w_hc, h, p->b_c));
      const auto o = t.sigmoid(aff(p->w_xo, x, p->w_ho, h, p->b_o));
      cc = t.add(t.mul(f, cc), t.mul(i, c));
      h = t.mul(o, t.tanh(cc));
    } else {
      auto& g = std::get<rnn::GruParams>(cell.variant());
      const auto r = t.sigmoid(aff(g.w_xr, x, g.w_hr, h, g.b_r));
      const auto z = t.sigmoid(aff(g.w_xz, x, g.w_hz, h, g.b_z));
      const auto cand = t.tanh(aff(g.w_xh, x, g.w_hh, t.mul(r, h), g.b_h));
      h = t.add(t.mul(z, cand), t.mul(t.one_minus(z), h));
    }
    out.push_back(h);
  }
  return out;
}

}  // namespace

TEST_CASE("separable synthetic data trains to >= 0.95 held-out accuracy") {
  for (CellKind kind : {CellKind::ornn, CellKind::lstm, CellKind::gru}) {
    CAPTURE(rnn::to_string(kind));
    const auto r = train(quick(kind));
    CHECK(r.report.holdout_accuracy >= 0.95);
    CHECK(r.report.loss_curve.size() == 100);
    CHECK(r.report.loss_curve.back() < r.report.loss_curve.front());
    for (const auto* p : r.model.params()) CHECK(nn::all_finite(p->value));
  }
}

TEST_CASE("data_fraction selects a seeded prefix") {
  auto c = quick(CellKind::ornn);
  c.epochs = 1;
  c.data_fraction = 0.5;
  const auto a = train(c).report;
  const auto b = train(c).report;
  CHECK(a.selection_hash == b.selection_hash);
  CHECK(a.selected_windows == (a.total_windows + 1) / 2);
  c.seed = 5;
  CHECK(train(c).report.selection_hash != a.selection_hash);
}

TEST_CASE("hn = 1 training matches an undilated reference trainer") {
  for (CellKind kind : {CellKind::ornn, CellKind::lstm, CellKind::gru}) {
    CAPTURE(rnn::to_string(kind));
    auto c = quick(kind);
    c.epochs = 3;
    const auto lib = train(c);
    const auto ref = train_classifier(split().train, split().schema.class_names, 0, c, "", reference_unroll);
    const auto a = lib.model.params();
    const auto b = ref.model.params();
    REQUIRE(a.size() == b.size());
    double worst = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      worst = std::max(worst, (a[k]->value - b[k]->value).cwiseAbs().maxCoeff());
    }
    CHECK(worst <= 1e-12);
  }
}

TEST_CASE("training is deterministic") {
  auto c = quick(CellKind::gru);
  c.epochs = 2;
  CHECK(parameter_hash(train(c).model) == parameter_hash(train(c).model));
}

TEST_CASE("config validation") {
  auto c = quick(CellKind::lstm);
  c.hn = 2.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.role = ModelRole::surrogate;
  CHECK_NOTHROW(c.validate());
  c.epochs = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK(surrogate_defaults().data_fraction == 0.5);
  CHECK(TrainConfig().data_fraction == 1.0);
}

TEST_CASE("predict_window") {
  static const auto model = train(quick(CellKind::lstm)).model;
  SUBCASE("normal windows predict normal at every step") {
    std::size_t windows = 0, clean = 0;
    for (const auto& w : data::stream_windows(split().test, 8)) {
      bool all_normal = true;
      for (const auto& r : w) all_normal = all_normal && r.label == 0;
      if (!all_normal) continue;
      ++windows;
      const auto p = predict_window(model, w);
      clean += std::all_of(p.labels.begin(), p.labels.end(), [](int l) { return l == 0; });
    }
    CHECK(windows > 10);
    CHECK(static_cast<double>(clean) >= 0.95 * static_cast<double>(windows));
    MESSAGE(clean << " of " << windows << " normal windows fully normal");
  }
  SUBCASE("wrong feature width") {
    data::Window w(8, data::Record{Vector::Zero(3), 0});
    CHECK_THROWS_AS(predict_window(model, w), UsageError);
  }
  SUBCASE("replacing step 1 changes step 2 logits") {
    auto w = data::stream_windows(split().test, 8).front();
    const auto before = predict_window(model, w);
    w[0].features = Vector::Constant(w[0].features.size(), 0.9);
    const auto after = predict_window(model, w);
    CHECK((before.logits.col(1) - after.logits.col(1)).norm() > 1e-6);
    CHECK(before.logits.cols() == 8);
  }
}

TEST_CASE("single-step ORNN prediction ignores hn") {
  Rng rng(3);
  auto m = make_classifier(CellKind::ornn, 5, 4, {"normal", "dos"}, 0, 1.0, true, ModelRole::surrogate, rng);
  data::Window w{data::Record{Vector::Random(5), 1}};
  const auto a = predict_window(m, w);
  m.cell.set_hn(3.0);
  const auto b = predict_window(m, w);
  CHECK(a.logits == b.logits);
}

TEST_CASE("target purity") {
  Rng rng(3);
  auto m = make_classifier(CellKind::gru, 5, 4, {"normal", "dos"}, 0, 1.0, true, ModelRole::target, rng);
  CHECK_NOTHROW(m.check_role());
  m.cell.set_hn(1.5);
  CHECK_THROWS_AS(m.check_role(), AssertionFailure);
  CHECK_THROWS_AS(make_classifier(CellKind::gru, 5, 4, {"normal", "dos"}, 0, 2.0, true, ModelRole::target, rng),
                  AssertionFailure);
}

TEST_CASE("checkpoint round trip") {
  auto c = quick(CellKind::gru);
  c.epochs = 5;
  c.role = ModelRole::surrogate;
  c.hn = 1.5;
  c.data_fraction = 0.5;
  const auto r = train(c);
  const auto p1 = tmp_path("a.ckpt");
  const auto p2 = tmp_path("b.ckpt");
  save_checkpoint({r.model, c, r.report}, p1);
  const auto loaded = load_checkpoint(p1);
  save_checkpoint(loaded, p2);
  CHECK(slurp(p1) == slurp(p2));
  CHECK(parameter_hash(loaded.model) == parameter_hash(r.model));
  CHECK(loaded.model.cell.hn() == 1.5);
  CHECK(loaded.config.to_json() == c.to_json());
  CHECK(loaded.report.selection_hash == r.report.selection_hash);

  SUBCASE("loaded model reproduces predictions on 100 windows") {
    auto ws = data::stream_windows(split().test, 8);
    ws.resize(100);
    const auto a = predict_windows(r.model, ws);
    const auto b = predict_windows(loaded.model, ws);
    for (std::size_t k = 0; k < ws.size(); ++k) {
      CHECK(a[k].labels == b[k].labels);
      CHECK(a[k].logits == b[k].logits);
    }
  }
  SUBCASE("truncation") {
    const std::string bytes = slurp(p1);
    for (std::size_t cut : {std::size_t{0}, std::size_t{5}, std::size_t{20}, bytes.size() / 2, bytes.size() - 1}) {
      std::ofstream(p2, std::ios::binary | std::ios::trunc).write(bytes.data(), static_cast<std::streamsize>(cut));
      CHECK_THROWS_AS(load_checkpoint(p2), IntegrityError);
    }
  }
  SUBCASE("flipped byte") {
    std::string bytes = slurp(p1);
    bytes[bytes.size() / 2] ^= 0x10;
    std::ofstream(p2, std::ios::binary | std::ios::trunc) << bytes;
    CHECK_THROWS_AS(load_checkpoint(p2), IntegrityError);
  }
  SUBCASE("version skew") {
    std::string bytes = slurp(p1);
    bytes[8] = 9;
    std::ofstream(p2, std::ios::binary | std::ios::trunc) << bytes;
    CHECK_THROWS_AS(load_checkpoint(p2), IntegrityError);
  }
  std::remove(p1.c_str());
  std::remove(p2.c_str());
}

TEST_CASE("container rejects a different payload kind") {
  Container c;
  c.kind = "something-else";
  c.tensors.emplace_back("x", Matrix::Ones(2, 3));
  const auto p = tmp_path("kind.ckpt");
  write_container(p, c);
  const auto back = read_container(p);
  CHECK(back.tensor("x") == Matrix::Ones(2, 3));
  CHECK_THROWS_AS(load_checkpoint(p), IntegrityError);
  std::remove(p.c_str());
}
