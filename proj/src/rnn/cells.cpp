#include "team/rnn/cells.hpp"

#include <array>
#include <cmath>
#include <string>

#include "team/error.hpp"

namespace team::rnn {

const char* to_string(CellKind k) {
  switch (k) {
    case CellKind::ornn: return "ornn";
    case CellKind::lstm: return "lstm";
    case CellKind::gru: return "gru";
  }
  return "ornn";
}

CellKind cell_kind_from_string(const std::string& s) {
  if (s == "ornn" || s == "rnn") return CellKind::ornn;
  if (s == "lstm") return CellKind::lstm;
  if (s == "gru") return CellKind::gru;
  throw ConfigError("unknown cell kind '" + s + "' (expected ornn, lstm or gru)");
}

namespace {

// How hn applies to one weight.
enum class Dilate { none, recurrent, input };

template <typename P>
struct Slot {
  P* param;
  Dilate dilate;
};

// Weight order here defines BoundCell::w.
template <typename Params>
auto layout(Params& p) {
  using P = std::conditional_t<std::is_const_v<Params>, const Param, Param>;
  using S = Slot<P>;
  using Plain = std::remove_const_t<Params>;
  if constexpr (std::is_same_v<Plain, OrnnParams>) {
    return std::array<S, 3>{S{&p.w_xh, Dilate::none}, S{&p.w_hh, Dilate::recurrent},
                            S{&p.b_h, Dilate::none}};
  } else if constexpr (std::is_same_v<Plain, LstmParams>) {
    return std::array<S, 12>{
        S{&p.w_xf, Dilate::none},  S{&p.w_hf, Dilate::recurrent}, S{&p.b_f, Dilate::none},
        S{&p.w_xi, Dilate::none},  S{&p.w_hi, Dilate::recurrent}, S{&p.b_i, Dilate::none},
        S{&p.w_xc, Dilate::input}, S{&p.w_hc, Dilate::recurrent}, S{&p.b_c, Dilate::none},
        S{&p.w_xo, Dilate::input}, S{&p.w_ho, Dilate::recurrent}, S{&p.b_o, Dilate::none}};
  } else {
    return std::array<S, 9>{
        S{&p.w_xr, Dilate::none},  S{&p.w_hr, Dilate::recurrent}, S{&p.b_r, Dilate::none},
        S{&p.w_xz, Dilate::none},  S{&p.w_hz, Dilate::recurrent}, S{&p.b_z, Dilate::none},
        S{&p.w_xh, Dilate::input}, S{&p.w_hh, Dilate::recurrent}, S{&p.b_h, Dilate::none}};
  }
}

template <typename Params>
bool dilates_input(const Params& p) {
  if constexpr (std::is_same_v<Params, OrnnParams>) {
    return false;
  } else {
    return p.dilate_input_weights;
  }
}

template <typename Params>
constexpr CellKind kind_of() {
  if constexpr (std::is_same_v<Params, OrnnParams>) return CellKind::ornn;
  if constexpr (std::is_same_v<Params, LstmParams>) return CellKind::lstm;
  return CellKind::gru;
}

template <typename Params>
void validate(const Params& p) {
  if (!(std::isfinite(p.hn) && p.hn > 0.0)) {
    throw ConfigError("time-dilation coefficient hn must be finite and > 0, got " +
                      std::to_string(p.hn));
  }
  const auto slots = layout(p);
  const Eigen::Index hidden = slots[0].param->value.rows();
  const Eigen::Index input = slots[0].param->value.cols();
  for (std::size_t k = 0; k < slots.size(); k += 3) {
    const Matrix& wx = slots[k].param->value;
    const Matrix& wh = slots[k + 1].param->value;
    const Matrix& b = slots[k + 2].param->value;
    if (wx.rows() != hidden || wx.cols() != input || wh.rows() != hidden ||
        wh.cols() != hidden || b.rows() != hidden || b.cols() != 1) {
      throw ConfigError("recurrent cell: gate " + std::to_string(k / 3) + " weights are " +
                        std::to_string(wx.rows()) + "x" + std::to_string(wx.cols()) + ", " +
                        std::to_string(wh.rows()) + "x" + std::to_string(wh.cols()) +
                        ", bias " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()) +
                        "; expected hidden=" + std::to_string(hidden) +
                        " input=" + std::to_string(input));
    }
  }
}

template <typename Params>
BoundCell bind_impl(Tape& tape, Params& p, bool trainable) {
  using Plain = std::remove_const_t<Params>;
  validate<Plain>(p);
  BoundCell bound;
  bound.kind = kind_of<Plain>();
  const auto slots = layout(p);
  bound.hidden_dim = slots[0].param->value.rows();
  bound.input_dim = slots[0].param->value.cols();
  const bool dil_in = dilates_input<Plain>(p);
  for (const auto& s : slots) {
    Var v;
    if constexpr (std::is_const_v<Params>) {
      v = tape.constant(s.param->value);
    } else {
      v = trainable ? tape.parameter(*s.param) : tape.constant(s.param->value);
    }
    if (s.dilate == Dilate::recurrent || (s.dilate == Dilate::input && dil_in)) {
      v = tape.scale(v, p.hn);
    }
    bound.w.push_back(v);
  }
  return bound;
}

// gate(x, h) = W_x x + W_h h + b
Var affine(Tape& t, Var wx, Var x, Var wh, Var h, Var b) {
  return t.add_bias(t.add(t.matmul(wx, x), t.matmul(wh, h)), b);
}

template <typename Params>
CellState pure_step(const Vector& x, const CellState& state, const Params& p) {
  Tape tape;
  const BoundCell bound = bind_impl(tape, p, false);
  if (x.size() != bound.input_dim) {
    throw ConfigError("cell step: input length " + std::to_string(x.size()) + ", expected " +
                      std::to_string(bound.input_dim));
  }
  if (state.h.size() != bound.hidden_dim) {
    throw ConfigError("cell step: state length " + std::to_string(state.h.size()) +
                      ", expected " + std::to_string(bound.hidden_dim));
  }
  StateVars sv{tape.constant(state.h), std::nullopt};
  if (bound.kind == CellKind::lstm) {
    if (!state.cc) throw UsageError("LSTM step: state has no cell state (cc)");
    if (state.cc->size() != bound.hidden_dim) {
      throw ConfigError("LSTM step: cell state length " + std::to_string(state.cc->size()) +
                        ", expected " + std::to_string(bound.hidden_dim));
    }
    sv.cc = tape.constant(*state.cc);
  }
  const StateVars out = step(tape, bound, tape.constant(x), sv);
  CellState result{tape.value(out.h).col(0), std::nullopt};
  if (out.cc) result.cc = tape.value(*out.cc).col(0);
  return result;
}

template <typename Params>
Params make_params(Eigen::Index input, Eigen::Index hidden, Rng& rng) {
  Params p;
  const auto slots = layout(p);
  static constexpr std::array<const char*, 12> lstm_names = {
      "w_xf", "w_hf", "b_f", "w_xi", "w_hi", "b_i", "w_xc", "w_hc", "b_c", "w_xo", "w_ho", "b_o"};
  static constexpr std::array<const char*, 9> gru_names = {"w_xr", "w_hr", "b_r", "w_xz", "w_hz",
                                                           "b_z",  "w_xh", "w_hh", "b_h"};
  static constexpr std::array<const char*, 3> ornn_names = {"w_xh", "w_hh", "b_h"};
  for (std::size_t k = 0; k < slots.size(); ++k) {
    const char* name = nullptr;
    if constexpr (std::is_same_v<Params, OrnnParams>) name = ornn_names[k];
    if constexpr (std::is_same_v<Params, LstmParams>) name = lstm_names[k];
    if constexpr (std::is_same_v<Params, GruParams>) name = gru_names[k];
    // Fan-in of a gate is input + hidden (it reads both).
    const Eigen::Index fan_in = input + hidden;
    const Eigen::Index cols = (k % 3 == 0) ? input : (k % 3 == 1) ? hidden : 1;
    *slots[k].param = Param(std::string("cell.") + name, nn::init_uniform(hidden, cols, fan_in, rng));
  }
  return p;
}

}  // namespace

RecurrentCell RecurrentCell::create(CellKind kind, Eigen::Index input_dim, Eigen::Index hidden_dim,
                                    double hn, bool dilate_input_weights, Rng& rng) {
  if (input_dim <= 0 || hidden_dim <= 0) throw ConfigError("recurrent cell: dimensions must be positive");
  RecurrentCell cell;
  switch (kind) {
    case CellKind::ornn: {
      auto p = make_params<OrnnParams>(input_dim, hidden_dim, rng);
      p.hn = hn;
      cell.params_ = std::move(p);
      break;
    }
    case CellKind::lstm: {
      auto p = make_params<LstmParams>(input_dim, hidden_dim, rng);
      p.hn = hn;
      p.dilate_input_weights = dilate_input_weights;
      cell.params_ = std::move(p);
      break;
    }
    case CellKind::gru: {
      auto p = make_params<GruParams>(input_dim, hidden_dim, rng);
      p.hn = hn;
      p.dilate_input_weights = dilate_input_weights;
      cell.params_ = std::move(p);
      break;
    }
  }
  std::visit([](const auto& p) { validate(p); }, cell.params_);
  return cell;
}

CellKind RecurrentCell::kind() const {
  return std::visit([](const auto& p) { return kind_of<std::decay_t<decltype(p)>>(); }, params_);
}

Eigen::Index RecurrentCell::input_dim() const {
  return std::visit([](const auto& p) { return layout(p)[0].param->value.cols(); }, params_);
}

Eigen::Index RecurrentCell::hidden_dim() const {
  return std::visit([](const auto& p) { return layout(p)[0].param->value.rows(); }, params_);
}

double RecurrentCell::hn() const {
  return std::visit([](const auto& p) { return p.hn; }, params_);
}

void RecurrentCell::set_hn(double hn) {
  std::visit([hn](auto& p) { p.hn = hn; }, params_);
}

bool RecurrentCell::dilate_input_weights() const {
  return std::visit([](const auto& p) { return dilates_input(p); }, params_);
}

nn::ParamRefs RecurrentCell::params() {
  return std::visit(
      [](auto& p) {
        nn::ParamRefs out;
        for (const auto& s : layout(p)) out.push_back(s.param);
        return out;
      },
      params_);
}

std::vector<const Param*> RecurrentCell::params() const {
  return std::visit(
      [](const auto& p) {
        std::vector<const Param*> out;
        for (const auto& s : layout(p)) out.push_back(s.param);
        return out;
      },
      params_);
}

CellState RecurrentCell::zero_state() const {
  CellState s{Vector::Zero(hidden_dim()), std::nullopt};
  if (kind() == CellKind::lstm) s.cc = Vector::Zero(hidden_dim());
  return s;
}

CellState td_ornn_step(const Vector& x, const CellState& state, const OrnnParams& p) {
  return pure_step(x, state, p);
}

CellState td_lstm_step(const Vector& x, const CellState& state, const LstmParams& p) {
  return pure_step(x, state, p);
}

CellState td_gru_step(const Vector& x, const CellState& state, const GruParams& p) {
  return pure_step(x, state, p);
}

CellState step(const Vector& x, const CellState& state, const RecurrentCell& cell) {
  return std::visit([&](const auto& p) { return pure_step(x, state, p); }, cell.variant());
}

std::vector<Vector> unroll(const RecurrentCell& cell, const std::vector<Vector>& inputs,
                           const std::function<void(std::size_t, const Vector&)>& on_step) {
  if (inputs.empty()) throw InputError("unroll: empty input sequence");
  std::vector<Vector> hs;
  hs.reserve(inputs.size());
  CellState s = cell.zero_state();
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    s = step(inputs[t], s, cell);
    hs.push_back(s.h);
    if (on_step) on_step(t, s.h);
  }
  return hs;
}

BoundCell bind_trainable(Tape& tape, RecurrentCell& cell) {
  return std::visit([&](auto& p) { return bind_impl(tape, p, true); }, cell.variant());
}

BoundCell bind_frozen(Tape& tape, const RecurrentCell& cell) {
  return std::visit([&](const auto& p) { return bind_impl(tape, p, false); }, cell.variant());
}

StateVars zero_state(Tape& tape, const BoundCell& cell, Eigen::Index batch) {
  StateVars s{tape.constant(Matrix::Zero(cell.hidden_dim, batch)), std::nullopt};
  if (cell.kind == CellKind::lstm) s.cc = tape.constant(Matrix::Zero(cell.hidden_dim, batch));
  return s;
}

StateVars step(Tape& t, const BoundCell& c, Var x, const StateVars& state) {
  if (t.value(x).rows() != c.input_dim) {
    throw ConfigError("cell step: input has " + std::to_string(t.value(x).rows()) +
                      " features, expected " + std::to_string(c.input_dim));
  }
  const auto& w = c.w;
  const Var h = state.h;
  switch (c.kind) {
    case CellKind::ornn: {
      return {t.tanh(affine(t, w[0], x, w[1], h, w[2])), std::nullopt};
    }
    case CellKind::lstm: {
      if (!state.cc) throw UsageError("LSTM step: state has no cell state (cc)");
      const Var f = t.sigmoid(affine(t, w[0], x, w[1], h, w[2]));
      const Var i = t.sigmoid(affine(t, w[3], x, w[4], h, w[5]));
      const Var cand = t.tanh(affine(t, w[6], x, w[7], h, w[8]));
      const Var cc = t.add(t.mul(f, *state.cc), t.mul(i, cand));
      const Var o = t.sigmoid(affine(t, w[9], x, w[10], h, w[11]));
      return {t.mul(o, t.tanh(cc)), cc};
    }
    case CellKind::gru: {
      const Var r = t.sigmoid(affine(t, w[0], x, w[1], h, w[2]));
      const Var z = t.sigmoid(affine(t, w[3], x, w[4], h, w[5]));
      const Var cand = t.tanh(affine(t, w[6], x, w[7], t.mul(r, h), w[8]));
      const Var h_new = t.add(t.mul(z, cand), t.mul(t.one_minus(z), h));
      return {h_new, std::nullopt};
    }
  }
  throw UsageError("cell step: unknown cell kind");
}

std::vector<Var> unroll(Tape& tape, const BoundCell& cell, const std::vector<Var>& inputs) {
  if (inputs.empty()) throw InputError("unroll: empty input sequence");
  StateVars s = zero_state(tape, cell, tape.value(inputs.front()).cols());
  std::vector<Var> hs;
  hs.reserve(inputs.size());
  for (const Var& x : inputs) {
    s = step(tape, cell, x, s);
    hs.push_back(s.h);
  }
  return hs;
}

}  // namespace team::rnn
