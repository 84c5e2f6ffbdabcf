#pragma once

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "team/nn/tape.hpp"

namespace team::rnn {

using nn::Matrix;
using nn::Param;
using nn::Tape;
using nn::Var;
using nn::Vector;

enum class CellKind { ornn, lstm, gru };

const char* to_string(CellKind k);
CellKind cell_kind_from_string(const std::string& s);

// Time-dilated recurrent cells. `hn` scales the weights that read the
// previous hidden state (and, for the LSTM candidate/output and the GRU
// candidate, also the input weights when dilate_input_weights is set).
// hn never multiplies a bias and is not trained.

struct OrnnParams {
  Param w_xh, w_hh, b_h;
  double hn = 1.0;
};

struct LstmParams {
  Param w_xf, w_hf, b_f;  // forget gate
  Param w_xi, w_hi, b_i;  // input gate
  Param w_xc, w_hc, b_c;  // candidate
  Param w_xo, w_ho, b_o;  // output gate
  double hn = 1.0;
  bool dilate_input_weights = true;
};

struct GruParams {
  Param w_xr, w_hr, b_r;  // reset gate
  Param w_xz, w_hz, b_z;  // update gate
  Param w_xh, w_hh, b_h;  // candidate
  double hn = 1.0;
  bool dilate_input_weights = true;
};

/// Hidden state carried between steps; `cc` (cell state) only for LSTM.
struct CellState {
  Vector h;
  std::optional<Vector> cc;
};

/// One recurrent layer of any kind.
class RecurrentCell {
 public:
  RecurrentCell() = default;
  explicit RecurrentCell(OrnnParams p) : params_(std::move(p)) {}
  explicit RecurrentCell(LstmParams p) : params_(std::move(p)) {}
  explicit RecurrentCell(GruParams p) : params_(std::move(p)) {}

  /// Fresh cell with uniform(+-1/sqrt(fan_in)) weights.
  static RecurrentCell create(CellKind kind, Eigen::Index input_dim, Eigen::Index hidden_dim,
                              double hn, bool dilate_input_weights, Rng& rng);

  CellKind kind() const;
  Eigen::Index input_dim() const;
  Eigen::Index hidden_dim() const;
  double hn() const;
  void set_hn(double hn);
  bool dilate_input_weights() const;

  nn::ParamRefs params();
  std::vector<const Param*> params() const;

  CellState zero_state() const;

  const auto& variant() const { return params_; }
  auto& variant() { return params_; }

 private:
  std::variant<OrnnParams, LstmParams, GruParams> params_;
};

// Pure single steps. Dimension mismatches raise ConfigError; an LSTM state
// without `cc` raises UsageError.
CellState td_ornn_step(const Vector& x, const CellState& state, const OrnnParams& p);
CellState td_lstm_step(const Vector& x, const CellState& state, const LstmParams& p);
CellState td_gru_step(const Vector& x, const CellState& state, const GruParams& p);
CellState step(const Vector& x, const CellState& state, const RecurrentCell& cell);

/// Pure unroll from a zero state; returns one hidden state per input.
/// `on_step(t, h_t)` is called after each step when provided.
std::vector<Vector> unroll(const RecurrentCell& cell, const std::vector<Vector>& inputs,
                           const std::function<void(std::size_t, const Vector&)>& on_step = {});

/// The cell's weights placed on a tape, with dilation already applied.
struct BoundCell {
  CellKind kind;
  Eigen::Index input_dim = 0;
  Eigen::Index hidden_dim = 0;
  std::vector<Var> w;  // order fixed per kind, see cells.cpp
};

struct StateVars {
  Var h;
  std::optional<Var> cc;
};

/// Bind with gradients flowing into the cell's params.
BoundCell bind_trainable(Tape& tape, RecurrentCell& cell);
/// Bind as constants (frozen model); gradients still flow to the inputs.
BoundCell bind_frozen(Tape& tape, const RecurrentCell& cell);

StateVars zero_state(Tape& tape, const BoundCell& cell, Eigen::Index batch);
StateVars step(Tape& tape, const BoundCell& cell, Var x, const StateVars& state);

/// Unroll over a batch; each input is (input_dim x batch). Returns h_t per step.
std::vector<Var> unroll(Tape& tape, const BoundCell& cell, const std::vector<Var>& inputs);

}  // namespace team::rnn
