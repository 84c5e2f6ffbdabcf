#pragma once

// Textbook (undilated) ORNN / LSTM / GRU steps in plain Eigen. Test-only
// oracle: shares no code with team::rnn.

#include <cmath>

#include "team/rnn/cells.hpp"

namespace team::testing {

using nn::Matrix;
using nn::Vector;

inline Vector sigm(const Vector& v) { return (1.0 / (1.0 + (-v.array()).exp())).matrix(); }
inline Vector tanhv(const Vector& v) { return v.array().tanh().matrix(); }

inline Vector ref_ornn(const Vector& x, const Vector& h, const rnn::OrnnParams& p) {
  return tanhv(p.w_xh.value * x + p.w_hh.value * h + p.b_h.value.col(0));
}

struct RefLstmOut {
  Vector h, cc, f, i, c, o;
};

inline RefLstmOut ref_lstm(const Vector& x, const Vector& h, const Vector& cc,
                           const rnn::LstmParams& p) {
  RefLstmOut r;
  r.f = sigm(p.w_xf.value * x + p.w_hf.value * h + p.b_f.value.col(0));
  r.i = sigm(p.w_xi.value * x + p.w_hi.value * h + p.b_i.value.col(0));
  r.c = tanhv(p.w_xc.value * x + p.w_hc.value * h + p.b_c.value.col(0));
  r.cc = r.f.cwiseProduct(cc) + r.i.cwiseProduct(r.c);
  r.o = sigm(p.w_xo.value * x + p.w_ho.value * h + p.b_o.value.col(0));
  r.h = r.o.cwiseProduct(tanhv(r.cc));
  return r;
}

struct RefGruOut {
  Vector h, r, z, cand;
};

inline RefGruOut ref_gru(const Vector& x, const Vector& h, const rnn::GruParams& p) {
  RefGruOut o;
  o.r = sigm(p.w_xr.value * x + p.w_hr.value * h + p.b_r.value.col(0));
  o.z = sigm(p.w_xz.value * x + p.w_hz.value * h + p.b_z.value.col(0));
  o.cand = tanhv(p.w_xh.value * x + p.w_hh.value * o.r.cwiseProduct(h) + p.b_h.value.col(0));
  o.h = o.z.cwiseProduct(o.cand) + (Vector::Ones(h.size()) - o.z).cwiseProduct(h);
  return o;
}

}  // namespace team::testing
