#pragma once

/// Standard LSTM cell (no peepholes) and sequence runners on the autodiff tape.
/// Gate layout inside the stacked 4h blocks: input, forget, cell, output.

#include <string>
#include <vector>

#include "eds/nn/autodiff.hpp"

namespace eds::nn {

struct LstmCell {
  Parameter* wx = nullptr;  // 4h x input
  Parameter* wh = nullptr;  // 4h x h
  Parameter* b = nullptr;   // 4h x 1
  int input = 0;
  int hidden = 0;
};

/// Creates cell parameters under `prefix`; forget-gate bias starts at 1.0
/// so memory passes through early in training.
inline LstmCell make_lstm_cell(ParamCollection& pc, const std::string& prefix, int input,
                               int hidden, Rng& rng) {
  LstmCell c;
  c.input = input;
  c.hidden = hidden;
  c.wx = pc.add(prefix + ".wx", 4 * hidden, input, rng);
  c.wh = pc.add(prefix + ".wh", 4 * hidden, hidden, rng);
  c.b = pc.add_zero(prefix + ".b", 4 * hidden, 1);
  c.b->value.middleRows(hidden, hidden).setConstant(1.0);
  return c;
}

inline LstmCell attach_lstm_cell(const ParamCollection& pc, const std::string& prefix) {
  LstmCell c;
  c.wx = pc.find(prefix + ".wx");
  c.wh = pc.find(prefix + ".wh");
  c.b = pc.find(prefix + ".b");
  if (!c.wx || !c.wh || !c.b) throw Error("missing LSTM parameters: " + prefix);
  c.hidden = static_cast<int>(c.wh->value.cols());
  c.input = static_cast<int>(c.wx->value.cols());
  return c;
}

struct LstmState {
  Var h;
  Var c;
};

inline LstmState lstm_step(Tape& t, const LstmCell& cell, Var x, const LstmState& prev) {
  int h = cell.hidden;
  Var z = t.add(t.add(t.matmul(t.param(*cell.wx), x), t.matmul(t.param(*cell.wh), prev.h)),
                t.param(*cell.b));
  Var i = t.sigmoid(t.rows(z, 0, h));
  Var f = t.sigmoid(t.rows(z, h, h));
  Var g = t.tanh(t.rows(z, 2 * h, h));
  Var o = t.sigmoid(t.rows(z, 3 * h, h));
  Var c = t.add(t.cmul(f, prev.c), t.cmul(i, g));
  return LstmState{t.cmul(o, t.tanh(c)), c};
}

/// Runs the cell over the sequence; with `reverse` the pass starts at the
/// last input, but outputs stay aligned with input positions.
inline std::vector<LstmState> run_lstm(Tape& t, const LstmCell& cell,
                                       const std::vector<Var>& inputs, bool reverse) {
  int m = static_cast<int>(inputs.size());
  std::vector<LstmState> out(m);
  LstmState st{t.input(Mat::Zero(cell.hidden, 1)), t.input(Mat::Zero(cell.hidden, 1))};
  for (int k = 0; k < m; ++k) {
    int i = reverse ? m - 1 - k : k;
    st = lstm_step(t, cell, inputs[i], st);
    out[i] = st;
  }
  return out;
}

}  // namespace eds::nn
