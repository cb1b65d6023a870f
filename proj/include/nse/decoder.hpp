#ifndef NSE_DECODER_HPP
#define NSE_DECODER_HPP

#include <array>

#include "nse/encoders.hpp"

namespace nse {

struct DecoderState {
  std::array<LstmState, 2> layers;
  int prev_token = 0;
  std::size_t step = 0;

  const Var& top() const { return layers[1].h; }
};

// Maps each encoder final (h, c) pair to the matching decoder layer:
// h0 = tanh(W_h h_enc + b_h), c0 = tanh(W_c c_enc + b_c).
struct DecoderInitParams {
  std::array<LinearParams, 2> h;
  std::array<LinearParams, 2> c;
};

struct DecoderParams {
  LstmCellParams layer1;  // input [y_prev embedding; context], width 2D
  LstmCellParams layer2;
  DecoderInitParams init;
  LinearParams output;    // [V x 2D] over [s_t; context]
};

struct Attention {
  Var alpha;    // [T_x], sums to 1
  Var context;  // [H]
};

struct DecoderStepOutput {
  DecoderState state;
  Var alpha;
  Var logits;  // [V]
};

// alpha_i = softmax_i(s_prev . h_i), context = sum_i alpha_i h_i
Attention attend(Tape& tape, const Var& s_prev, const Var& states);

DecoderState init_decoder(Tape& tape, const DecoderInitParams& p, const EncoderOutput& enc,
                          int bos_id);

DecoderStepOutput decoder_step(Tape& tape, const DecoderParams& p, const DecoderState& state,
                               const Var& y_prev_embedding, const Var& states,
                               const RunMode& mode);

}  // namespace nse

#endif  // NSE_DECODER_HPP
