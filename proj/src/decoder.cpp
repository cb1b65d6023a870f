#include "nse/decoder.hpp"

namespace nse {

Attention attend(Tape& tape, const Var& s_prev, const Var& states) {
  if (states->rank() != 2 || s_prev->rank() != 1 || states->shape[1] != s_prev->size())
    throw DimensionError("attend: state " + shape_string(s_prev->shape) + " vs encoder states " +
                         shape_string(states->shape));
  Var alpha = softmax_rows(tape, matmul(tape, states, s_prev));
  Var context = matmul(tape, alpha, states);
  return {alpha, context};
}

DecoderState init_decoder(Tape& tape, const DecoderInitParams& p, const EncoderOutput& enc,
                          int bos_id) {
  if (enc.final.size() != 2) throw UsageError("init_decoder: encoder must expose two final states");
  DecoderState s;
  for (std::size_t l = 0; l < 2; ++l) {
    s.layers[l].h = tanh(tape, linear(tape, p.h[l], enc.final[l].h));
    s.layers[l].c = tanh(tape, linear(tape, p.c[l], enc.final[l].c));
  }
  s.prev_token = bos_id;
  s.step = 0;
  return s;
}

DecoderStepOutput decoder_step(Tape& tape, const DecoderParams& p, const DecoderState& state,
                               const Var& y_prev_embedding, const Var& states,
                               const RunMode& mode) {
  Attention att = attend(tape, state.top(), states);
  Var x = y_prev_embedding;
  if (mode.training && mode.dropout > 0.0) {
    if (!mode.rng) throw UsageError("training-mode dropout needs an rng");
    x = dropout(tape, x, mode.dropout, true, *mode.rng);
  }
  DecoderStepOutput out;
  out.state.layers[0] = lstm_step(tape, p.layer1, concat(tape, x, att.context), state.layers[0]);
  out.state.layers[1] = lstm_step(tape, p.layer2, out.state.layers[0].h, state.layers[1]);
  out.state.step = state.step + 1;
  out.state.prev_token = state.prev_token;
  Var top = out.state.layers[1].h;
  if (mode.training && mode.dropout > 0.0) top = dropout(tape, top, mode.dropout, true, *mode.rng);
  out.logits = linear(tape, p.output, concat(tape, top, att.context));
  out.alpha = att.alpha;
  return out;
}

}  // namespace nse
