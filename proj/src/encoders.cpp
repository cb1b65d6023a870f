#include "nse/encoders.hpp"

namespace nse {

namespace {

Var maybe_dropout(Tape& tape, const Var& x, const RunMode& mode) {
  if (!mode.training || mode.dropout == 0.0) return x;
  if (!mode.rng) throw UsageError("training-mode dropout needs an rng");
  return dropout(tape, x, mode.dropout, true, *mode.rng);
}

void check_input(const Var& embeddings, std::size_t dim) {
  if (embeddings->rank() != 2 || embeddings->shape[0] == 0)
    throw UsageError("encoder input must be a non-empty [T x D] matrix");
  if (embeddings->shape[1] != dim)
    throw DimensionError("encoder input width " + std::to_string(embeddings->shape[1]) +
                         " but encoder expects " + std::to_string(dim));
}

}  // namespace

EncoderOutput lstm_encode(Tape& tape, const LstmEncoderParams& p, const Var& embeddings,
                          const RunMode& mode) {
  check_input(embeddings, p.layer1.input());
  const std::size_t steps = embeddings->shape[0];
  LstmState s1 = lstm_zero_state(p.layer1.hidden());
  LstmState s2 = lstm_zero_state(p.layer2.hidden());
  Var inputs = maybe_dropout(tape, embeddings, mode);
  std::vector<Var> outputs;
  outputs.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    s1 = lstm_step(tape, p.layer1, row(tape, inputs, t), s1);
    s2 = lstm_step(tape, p.layer2, maybe_dropout(tape, s1.h, mode), s2);
    outputs.push_back(s2.h);
  }
  EncoderOutput out;
  out.states = stack_rows(tape, outputs);
  out.final = {s1, s2};
  return out;
}

Var memory_update(Tape& tape, const Var& memory, const Var& sigma, const Var& w) {
  return interpolate_rows(tape, memory, sigma, w);
}

NseStepResult nse_step(Tape& tape, const NseParams& p, const Var& x, const NseState& prev,
                       const Var& forced_sigma) {
  const Var& m_prev = prev.memory;
  const std::size_t d = p.read.hidden();
  if (m_prev->rank() != 2 || m_prev->shape[1] != d)
    throw DimensionError("nse_step: memory " + shape_string(m_prev->shape) +
                         " does not have width " + std::to_string(d));
  NseStepResult r;
  r.state.read = lstm_step(tape, p.read, x, prev.read);
  const Var& read_h = r.state.read.h;
  if (forced_sigma) {
    if (forced_sigma->rank() != 1 || forced_sigma->size() != m_prev->shape[0])
      throw DimensionError("nse_step: forced sigma has wrong length");
    r.sigma = forced_sigma;
  } else {
    r.sigma = softmax_rows(tape, matmul(tape, m_prev, read_h));
  }
  r.retrieved = matmul(tape, r.sigma, m_prev);
  r.composed = mlp(tape, p.compose, concat(tape, read_h, r.retrieved));
  r.state.write = lstm_step(tape, p.write, r.composed, prev.write);
  r.output = r.state.write.h;
  r.state.memory = memory_update(tape, m_prev, r.sigma, r.output);
  return r;
}

EncoderOutput nse_encode(Tape& tape, const NseParams& p, const Var& embeddings,
                         const RunMode& mode) {
  check_input(embeddings, p.read.input());
  const std::size_t steps = embeddings->shape[0];
  NseState state{lstm_zero_state(p.read.hidden()), lstm_zero_state(p.write.hidden()), embeddings};
  Var inputs = maybe_dropout(tape, embeddings, mode);

  EncoderOutput out;
  if (mode.trace) {
    out.trace.emplace();
    out.trace->memory.emplace_back(embeddings->shape, embeddings->data);
  }
  std::vector<Var> outputs;
  outputs.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    NseStepResult r = nse_step(tape, p, row(tape, inputs, t), state);
    state = r.state;
    outputs.push_back(maybe_dropout(tape, r.output, mode));
    if (mode.trace) {
      out.trace->sigma.push_back(r.sigma->data);
      Tensor snap(state.memory->shape, state.memory->data);
      out.trace->memory.push_back(std::move(snap));
    }
  }
  out.states = stack_rows(tape, outputs);
  out.final = {state.read, state.write};
  out.memory = state.memory;
  return out;
}

}  // namespace nse
