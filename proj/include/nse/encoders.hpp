#ifndef NSE_ENCODERS_HPP
#define NSE_ENCODERS_HPP

#include <optional>
#include <vector>

#include "nse/layers.hpp"

namespace nse {

struct RunMode {
  bool training = false;
  double dropout = 0.0;
  Rng* rng = nullptr;  // required when training with dropout > 0
  bool trace = false;  // keep NSE attention and memory snapshots
};

// Per-step record of the NSE memory read weights and (optionally) the
// memory contents after each update.
struct NseTrace {
  std::vector<std::vector<double>> sigma;  // one row of length T_x per step
  std::vector<Tensor> memory;              // M_0 .. M_T
};

struct EncoderOutput {
  Var states;                      // [T_x x D], the sequence attended over
  std::vector<LstmState> final;    // two (h, c) pairs seeding the decoder
  Var memory;                      // final NSE memory, null for the LSTM encoder
  std::optional<NseTrace> trace;
};

struct LstmEncoderParams {
  LstmCellParams layer1;
  LstmCellParams layer2;
};

struct NseParams {
  LstmCellParams read;     // D -> D
  MlpParams compose;       // 2D -> D -> 2D
  LstmCellParams write;    // 2D -> D
};

struct NseState {
  LstmState read;
  LstmState write;
  Var memory;  // [T_x x D]
};

struct NseStepResult {
  Var output;      // w_t
  Var sigma;       // read weights over memory rows
  Var retrieved;   // m_t
  Var composed;    // compose MLP output, width 2D
  NseState state;
};

// Two stacked LSTM layers; returns layer-2 states.
EncoderOutput lstm_encode(Tape& tape, const LstmEncoderParams& p, const Var& embeddings,
                          const RunMode& mode);

// Erase/add write: row i becomes (1 - sigma_i) * M_i + sigma_i * w.
Var memory_update(Tape& tape, const Var& memory, const Var& sigma, const Var& w);

// One read/compose/write/update step. `forced_sigma` replaces the computed
// read weights (for probing the update algebra).
NseStepResult nse_step(Tape& tape, const NseParams& p, const Var& x, const NseState& prev,
                       const Var& forced_sigma = nullptr);

// Memory starts as the embedding rows; w_1..w_T are the output states.
EncoderOutput nse_encode(Tape& tape, const NseParams& p, const Var& embeddings,
                         const RunMode& mode);

}  // namespace nse

#endif  // NSE_ENCODERS_HPP
