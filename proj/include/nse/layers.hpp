#ifndef NSE_LAYERS_HPP
#define NSE_LAYERS_HPP

#include <map>
#include <span>
#include <string>
#include <vector>

#include "nse/tensor.hpp"

namespace nse {

// Named trainable tensors. Iteration order is the sorted name order, which
// is also the checkpoint order.
class ParameterSet {
 public:
  Var add(const std::string& name, Tensor value);
  const Var& get(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.count(name) != 0; }
  std::size_t size() const { return params_.size(); }
  std::size_t element_count() const;

  void zero_grad();
  // Deep copy; the clone shares no storage with this set.
  ParameterSet clone() const;

  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::map<std::string, Var> params_;
};

// Uniform samples in [-range, range).
Tensor init_uniform(const Shape& shape, Rng& rng, double range = 0.1);

// Gate rows of w_x, w_h and b are laid out as
// [input | forget | cell candidate | output], each `hidden` rows.
struct LstmCellParams {
  Var w_x;  // [4H x I]
  Var w_h;  // [4H x H]
  Var b;    // [4H]

  std::size_t hidden() const { return w_h->shape[1]; }
  std::size_t input() const { return w_x->shape[1]; }
};

struct MlpParams {
  Var w1;  // [Hm x Im]
  Var b1;  // [Hm]
  Var w2;  // [Om x Hm]
  Var b2;  // [Om]
};

struct LinearParams {
  Var w;  // [O x I]
  Var b;  // [O]
};

struct EmbeddingTable {
  Var table;  // [V x D]; row 0 is padding

  std::size_t vocab_size() const { return table->shape[0]; }
  std::size_t dim() const { return table->shape[1]; }
};

struct LstmState {
  Var h;
  Var c;
};

struct InitOptions {
  double range = 0.1;
  // Forget-gate bias starts here instead of a uniform draw when set.
  bool forget_bias_one = true;
};

LstmCellParams make_lstm(ParameterSet& set, const std::string& prefix, std::size_t input,
                         std::size_t hidden, Rng& rng, const InitOptions& opts);
MlpParams make_mlp(ParameterSet& set, const std::string& prefix, std::size_t input,
                   std::size_t hidden, std::size_t output, Rng& rng, const InitOptions& opts);
LinearParams make_linear(ParameterSet& set, const std::string& prefix, std::size_t input,
                         std::size_t output, Rng& rng, const InitOptions& opts);
EmbeddingTable make_embedding(ParameterSet& set, const std::string& name, std::size_t vocab,
                              std::size_t dim, Rng& rng, const InitOptions& opts);

// Views over tensors already present in a set (used after checkpoint load).
LstmCellParams lstm_view(const ParameterSet& set, const std::string& prefix);
MlpParams mlp_view(const ParameterSet& set, const std::string& prefix);
LinearParams linear_view(const ParameterSet& set, const std::string& prefix);

Var embed(Tape& tape, const EmbeddingTable& table, std::span<const int> ids);
LstmState lstm_step(Tape& tape, const LstmCellParams& p, const Var& x, const LstmState& prev);
LstmState lstm_zero_state(std::size_t hidden);
Var mlp(Tape& tape, const MlpParams& p, const Var& x);
Var linear(Tape& tape, const Var& w, const Var& b, const Var& x);
inline Var linear(Tape& tape, const LinearParams& p, const Var& x) {
  return linear(tape, p.w, p.b, x);
}

}  // namespace nse

#endif  // NSE_LAYERS_HPP
