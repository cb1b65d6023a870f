#include "nse/layers.hpp"

namespace nse {

Var ParameterSet::add(const std::string& name, Tensor value) {
  if (params_.count(name)) throw UsageError("duplicate parameter " + name);
  auto v = make_var(std::move(value), true);
  params_.emplace(name, v);
  return v;
}

const Var& ParameterSet::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw UsageError("unknown parameter " + name);
  return it->second;
}

std::size_t ParameterSet::element_count() const {
  std::size_t n = 0;
  for (const auto& [_, v] : params_) n += v->size();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& [_, v] : params_) v->zero_grad();
}

ParameterSet ParameterSet::clone() const {
  ParameterSet out;
  for (const auto& [name, v] : params_) {
    Tensor copy(v->shape, v->data);
    out.add(name, std::move(copy));
  }
  return out;
}

Tensor init_uniform(const Shape& shape, Rng& rng, double range) {
  Tensor t(shape);
  std::uniform_real_distribution<double> dist(-range, range);
  for (auto& v : t.data) v = dist(rng);
  return t;
}

LstmCellParams make_lstm(ParameterSet& set, const std::string& prefix, std::size_t input,
                         std::size_t hidden, Rng& rng, const InitOptions& opts) {
  if (input == 0 || hidden == 0) throw DimensionError("lstm dims must be positive");
  LstmCellParams p;
  p.w_x = set.add(prefix + ".w_x", init_uniform({4 * hidden, input}, rng, opts.range));
  p.w_h = set.add(prefix + ".w_h", init_uniform({4 * hidden, hidden}, rng, opts.range));
  Tensor b = init_uniform({4 * hidden}, rng, opts.range);
  if (opts.forget_bias_one)
    for (std::size_t j = hidden; j < 2 * hidden; ++j) b.data[j] = 1.0;
  p.b = set.add(prefix + ".b", std::move(b));
  return p;
}

MlpParams make_mlp(ParameterSet& set, const std::string& prefix, std::size_t input,
                   std::size_t hidden, std::size_t output, Rng& rng, const InitOptions& opts) {
  MlpParams p;
  p.w1 = set.add(prefix + ".w1", init_uniform({hidden, input}, rng, opts.range));
  p.b1 = set.add(prefix + ".b1", init_uniform({hidden}, rng, opts.range));
  p.w2 = set.add(prefix + ".w2", init_uniform({output, hidden}, rng, opts.range));
  p.b2 = set.add(prefix + ".b2", init_uniform({output}, rng, opts.range));
  return p;
}

LinearParams make_linear(ParameterSet& set, const std::string& prefix, std::size_t input,
                         std::size_t output, Rng& rng, const InitOptions& opts) {
  LinearParams p;
  p.w = set.add(prefix + ".w", init_uniform({output, input}, rng, opts.range));
  p.b = set.add(prefix + ".b", init_uniform({output}, rng, opts.range));
  return p;
}

EmbeddingTable make_embedding(ParameterSet& set, const std::string& name, std::size_t vocab,
                              std::size_t dim, Rng& rng, const InitOptions& opts) {
  return {set.add(name, init_uniform({vocab, dim}, rng, opts.range))};
}

LstmCellParams lstm_view(const ParameterSet& set, const std::string& prefix) {
  LstmCellParams p{set.get(prefix + ".w_x"), set.get(prefix + ".w_h"), set.get(prefix + ".b")};
  const std::size_t h = p.w_h->shape.size() == 2 ? p.w_h->shape[1] : 0;
  if (p.w_h->rank() != 2 || p.w_h->shape[0] != 4 * h || p.w_x->rank() != 2 ||
      p.w_x->shape[0] != 4 * h || p.b->size() != 4 * h)
    throw DimensionError("inconsistent lstm parameters under " + prefix);
  return p;
}

MlpParams mlp_view(const ParameterSet& set, const std::string& prefix) {
  return {set.get(prefix + ".w1"), set.get(prefix + ".b1"), set.get(prefix + ".w2"),
          set.get(prefix + ".b2")};
}

LinearParams linear_view(const ParameterSet& set, const std::string& prefix) {
  return {set.get(prefix + ".w"), set.get(prefix + ".b")};
}

Var embed(Tape& tape, const EmbeddingTable& table, std::span<const int> ids) {
  return gather_rows(tape, table.table, ids);
}

LstmState lstm_zero_state(std::size_t hidden) { return {zeros({hidden}), zeros({hidden})}; }

LstmState lstm_step(Tape& tape, const LstmCellParams& p, const Var& x, const LstmState& prev) {
  const std::size_t h = p.hidden();
  if (x->rank() != 1 || x->size() != p.input() || prev.h->size() != h || prev.c->size() != h)
    throw DimensionError("lstm_step: input " + shape_string(x->shape) + ", state " +
                         shape_string(prev.h->shape) + " vs cell " + std::to_string(p.input()) +
                         "->" + std::to_string(h));
  Var gates = add(tape, add(tape, matmul(tape, p.w_x, x), matmul(tape, p.w_h, prev.h)), p.b);
  Var i = sigmoid(tape, slice(tape, gates, 0, h));
  Var f = sigmoid(tape, slice(tape, gates, h, h));
  Var g = tanh(tape, slice(tape, gates, 2 * h, h));
  Var o = sigmoid(tape, slice(tape, gates, 3 * h, h));
  Var c = add(tape, mul(tape, f, prev.c), mul(tape, i, g));
  Var hn = mul(tape, o, tanh(tape, c));
  return {hn, c};
}

Var mlp(Tape& tape, const MlpParams& p, const Var& x) {
  Var hidden = tanh(tape, linear(tape, p.w1, p.b1, x));
  return linear(tape, p.w2, p.b2, hidden);
}

Var linear(Tape& tape, const Var& w, const Var& b, const Var& x) {
  if (w->rank() != 2 || b->rank() != 1 || b->size() != w->shape[0])
    throw DimensionError("linear: weight " + shape_string(w->shape) + " bias " +
                         shape_string(b->shape));
  return add(tape, matmul(tape, w, x), b);
}

}  // namespace nse
