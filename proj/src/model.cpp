#include "nse/model.hpp"

namespace nse {

std::string to_string(EncoderKind kind) { return kind == EncoderKind::Lstm ? "lstm" : "nse"; }

EncoderKind parse_encoder_kind(const std::string& name) {
  if (name == "lstm") return EncoderKind::Lstm;
  if (name == "nse") return EncoderKind::Nse;
  throw ConfigError("unknown encoder kind '" + name + "' (expected lstm or nse)");
}

std::map<std::string, Shape> parameter_shapes(const ModelSpec& spec) {
  const std::size_t d = spec.dim;
  std::map<std::string, Shape> shapes;
  auto lstm = [&](const std::string& prefix, std::size_t input) {
    shapes[prefix + ".w_x"] = {4 * d, input};
    shapes[prefix + ".w_h"] = {4 * d, d};
    shapes[prefix + ".b"] = {4 * d};
  };
  auto lin = [&](const std::string& prefix, std::size_t input, std::size_t output) {
    shapes[prefix + ".w"] = {output, input};
    shapes[prefix + ".b"] = {output};
  };
  shapes["src_embed"] = {spec.source_vocab, d};
  shapes["tgt_embed"] = {spec.target_vocab, d};
  if (spec.encoder == EncoderKind::Lstm) {
    lstm("enc.l1", d);
    lstm("enc.l2", d);
  } else {
    lstm("nse.read", d);
    shapes["nse.compose.w1"] = {d, 2 * d};
    shapes["nse.compose.b1"] = {d};
    shapes["nse.compose.w2"] = {2 * d, d};
    shapes["nse.compose.b2"] = {2 * d};
    lstm("nse.write", 2 * d);
  }
  for (const char* name : {"dec.init.h1", "dec.init.h2", "dec.init.c1", "dec.init.c2"})
    lin(name, d, d);
  lstm("dec.l1", 2 * d);
  lstm("dec.l2", d);
  lin("dec.out", 2 * d, spec.target_vocab);
  return shapes;
}

Seq2Seq::Seq2Seq(const ModelSpec& spec, Rng& rng, const InitOptions& init) : spec_(spec) {
  const std::size_t d = spec.dim;
  if (d == 0) throw ConfigError("model dim must be positive");
  if (spec.source_vocab <= kReservedTokens || spec.target_vocab <= kReservedTokens)
    throw ConfigError("vocabularies must hold more than the reserved tokens");

  make_embedding(params_, "src_embed", spec.source_vocab, d, rng, init);
  make_embedding(params_, "tgt_embed", spec.target_vocab, d, rng, init);
  if (spec.encoder == EncoderKind::Lstm) {
    make_lstm(params_, "enc.l1", d, d, rng, init);
    make_lstm(params_, "enc.l2", d, d, rng, init);
  } else {
    make_lstm(params_, "nse.read", d, d, rng, init);
    make_mlp(params_, "nse.compose", 2 * d, d, 2 * d, rng, init);
    make_lstm(params_, "nse.write", 2 * d, d, rng, init);
  }
  make_linear(params_, "dec.init.h1", d, d, rng, init);
  make_linear(params_, "dec.init.h2", d, d, rng, init);
  make_linear(params_, "dec.init.c1", d, d, rng, init);
  make_linear(params_, "dec.init.c2", d, d, rng, init);
  make_lstm(params_, "dec.l1", 2 * d, d, rng, init);
  make_lstm(params_, "dec.l2", d, d, rng, init);
  make_linear(params_, "dec.out", 2 * d, spec.target_vocab, rng, init);
  bind();
}

Seq2Seq::Seq2Seq(const ModelSpec& spec, ParameterSet params)
    : spec_(spec), params_(std::move(params)) {
  auto expected = parameter_shapes(spec);
  if (expected.size() != params_.size())
    throw DimensionError("parameter count " + std::to_string(params_.size()) + " but " +
                         to_string(spec.encoder) + " model needs " +
                         std::to_string(expected.size()));
  for (const auto& [name, shape] : expected) {
    if (!params_.contains(name)) throw DimensionError("missing parameter " + name);
    if (params_.get(name)->shape != shape)
      throw DimensionError("parameter " + name + " has shape " +
                           shape_string(params_.get(name)->shape) + ", expected " +
                           shape_string(shape));
  }
  bind();
}

void Seq2Seq::bind() {
  src_embed_ = {params_.get("src_embed")};
  tgt_embed_ = {params_.get("tgt_embed")};
  if (spec_.encoder == EncoderKind::Lstm) {
    lstm_enc_ = {lstm_view(params_, "enc.l1"), lstm_view(params_, "enc.l2")};
  } else {
    nse_ = {lstm_view(params_, "nse.read"), mlp_view(params_, "nse.compose"),
            lstm_view(params_, "nse.write")};
  }
  decoder_.layer1 = lstm_view(params_, "dec.l1");
  decoder_.layer2 = lstm_view(params_, "dec.l2");
  decoder_.init.h = {linear_view(params_, "dec.init.h1"), linear_view(params_, "dec.init.h2")};
  decoder_.init.c = {linear_view(params_, "dec.init.c1"), linear_view(params_, "dec.init.c2")};
  decoder_.output = linear_view(params_, "dec.out");
}

EncoderOutput Seq2Seq::encode(Tape& tape, std::span<const int> source, const RunMode& mode) const {
  if (source.empty()) throw UsageError("cannot encode an empty source sentence");
  Var x = embed(tape, src_embed_, source);
  return spec_.encoder == EncoderKind::Lstm ? lstm_encode(tape, lstm_enc_, x, mode)
                                            : nse_encode(tape, nse_, x, mode);
}

DecoderState Seq2Seq::start(Tape& tape, const EncoderOutput& enc) const {
  return init_decoder(tape, decoder_.init, enc, kBosId);
}

DecoderStepOutput Seq2Seq::step(Tape& tape, const DecoderState& state, const EncoderOutput& enc,
                                const RunMode& mode) const {
  const int prev = state.prev_token;
  Var y = row(tape, embed(tape, tgt_embed_, std::span<const int>(&prev, 1)), 0);
  return decoder_step(tape, decoder_, state, y, enc.states, mode);
}

Var Seq2Seq::forced_logits(Tape& tape, std::span<const int> source, std::span<const int> target,
                           const RunMode& mode) const {
  if (target.empty()) throw UsageError("empty target sequence");
  EncoderOutput enc = encode(tape, source, mode);
  DecoderState state = start(tape, enc);
  std::vector<int> inputs;
  inputs.reserve(target.size());
  inputs.push_back(kBosId);
  inputs.insert(inputs.end(), target.begin(), target.end() - 1);
  Var y = embed(tape, tgt_embed_, inputs);
  std::vector<Var> rows;
  rows.reserve(target.size());
  for (std::size_t t = 0; t < target.size(); ++t) {
    DecoderStepOutput out = decoder_step(tape, decoder_, state, row(tape, y, t), enc.states, mode);
    state = out.state;
    rows.push_back(out.logits);
  }
  return stack_rows(tape, rows);
}

double Seq2Seq::sequence_log_prob(std::span<const int> source, std::span<const int> target) const {
  Tape tape(false);
  Var logits = forced_logits(tape, source, target, RunMode{});
  const std::size_t v = logits->cols();
  double total = 0.0;
  for (std::size_t t = 0; t < target.size(); ++t) {
    auto lp = log_softmax_values(std::span<const double>(&logits->data[t * v], v));
    total += lp[target[t]];
  }
  return total;
}

}  // namespace nse
