#ifndef NSE_MODEL_HPP
#define NSE_MODEL_HPP

#include <map>
#include <span>
#include <string>

#include "nse/corpus.hpp"
#include "nse/decoder.hpp"

namespace nse {

enum class EncoderKind { Lstm, Nse };

std::string to_string(EncoderKind kind);
EncoderKind parse_encoder_kind(const std::string& name);

struct ModelSpec {
  EncoderKind encoder = EncoderKind::Nse;
  std::size_t dim = 300;  // embeddings, encoder states and decoder states
  std::size_t source_vocab = 0;
  std::size_t target_vocab = 0;

  bool operator==(const ModelSpec&) const = default;
};

// Name -> shape of every trainable tensor for a spec.
std::map<std::string, Shape> parameter_shapes(const ModelSpec& spec);

// Attention encoder-decoder with either a two-layer LSTM encoder
// (LstmLstm) or an NSE encoder (NseLstm), and a two-layer LSTM decoder.
//
// Parameter names:
//   src_embed, tgt_embed
//   enc.l1.*, enc.l2.*                      LSTM encoder
//   nse.read.*, nse.compose.*, nse.write.*  NSE encoder
//   dec.l1.*, dec.l2.*, dec.out.*           decoder
//   dec.init.h1, dec.init.h2, dec.init.c1, dec.init.c2
class Seq2Seq {
 public:
  Seq2Seq(const ModelSpec& spec, Rng& rng, const InitOptions& init = {});
  // Adopts an existing parameter set; throws if names or shapes disagree
  // with the spec.
  Seq2Seq(const ModelSpec& spec, ParameterSet params);

  const ModelSpec& spec() const { return spec_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }
  Seq2Seq clone() const { return Seq2Seq(spec_, params_.clone()); }

  const EmbeddingTable& source_embeddings() const { return src_embed_; }
  EmbeddingTable& source_embeddings() { return src_embed_; }
  const EmbeddingTable& target_embeddings() const { return tgt_embed_; }
  EmbeddingTable& target_embeddings() { return tgt_embed_; }
  const DecoderParams& decoder() const { return decoder_; }
  const NseParams& nse() const { return nse_; }
  const LstmEncoderParams& lstm_encoder() const { return lstm_enc_; }

  EncoderOutput encode(Tape& tape, std::span<const int> source, const RunMode& mode) const;
  DecoderState start(Tape& tape, const EncoderOutput& enc) const;
  // Feeds state.prev_token and advances one step.
  DecoderStepOutput step(Tape& tape, const DecoderState& state, const EncoderOutput& enc,
                         const RunMode& mode) const;

  // Teacher-forced logits, one row per target position. `target` holds
  // y_1..y_T followed by EOS; the decoder is fed BOS y_1..y_T.
  Var forced_logits(Tape& tape, std::span<const int> source, std::span<const int> target,
                    const RunMode& mode) const;

  // Sum of per-step log-probabilities of `target` (ending in EOS).
  double sequence_log_prob(std::span<const int> source, std::span<const int> target) const;

 private:
  void bind();

  ModelSpec spec_;
  ParameterSet params_;
  EmbeddingTable src_embed_;
  EmbeddingTable tgt_embed_;
  LstmEncoderParams lstm_enc_;
  NseParams nse_;
  DecoderParams decoder_;
};

}  // namespace nse

#endif  // NSE_MODEL_HPP
