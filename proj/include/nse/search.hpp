#ifndef NSE_SEARCH_HPP
#define NSE_SEARCH_HPP

#include <span>
#include <string>
#include <vector>

#include "nse/model.hpp"

namespace nse {

struct Hypothesis {
  std::vector<int> tokens;                       // content tokens, EOS excluded
  double log_prob = 0.0;                         // includes the EOS step when finished
  DecoderState state;
  std::vector<std::vector<double>> alignments;   // one attention row per content token
  bool finished = false;                         // emitted EOS
};

struct SearchOptions {
  std::size_t beam = 1;
  std::size_t max_len = 100;  // decoder steps, so content tokens <= max_len
  bool length_normalize = false;
};

struct BeamResult {
  Hypothesis best;
  std::vector<Hypothesis> final_beam;  // every terminated hypothesis, best first
};

// Score used to rank hypotheses: summed log-probability, or its per-token
// mean when length normalization is on.
double hypothesis_score(const Hypothesis& h, bool length_normalize);

Hypothesis greedy_decode(const Seq2Seq& model, std::span<const int> source, std::size_t max_len);

// Beam search over cumulative log-probability. PAD and BOS are never
// emitted. Hypotheses that reach max_len without EOS compete with the
// finished ones.
BeamResult beam_decode(const Seq2Seq& model, std::span<const int> source,
                       const SearchOptions& opts);

// Maps output ids to strings; each UNK becomes the source token at the
// argmax of that step's attention row (earliest position on ties).
Sentence replace_unks(const Hypothesis& hyp, const Sentence& source, const Vocabulary& target_vocab);

}  // namespace nse

#endif  // NSE_SEARCH_HPP
