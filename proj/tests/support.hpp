#ifndef NSE_TESTS_SUPPORT_HPP
#define NSE_TESTS_SUPPORT_HPP

// Independent reference implementations and fixtures shared by the unit
// tests and the acceptance runner. Oracles here deliberately avoid the
// library's own helpers (n-gram maps, search, selection).

#include <string>
#include <vector>

#include "nse/grad_check.hpp"
#include "nse/search.hpp"
#include "nse/train.hpp"

namespace nse::testing {

// ---- metrics ----

// SARI from flat n-gram lists, counting by linear scan.
double oracle_sari(const Sentence& source, const Sentence& output,
                   const std::vector<Sentence>& references);
double oracle_sari_corpus(const std::vector<EvalInstance>& instances);
double oracle_bleu(const std::vector<EvalInstance>& instances);

// ---- gradients ----

struct GradCase {
  std::string name;
  LossFn loss;
};

struct GradSuite {
  std::vector<NamedParam> params;
  std::vector<GradCase> cases;
};

// One loss per differentiable tensor op, on fresh random inputs.
GradSuite op_gradient_suite(Rng& rng);
// LSTM cell, MLP, linear, embedding lookup, attention and one NSE step.
GradSuite layer_gradient_suite(Rng& rng);

// ---- selection ----

std::size_t oracle_select(const std::vector<EpochRecord>& records, TuneMetric metric,
                          double threshold);

// ---- search ----

struct ScoredSequence {
  std::vector<int> tokens;  // content tokens
  bool finished = false;    // ends with EOS
  double log_prob = 0.0;
};

// Teacher-forced score of `tokens`, plus the EOS step when `finished`.
double forced_score(const Seq2Seq& model, const std::vector<int>& source,
                    const std::vector<int>& tokens, bool finished);

// Every output a search limited to `max_len` decoder steps can produce:
// k < max_len content tokens then EOS, or exactly max_len content tokens.
std::vector<ScoredSequence> enumerate_outputs(const Seq2Seq& model, const std::vector<int>& source,
                                              std::size_t max_len);

Seq2Seq random_model(EncoderKind kind, std::size_t dim, std::size_t src_vocab,
                     std::size_t tgt_vocab, std::uint64_t seed, double range = 0.1);
std::vector<int> random_source(Rng& rng, std::size_t vocab, std::size_t min_len,
                               std::size_t max_len);

// ---- toy tasks ----

struct ToyTask {
  Vocabulary vocab;
  ParallelCorpus train;
  ParallelCorpus dev;
  ParallelCorpus test;
};

// Content tokens t0..t{n-1}; random lengths in [min_len, max_len].
ToyTask copy_task(std::size_t content_tokens, std::size_t min_len, std::size_t max_len,
                  std::size_t train_pairs, std::size_t dev_pairs, std::size_t test_pairs,
                  std::uint64_t seed);

// Target is the source with the first `stop_words` content tokens removed.
ToyTask deletion_task(std::size_t content_tokens, std::size_t stop_words, std::size_t min_len,
                      std::size_t max_len, std::size_t train_pairs, std::size_t dev_pairs,
                      std::size_t test_pairs, std::uint64_t seed);

DevSet as_dev(const ParallelCorpus& c);

// Positional matches over the summed longer length of output and reference.
double exact_token_accuracy(const Seq2Seq& model, const Vocabulary& vocab,
                            const ParallelCorpus& data, std::size_t max_len);

}  // namespace nse::testing

#endif  // NSE_TESTS_SUPPORT_HPP
