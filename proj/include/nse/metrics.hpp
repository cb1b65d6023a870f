#ifndef NSE_METRICS_HPP
#define NSE_METRICS_HPP

#include <array>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "nse/corpus.hpp"

namespace nse {

using Ngram = std::vector<std::string>;
using NgramCounts = std::map<Ngram, std::size_t>;

NgramCounts ngram_profile(const Sentence& tokens, std::size_t n);

// Whitespace split, optionally lowercased (ASCII).
Sentence metric_tokens(std::string_view line, bool lowercase = true);

struct EvalInstance {
  Sentence source;
  Sentence output;
  std::vector<Sentence> references;
};

inline constexpr std::size_t kMaxOrder = 4;

struct BleuOptions {
  // Add-one smoothing of the n >= 2 precisions.
  bool smooth = false;
};

struct BleuStats {
  std::array<std::size_t, kMaxOrder> matches{};  // clipped
  std::array<std::size_t, kMaxOrder> totals{};
  std::size_t candidate_length = 0;
  std::size_t reference_length = 0;  // closest reference per sentence, shorter on ties
  double brevity_penalty = 0.0;
  double score = 0.0;                // [0, 100]

  double precision(std::size_t order) const;  // order is 1-based, unsmoothed
};

BleuStats bleu_stats(const std::vector<EvalInstance>& instances, const BleuOptions& opts = {});
double bleu_corpus(const std::vector<EvalInstance>& instances, const BleuOptions& opts = {});

// Per-order SARI components for one instance, each in [0, 1].
struct SariComponents {
  double keep = 0.0;  // F1
  double del = 0.0;   // precision
  double add = 0.0;   // F1
};

struct SariScore {
  double sari = 0.0;  // [0, 100]
  double keep = 0.0;  // [0, 1], averaged over orders then instances
  double del = 0.0;
  double add = 0.0;
};

SariComponents sari_ngram(const Sentence& source, const Sentence& output,
                          const std::vector<Sentence>& references, std::size_t n);
SariScore sari_sentence(const EvalInstance& instance);
SariScore sari_corpus(const std::vector<EvalInstance>& instances);

struct MetricReport {
  double bleu = 0.0;
  SariScore sari;
  std::size_t instances = 0;
};

MetricReport evaluate_corpus(const std::vector<EvalInstance>& instances,
                             const BleuOptions& opts = {});

}  // namespace nse

#endif  // NSE_METRICS_HPP
