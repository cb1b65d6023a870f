#ifndef NSE_TRAIN_HPP
#define NSE_TRAIN_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nse/metrics.hpp"
#include "nse/model.hpp"

namespace nse {

enum class TuneMetric { Bleu, Sari };

std::string to_string(TuneMetric m);
TuneMetric parse_tune_metric(const std::string& name);

double default_learning_rate(EncoderKind kind);

struct TrainConfig {
  EncoderKind encoder = EncoderKind::Nse;
  std::size_t dim = 300;
  std::size_t vocab_size = 30000;  // cap per side, reserved tokens included
  double lr = 0.0003;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t batch_size = 32;
  double dropout = 0.3;
  std::size_t max_epochs = 40;
  TuneMetric tune_metric = TuneMetric::Bleu;
  double sari_bleu_threshold = 0.0;
  std::uint64_t seed = 1;

  double init_range = 0.1;
  bool forget_bias_one = true;
  double clip_norm = 5.0;          // global gradient norm; <= 0 disables
  std::size_t max_train_len = 100; // longer training pairs are dropped
  bool bucket_by_length = false;
  std::size_t dev_max_len = 100;
  bool lowercase_metrics = true;

  void validate() const;
};

struct AdamState {
  std::vector<std::vector<double>> m;  // parameter order of the ParameterSet
  std::vector<std::vector<double>> v;
  std::uint64_t step = 0;

  static AdamState zeros_like(const ParameterSet& params);
};

struct AdamOptions {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam update of every parameter from its accumulated grad.
void adam_step(ParameterSet& params, AdamState& state, const AdamOptions& opts);

// Rescales all gradients so their joint L2 norm is at most max_norm.
// Returns the norm before clipping.
double clip_gradients(ParameterSet& params, double max_norm);

// Mean token cross-entropy; PAD targets are masked out.
Var xent_loss(Tape& tape, const Var& logits, std::span<const int> targets);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double loss = 0.0;
  double dev_bleu = 0.0;
  double dev_sari = 0.0;
  double elapsed_seconds = 0.0;
};

std::string format_record(const EpochRecord& r);

// BLEU tuning takes the highest dev BLEU. SARI tuning takes the highest
// dev SARI among epochs whose BLEU reaches the threshold, falling back to
// the highest BLEU when none does. Earliest epoch wins ties. Returns the
// index into `records`.
std::size_t select_model(const std::vector<EpochRecord>& records, TuneMetric metric,
                         double sari_bleu_threshold);

struct Checkpoint {
  std::uint32_t version = 1;
  ModelSpec spec;
  Vocabulary source_vocab;
  Vocabulary target_vocab;
  ParameterSet params;
  std::optional<AdamState> adam;
  std::uint32_t epoch = 0;
  double dev_bleu = 0.0;
  double dev_sari = 0.0;
};

struct DevSet {
  std::vector<Sentence> source;
  std::vector<std::vector<Sentence>> references;  // per sentence

  std::size_t size() const { return source.size(); }
};

// Greedy-decodes each source sentence with UNK replacement.
std::vector<Sentence> decode_corpus(const Seq2Seq& model, const Vocabulary& source_vocab,
                                    const Vocabulary& target_vocab,
                                    const std::vector<Sentence>& sources, std::size_t max_len);

MetricReport score_outputs(const std::vector<Sentence>& sources,
                           const std::vector<Sentence>& outputs,
                           const std::vector<std::vector<Sentence>>& references, bool lowercase);

struct TrainHooks {
  std::function<void(const EpochRecord&)> on_epoch;
  // Returning true stops training after the current epoch.
  std::function<bool(const EpochRecord&, const Seq2Seq&)> should_stop;
};

struct TrainResult {
  Checkpoint best;
  Checkpoint last;
  std::vector<EpochRecord> log;
  std::size_t best_index = 0;
  std::size_t dropped_long = 0;
};

// Trains `model` in place. The vocabularies must match the model's.
TrainResult train(const TrainConfig& config, Seq2Seq& model, const Vocabulary& source_vocab,
                  const Vocabulary& target_vocab, const ParallelCorpus& train_pairs,
                  const DevSet& dev, const TrainHooks& hooks = {});

// Builds vocabularies and a fresh model from the config, then trains.
TrainResult train(const TrainConfig& config, const ParallelCorpus& train_pairs, const DevSet& dev,
                  const TrainHooks& hooks = {});

}  // namespace nse

#endif  // NSE_TRAIN_HPP
