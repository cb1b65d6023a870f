#include "nse/train.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "nse/search.hpp"

namespace nse {

std::string to_string(TuneMetric m) { return m == TuneMetric::Bleu ? "bleu" : "sari"; }

TuneMetric parse_tune_metric(const std::string& name) {
  if (name == "bleu") return TuneMetric::Bleu;
  if (name == "sari") return TuneMetric::Sari;
  throw ConfigError("unknown tune metric '" + name + "' (expected bleu or sari)");
}

double default_learning_rate(EncoderKind kind) {
  return kind == EncoderKind::Lstm ? 0.001 : 0.0003;
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (dim == 0) fail("dim must be positive");
  if (vocab_size <= kReservedTokens) fail("vocab_size must exceed 4");
  if (!(lr > 0.0)) fail("lr must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) fail("beta1 must be in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) fail("beta2 must be in [0, 1)");
  if (!(adam_eps > 0.0)) fail("adam_eps must be positive");
  if (batch_size < 1) fail("batch_size must be at least 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must be in [0, 1)");
  if (max_epochs < 1) fail("max_epochs must be at least 1");
  if (!(sari_bleu_threshold >= 0.0 && sari_bleu_threshold <= 100.0))
    fail("sari_bleu_threshold must be in [0, 100]");
  if (!(init_range > 0.0)) fail("init_range must be positive");
  if (max_train_len < 1) fail("max_train_len must be at least 1");
  if (dev_max_len < 1) fail("dev_max_len must be at least 1");
}

AdamState AdamState::zeros_like(const ParameterSet& params) {
  AdamState s;
  for (const auto& [_, p] : params) {
    s.m.emplace_back(p->size(), 0.0);
    s.v.emplace_back(p->size(), 0.0);
  }
  return s;
}

void adam_step(ParameterSet& params, AdamState& state, const AdamOptions& opts) {
  if (state.m.size() != params.size() || state.v.size() != params.size())
    throw UsageError("adam state does not match the parameter set");
  for (const auto& [name, p] : params)
    if (!p->has_grad()) throw UsageError("adam_step: parameter " + name + " has no gradient");

  ++state.step;
  const double t = double(state.step);
  const double c1 = 1.0 - std::pow(opts.beta1, t);
  const double c2 = 1.0 - std::pow(opts.beta2, t);
  std::size_t k = 0;
  for (const auto& [_, p] : params) {
    auto& m = state.m[k];
    auto& v = state.v[k];
    if (m.size() != p->size()) throw UsageError("adam state shape mismatch");
    for (std::size_t i = 0; i < p->size(); ++i) {
      const double g = p->grad[i];
      m[i] = opts.beta1 * m[i] + (1.0 - opts.beta1) * g;
      v[i] = opts.beta2 * v[i] + (1.0 - opts.beta2) * g * g;
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      p->data[i] -= opts.lr * mhat / (std::sqrt(vhat) + opts.eps);
    }
    ++k;
  }
}

double clip_gradients(ParameterSet& params, double max_norm) {
  double sq = 0.0;
  for (const auto& [_, p] : params)
    for (double g : p->grad) sq += g * g;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double f = max_norm / norm;
    for (const auto& [_, p] : params)
      for (double& g : p->grad) g *= f;
  }
  return norm;
}

Var xent_loss(Tape& tape, const Var& logits, std::span<const int> targets) {
  return masked_cross_entropy(tape, logits, targets, kPadId);
}

std::string format_record(const EpochRecord& r) {
  std::ostringstream os;
  os << std::fixed << "epoch=" << r.epoch << " loss=" << std::setprecision(6) << r.loss
     << " dev_bleu=" << std::setprecision(4) << r.dev_bleu << " dev_sari=" << r.dev_sari
     << " elapsed=" << std::setprecision(2) << r.elapsed_seconds;
  return os.str();
}

std::size_t select_model(const std::vector<EpochRecord>& records, TuneMetric metric,
                         double sari_bleu_threshold) {
  if (records.empty()) throw UsageError("select_model: no epoch records");
  auto argmax_bleu = [&]() {
    std::size_t best = 0;
    for (std::size_t i = 1; i < records.size(); ++i)
      if (records[i].dev_bleu > records[best].dev_bleu) best = i;
    return best;
  };
  if (metric == TuneMetric::Bleu) return argmax_bleu();
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].dev_bleu < sari_bleu_threshold) continue;
    if (!best || records[i].dev_sari > records[*best].dev_sari) best = i;
  }
  return best ? *best : argmax_bleu();
}

std::vector<Sentence> decode_corpus(const Seq2Seq& model, const Vocabulary& source_vocab,
                                    const Vocabulary& target_vocab,
                                    const std::vector<Sentence>& sources, std::size_t max_len) {
  std::vector<Sentence> outputs;
  outputs.reserve(sources.size());
  for (const auto& src : sources) {
    if (src.empty()) {
      outputs.emplace_back();
      continue;
    }
    auto ids = source_vocab.encode(src);
    Hypothesis h = greedy_decode(model, ids, max_len);
    outputs.push_back(replace_unks(h, src, target_vocab));
  }
  return outputs;
}

MetricReport score_outputs(const std::vector<Sentence>& sources,
                           const std::vector<Sentence>& outputs,
                           const std::vector<std::vector<Sentence>>& references, bool lowercase) {
  if (sources.size() != outputs.size() || sources.size() != references.size())
    throw UsageError("score_outputs: sources, outputs and references differ in length");
  auto norm = [lowercase](const Sentence& s) { return metric_tokens(join(s), lowercase); };
  std::vector<EvalInstance> instances;
  instances.reserve(sources.size());
  for (std::size_t i = 0; i < sources.size(); ++i) {
    EvalInstance inst;
    inst.source = norm(sources[i]);
    inst.output = norm(outputs[i]);
    for (const auto& r : references[i]) inst.references.push_back(norm(r));
    instances.push_back(std::move(inst));
  }
  return evaluate_corpus(instances);
}

namespace {

Checkpoint snapshot(const Seq2Seq& model, const Vocabulary& sv, const Vocabulary& tv,
                    const EpochRecord& rec, const AdamState* adam) {
  Checkpoint ck;
  ck.spec = model.spec();
  ck.source_vocab = sv;
  ck.target_vocab = tv;
  ck.params = model.params().clone();
  if (adam) ck.adam = *adam;
  ck.epoch = static_cast<std::uint32_t>(rec.epoch);
  ck.dev_bleu = rec.dev_bleu;
  ck.dev_sari = rec.dev_sari;
  return ck;
}

}  // namespace

TrainResult train(const TrainConfig& config, Seq2Seq& model, const Vocabulary& source_vocab,
                  const Vocabulary& target_vocab, const ParallelCorpus& train_pairs,
                  const DevSet& dev, const TrainHooks& hooks) {
  config.validate();
  if (train_pairs.size() == 0) throw ConfigError("training corpus is empty");
  if (dev.size() == 0) throw ConfigError("development set is empty");
  if (dev.references.size() != dev.size())
    throw ConfigError("development set references are not parallel to its sources");
  if (model.spec().source_vocab != source_vocab.size() ||
      model.spec().target_vocab != target_vocab.size())
    throw ConfigError("model vocabulary sizes do not match the vocabularies");

  TrainResult result;
  ParallelCorpus corpus = train_pairs;
  result.dropped_long = filter_long(corpus, config.max_train_len);
  if (corpus.size() == 0) throw ConfigError("no training pairs left after the length filter");

  AdamState adam = AdamState::zeros_like(model.params());
  const AdamOptions adam_opts{config.lr, config.beta1, config.beta2, config.adam_eps};
  Rng dropout_rng(config.seed);
  RunMode mode{true, config.dropout, &dropout_rng, false};
  const auto start = std::chrono::steady_clock::now();

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    Rng shuffle_rng(config.seed + epoch);
    auto batches = make_batches(corpus, source_vocab, target_vocab,
                                {config.batch_size, config.bucket_by_length}, shuffle_rng);
    double loss_sum = 0.0;
    std::size_t token_sum = 0;
    for (const auto& batch : batches) {
      model.params().zero_grad();
      Tape tape;
      std::size_t tokens = 0;
      Var total;
      for (std::size_t b = 0; b < batch.size; ++b) {
        auto src = batch.source_row(b);
        auto tgt = batch.target_row(b);
        Var logits = model.forced_logits(tape, src, tgt, mode);
        Var weighted = scale(tape, xent_loss(tape, logits, tgt), double(tgt.size()));
        total = total ? add(tape, total, weighted) : weighted;
        tokens += tgt.size();
      }
      Var loss = scale(tape, total, 1.0 / double(tokens));
      tape.backward(loss);
      if (config.clip_norm > 0.0) clip_gradients(model.params(), config.clip_norm);
      adam_step(model.params(), adam, adam_opts);
      loss_sum += loss->data[0] * double(tokens);
      token_sum += tokens;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = loss_sum / double(token_sum);
    auto outputs = decode_corpus(model, source_vocab, target_vocab, dev.source, config.dev_max_len);
    MetricReport rep = score_outputs(dev.source, outputs, dev.references, config.lowercase_metrics);
    rec.dev_bleu = rep.bleu;
    rec.dev_sari = rep.sari.sari;
    rec.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.log.push_back(rec);

    std::size_t chosen = select_model(result.log, config.tune_metric, config.sari_bleu_threshold);
    // A new choice is always the newest epoch, so a snapshot taken when an
    // epoch is chosen stays valid.
    if (chosen == result.log.size() - 1)
      result.best = snapshot(model, source_vocab, target_vocab, rec, nullptr);
    result.best_index = chosen;
    if (hooks.on_epoch) hooks.on_epoch(rec);
    if (hooks.should_stop && hooks.should_stop(rec, model)) break;
  }
  result.last = snapshot(model, source_vocab, target_vocab, result.log.back(), &adam);
  return result;
}

TrainResult train(const TrainConfig& config, const ParallelCorpus& train_pairs, const DevSet& dev,
                  const TrainHooks& hooks) {
  config.validate();
  if (train_pairs.size() == 0) throw ConfigError("training corpus is empty");
  Vocabulary sv = build_vocab(train_pairs.source, config.vocab_size);
  Vocabulary tv = build_vocab(train_pairs.target, config.vocab_size);
  Rng rng(config.seed);
  ModelSpec spec{config.encoder, config.dim, sv.size(), tv.size()};
  Seq2Seq model(spec, rng, InitOptions{config.init_range, config.forget_bias_one});
  return train(config, model, sv, tv, train_pairs, dev, hooks);
}

}  // namespace nse
