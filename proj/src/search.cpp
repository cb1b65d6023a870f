#include "nse/search.hpp"

#include <algorithm>
#include <limits>

namespace nse {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool emittable(std::size_t token) { return token != kPadId && token != kBosId; }

struct Candidate {
  double score;
  std::size_t parent;
  int token;
};

}  // namespace

double hypothesis_score(const Hypothesis& h, bool length_normalize) {
  if (!length_normalize) return h.log_prob;
  std::size_t steps = h.tokens.size() + (h.finished ? 1 : 0);
  return steps ? h.log_prob / double(steps) : h.log_prob;
}

Hypothesis greedy_decode(const Seq2Seq& model, std::span<const int> source, std::size_t max_len) {
  if (max_len == 0) throw ConfigError("max_len must be at least 1");
  Tape tape(false);
  EncoderOutput enc = model.encode(tape, source, RunMode{});
  Hypothesis hyp;
  hyp.state = model.start(tape, enc);
  for (std::size_t t = 0; t < max_len; ++t) {
    DecoderStepOutput out = model.step(tape, hyp.state, enc, RunMode{});
    auto lp = log_softmax_values(out.logits->data);
    // Same ranking key as beam search: cumulative score, lowest id on ties.
    int best = -1;
    double best_score = kNegInf;
    for (std::size_t k = 0; k < lp.size(); ++k) {
      if (!emittable(k)) continue;
      double s = hyp.log_prob + lp[k];
      if (best < 0 || s > best_score) {
        best = static_cast<int>(k);
        best_score = s;
      }
    }
    hyp.log_prob = best_score;
    if (best == kEosId) {
      hyp.finished = true;
      break;
    }
    hyp.tokens.push_back(best);
    hyp.alignments.push_back(out.alpha->data);
    hyp.state = out.state;
    hyp.state.prev_token = best;
  }
  return hyp;
}

BeamResult beam_decode(const Seq2Seq& model, std::span<const int> source,
                       const SearchOptions& opts) {
  if (opts.beam < 1) throw ConfigError("beam size must be at least 1");
  if (opts.max_len == 0) throw ConfigError("max_len must be at least 1");
  Tape tape(false);
  EncoderOutput enc = model.encode(tape, source, RunMode{});

  std::vector<Hypothesis> live(1);
  live[0].state = model.start(tape, enc);
  std::vector<Hypothesis> done;

  for (std::size_t t = 0; t < opts.max_len && !live.empty(); ++t) {
    std::vector<DecoderStepOutput> outs;
    std::vector<Candidate> cands;
    outs.reserve(live.size());
    for (std::size_t k = 0; k < live.size(); ++k) {
      outs.push_back(model.step(tape, live[k].state, enc, RunMode{}));
      auto lp = log_softmax_values(outs.back().logits->data);
      for (std::size_t tok = 0; tok < lp.size(); ++tok)
        if (emittable(tok)) cands.push_back({live[k].log_prob + lp[tok], k, static_cast<int>(tok)});
    }
    const std::size_t keep = std::min(opts.beam, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + keep, cands.end(),
                      [](const Candidate& a, const Candidate& b) {
                        if (a.score != b.score) return a.score > b.score;
                        if (a.parent != b.parent) return a.parent < b.parent;
                        return a.token < b.token;
                      });

    std::vector<Hypothesis> next;
    for (std::size_t i = 0; i < keep; ++i) {
      const Candidate& c = cands[i];
      const Hypothesis& parent = live[c.parent];
      Hypothesis h;
      h.tokens = parent.tokens;
      h.alignments = parent.alignments;
      h.log_prob = c.score;
      if (c.token == kEosId) {
        h.state = parent.state;
        h.finished = true;
        done.push_back(std::move(h));
        continue;
      }
      h.tokens.push_back(c.token);
      h.alignments.push_back(outs[c.parent].alpha->data);
      h.state = outs[c.parent].state;
      h.state.prev_token = c.token;
      if (t + 1 == opts.max_len)
        done.push_back(std::move(h));
      else
        next.push_back(std::move(h));
    }
    live = std::move(next);

    // Scores only fall as tokens are appended, so nothing live can overtake
    // a terminated hypothesis that already scores at least as high.
    if (!opts.length_normalize && !done.empty() && !live.empty()) {
      double best_done = kNegInf, best_live = kNegInf;
      for (const auto& h : done) best_done = std::max(best_done, h.log_prob);
      for (const auto& h : live) best_live = std::max(best_live, h.log_prob);
      if (best_done >= best_live) break;
    }
  }

  std::stable_sort(done.begin(), done.end(), [&](const Hypothesis& a, const Hypothesis& b) {
    return hypothesis_score(a, opts.length_normalize) > hypothesis_score(b, opts.length_normalize);
  });
  BeamResult result;
  result.best = done.front();
  result.final_beam = std::move(done);
  return result;
}

Sentence replace_unks(const Hypothesis& hyp, const Sentence& source, const Vocabulary& target_vocab) {
  if (hyp.alignments.size() != hyp.tokens.size())
    throw UsageError("replace_unks: " + std::to_string(hyp.tokens.size()) + " tokens but " +
                     std::to_string(hyp.alignments.size()) + " alignment rows");
  Sentence out;
  out.reserve(hyp.tokens.size());
  for (std::size_t t = 0; t < hyp.tokens.size(); ++t) {
    if (hyp.tokens[t] != kUnkId) {
      out.push_back(target_vocab.token(hyp.tokens[t]));
      continue;
    }
    const auto& alpha = hyp.alignments[t];
    if (alpha.empty() || alpha.size() != source.size())
      throw UsageError("replace_unks: alignment row " + std::to_string(t) + " has " +
                       std::to_string(alpha.size()) + " entries for a source of " +
                       std::to_string(source.size()));
    out.push_back(source[argmax(alpha)]);
  }
  return out;
}

}  // namespace nse
