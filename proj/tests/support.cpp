#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

namespace nse::testing {

namespace {

std::vector<std::string> grams(const Sentence& s, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i + n <= s.size(); ++i) {
    std::string g;
    for (std::size_t k = 0; k < n; ++k) g += (k ? "\x1f" : "") + s[i + k];
    out.push_back(g);
  }
  return out;
}

std::size_t cnt(const std::vector<std::string>& v, const std::string& g) {
  return static_cast<std::size_t>(std::count(v.begin(), v.end(), g));
}

std::vector<std::string> distinct(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

double f1(double p, double r) { return p + r > 0 ? 2 * p * r / (p + r) : 0.0; }

}  // namespace

double oracle_sari(const Sentence& source, const Sentence& output,
                   const std::vector<Sentence>& references) {
  const std::size_t R = references.size();
  double keep_total = 0, del_total = 0, add_total = 0;
  for (std::size_t n = 1; n <= 4; ++n) {
    auto S = grams(source, n), C = grams(output, n);
    std::vector<std::string> Rg;
    for (const auto& ref : references)
      for (auto& g : grams(ref, n)) Rg.push_back(g);
    std::vector<std::string> all = S;
    all.insert(all.end(), C.begin(), C.end());
    all.insert(all.end(), Rg.begin(), Rg.end());

    double kp = 0, kp_den = 0, kr = 0, kr_den = 0;
    double dp = 0, dp_den = 0;
    double add_good = 0, add_den = 0, addable = 0;
    for (const auto& g : distinct(all)) {
      const std::size_t s = cnt(S, g) * R, c = cnt(C, g) * R, r = cnt(Rg, g);
      const std::size_t keep = std::min(s, c), good = std::min(keep, r), kall = std::min(s, r);
      if (keep > 0) {
        kp_den += 1;
        kp += double(good) / double(keep);
      }
      if (kall > 0) {
        kr_den += 1;
        kr += double(good) / double(kall);
      }
      const std::size_t del = s > c ? s - c : 0;
      const std::size_t del_good = del > r ? del - r : 0;
      if (del > 0) {
        dp_den += 1;
        dp += double(del_good) / double(del);
      }
      if (s == 0 && c > 0) {
        add_den += 1;
        if (r > 0) add_good += 1;
      }
      if (s == 0 && r > 0) addable += 1;
    }
    keep_total += f1(kp_den ? kp / kp_den : 0, kr_den ? kr / kr_den : 0);
    del_total += dp_den ? dp / dp_den : 0;
    add_total += f1(add_den ? add_good / add_den : 0, addable ? add_good / addable : 0);
  }
  return 100.0 * (keep_total / 4 + del_total / 4 + add_total / 4) / 3.0;
}

double oracle_sari_corpus(const std::vector<EvalInstance>& instances) {
  double sum = 0;
  for (const auto& i : instances) sum += oracle_sari(i.source, i.output, i.references);
  return sum / double(instances.size());
}

double oracle_bleu(const std::vector<EvalInstance>& instances) {
  double matches[4] = {0, 0, 0, 0}, totals[4] = {0, 0, 0, 0};
  double c_len = 0, r_len = 0;
  for (const auto& inst : instances) {
    const double c = double(inst.output.size());
    double best = -1;
    for (const auto& ref : inst.references) {
      double r = double(ref.size());
      if (best < 0 || std::fabs(r - c) < std::fabs(best - c) ||
          (std::fabs(r - c) == std::fabs(best - c) && r < best))
        best = r;
    }
    c_len += c;
    r_len += best;
    for (std::size_t n = 1; n <= 4; ++n) {
      auto cand = grams(inst.output, n);
      totals[n - 1] += double(cand.size());
      for (const auto& g : distinct(cand)) {
        std::size_t max_ref = 0;
        for (const auto& ref : inst.references) max_ref = std::max(max_ref, cnt(grams(ref, n), g));
        matches[n - 1] += double(std::min(cnt(cand, g), max_ref));
      }
    }
  }
  if (c_len == 0) return 0.0;
  double prod = 1.0;
  for (int n = 0; n < 4; ++n) {
    if (matches[n] == 0) return 0.0;
    prod *= matches[n] / totals[n];
  }
  const double bp = c_len > r_len ? 1.0 : std::exp(1.0 - r_len / c_len);
  return 100.0 * bp * std::pow(prod, 0.25);
}

std::size_t oracle_select(const std::vector<EpochRecord>& records, TuneMetric metric,
                          double threshold) {
  std::vector<std::size_t> pool;
  if (metric == TuneMetric::Sari)
    for (std::size_t i = 0; i < records.size(); ++i)
      if (records[i].dev_bleu >= threshold) pool.push_back(i);
  const bool by_sari = !pool.empty();
  if (!by_sari)
    for (std::size_t i = 0; i < records.size(); ++i) pool.push_back(i);
  auto value = [&](std::size_t i) { return by_sari ? records[i].dev_sari : records[i].dev_bleu; };
  double best = value(pool[0]);
  for (auto i : pool) best = std::max(best, value(i));
  for (auto i : pool)
    if (value(i) == best) return i;
  return pool[0];
}

namespace {

Var leaf(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(shape);
  for (auto& x : t.data) x = u(rng);
  return make_var(std::move(t), true);
}

}  // namespace

GradSuite op_gradient_suite(Rng& rng) {
  auto a = leaf({3, 4}, rng);
  auto b = leaf({3, 4}, rng);
  auto v = leaf({4}, rng);
  auto m = leaf({4, 2}, rng);
  auto w = leaf({3}, rng, 0.05, 0.95);
  auto value = leaf({4}, rng);
  auto table = leaf({5, 4}, rng);
  const std::vector<int> ids{4, 1, 4};
  const std::vector<int> targets{2, 0, 3};

  GradSuite s;
  s.params = {{"a", a}, {"b", b}, {"v", v}, {"m", m}, {"w", w}, {"value", value}, {"table", table}};
  s.cases = {
      {"matmul", [=](Tape& t) { return sum(t, matmul(t, a, m)); }},
      {"matvec", [=](Tape& t) { return sum(t, nse::tanh(t, matmul(t, a, v))); }},
      {"add", [=](Tape& t) { return sum(t, mul(t, add(t, a, b), a)); }},
      {"add_broadcast", [=](Tape& t) { return sum(t, mul(t, add(t, a, v), b)); }},
      {"sub", [=](Tape& t) { return sum(t, mul(t, sub(t, a, b), b)); }},
      {"mul_broadcast", [=](Tape& t) { return sum(t, mul(t, a, v)); }},
      {"sigmoid", [=](Tape& t) { return sum(t, mul(t, sigmoid(t, a), b)); }},
      {"tanh", [=](Tape& t) { return sum(t, mul(t, nse::tanh(t, a), b)); }},
      {"softmax", [=](Tape& t) { return sum(t, mul(t, softmax_rows(t, a), b)); }},
      {"concat", [=](Tape& t) { return sum(t, mul(t, concat(t, v, v), concat(t, v, sigmoid(t, v)))); }},
      {"scale", [=](Tape& t) { return sum(t, mul(t, scale(t, a, -2.5), a)); }},
      {"slice", [=](Tape& t) { return sum(t, mul(t, slice(t, v, 1, 2), slice(t, v, 2, 2))); }},
      {"row", [=](Tape& t) { return sum(t, mul(t, row(t, a, 1), row(t, b, 2))); }},
      {"stack",
       [=](Tape& t) {
         std::vector<Var> rs{v, nse::tanh(t, v)};
         return sum(t, mul(t, stack_rows(t, rs), stack_rows(t, rs)));
       }},
      {"gather", [=](Tape& t) { return sum(t, mul(t, gather_rows(t, table, ids), a)); }},
      {"interpolate", [=](Tape& t) { return sum(t, mul(t, interpolate_rows(t, a, w, value), b)); }},
      {"xent", [=](Tape& t) { return masked_cross_entropy(t, a, targets, 0); }},
  };
  return s;
}

GradSuite layer_gradient_suite(Rng& rng) {
  // The closures capture the parameter handles, so the set itself can go.
  ParameterSet ps;
  InitOptions init{0.5, false};
  auto cell = make_lstm(ps, "lstm", 4, 4, rng, init);
  auto net = make_mlp(ps, "mlp", 4, 3, 4, rng, init);
  auto lin = make_linear(ps, "linear", 4, 3, rng, init);
  auto emb = make_embedding(ps, "embed", 6, 4, rng, init);
  NseParams nsep{make_lstm(ps, "nse.read", 4, 4, rng, init),
                 make_mlp(ps, "nse.compose", 8, 4, 8, rng, init),
                 make_lstm(ps, "nse.write", 8, 4, rng, init)};
  auto x = leaf({4}, rng);
  auto h = leaf({4}, rng);
  auto c = leaf({4}, rng);
  auto states = leaf({3, 4}, rng);
  auto weights = leaf({3, 4}, rng);
  const std::vector<int> ids{5, 2, 5};

  GradSuite s;
  for (const auto& [n, p] : ps) s.params.push_back({n, p});
  for (auto [n, p] : std::vector<NamedParam>{{"x", x}, {"h", h}, {"c", c}, {"states", states}})
    s.params.push_back({n, p});
  s.cases = {
      {"lstm_step",
       [=](Tape& t) {
         auto st = lstm_step(t, cell, x, {h, c});
         return add(t, sum(t, mul(t, st.h, st.h)), sum(t, st.c));
       }},
      {"mlp", [=](Tape& t) { return sum(t, mul(t, mlp(t, net, x), h)); }},
      {"linear", [=](Tape& t) { return sum(t, nse::tanh(t, linear(t, lin, x))); }},
      {"embed", [=](Tape& t) { return sum(t, mul(t, nse::tanh(t, embed(t, emb, ids)), weights)); }},
      {"attend",
       [=](Tape& t) {
         auto at = attend(t, h, states);
         return add(t, sum(t, mul(t, at.context, x)), sum(t, mul(t, at.alpha, at.alpha)));
       }},
      {"nse_step",
       [=](Tape& t) {
         NseState prev{{h, c}, {c, h}, states};
         auto r = nse_step(t, nsep, x, prev);
         return add(t, sum(t, mul(t, r.state.memory, weights)), sum(t, mul(t, r.output, x)));
       }},
  };
  return s;
}

double forced_score(const Seq2Seq& model, const std::vector<int>& source,
                    const std::vector<int>& tokens, bool finished) {
  Tape tape(false);
  EncoderOutput enc = model.encode(tape, source, RunMode{});
  DecoderState st = model.start(tape, enc);
  std::vector<int> seq = tokens;
  if (finished) seq.push_back(kEosId);
  double total = 0.0;
  for (int tok : seq) {
    DecoderStepOutput out = model.step(tape, st, enc, RunMode{});
    total = total + log_softmax_values(out.logits->data)[tok];
    st = out.state;
    st.prev_token = tok;
  }
  return total;
}

std::vector<ScoredSequence> enumerate_outputs(const Seq2Seq& model, const std::vector<int>& source,
                                              std::size_t max_len) {
  Tape tape(false);
  EncoderOutput enc = model.encode(tape, source, RunMode{});
  const int vocab = static_cast<int>(model.spec().target_vocab);
  std::vector<ScoredSequence> out;
  std::vector<int> prefix;
  std::function<void(const DecoderState&, double)> walk = [&](const DecoderState& st, double lp) {
    DecoderStepOutput step = model.step(tape, st, enc, RunMode{});
    auto logp = log_softmax_values(step.logits->data);
    out.push_back({prefix, true, lp + logp[kEosId]});
    for (int tok = 0; tok < vocab; ++tok) {
      if (tok == kPadId || tok == kBosId || tok == kEosId) continue;
      prefix.push_back(tok);
      if (prefix.size() == max_len) {
        out.push_back({prefix, false, lp + logp[tok]});
      } else {
        DecoderState next = step.state;
        next.prev_token = tok;
        walk(next, lp + logp[tok]);
      }
      prefix.pop_back();
    }
  };
  walk(model.start(tape, enc), 0.0);
  return out;
}

Seq2Seq random_model(EncoderKind kind, std::size_t dim, std::size_t src_vocab,
                     std::size_t tgt_vocab, std::uint64_t seed, double range) {
  Rng rng(seed);
  return Seq2Seq(ModelSpec{kind, dim, src_vocab, tgt_vocab}, rng, InitOptions{range, true});
}

std::vector<int> random_source(Rng& rng, std::size_t vocab, std::size_t min_len,
                               std::size_t max_len) {
  std::uniform_int_distribution<std::size_t> len(min_len, max_len);
  std::uniform_int_distribution<int> tok(1, static_cast<int>(vocab) - 1);
  std::vector<int> out(len(rng));
  for (auto& t : out) t = tok(rng);
  return out;
}

namespace {

Vocabulary toy_vocab(std::size_t content_tokens) {
  auto tokens = reserved_tokens();
  for (std::size_t i = 0; i < content_tokens; ++i) tokens.push_back("t" + std::to_string(i));
  return Vocabulary(tokens);
}

ParallelCorpus sample(std::size_t pairs, Rng& rng,
                      const std::function<std::pair<Sentence, Sentence>(Rng&)>& make) {
  ParallelCorpus c;
  for (std::size_t i = 0; i < pairs; ++i) {
    auto [s, t] = make(rng);
    c.source.push_back(std::move(s));
    c.target.push_back(std::move(t));
  }
  return c;
}

}  // namespace

ToyTask copy_task(std::size_t content_tokens, std::size_t min_len, std::size_t max_len,
                  std::size_t train_pairs, std::size_t dev_pairs, std::size_t test_pairs,
                  std::uint64_t seed) {
  Rng rng(seed);
  auto make = [&](Rng& r) {
    std::uniform_int_distribution<std::size_t> len(min_len, max_len);
    std::uniform_int_distribution<std::size_t> tok(0, content_tokens - 1);
    Sentence s(len(r));
    for (auto& w : s) w = "t" + std::to_string(tok(r));
    return std::make_pair(s, s);
  };
  ToyTask task{toy_vocab(content_tokens), {}, {}, {}};
  task.train = sample(train_pairs, rng, make);
  task.dev = sample(dev_pairs, rng, make);
  task.test = sample(test_pairs, rng, make);
  return task;
}

ToyTask deletion_task(std::size_t content_tokens, std::size_t stop_words, std::size_t min_len,
                      std::size_t max_len, std::size_t train_pairs, std::size_t dev_pairs,
                      std::size_t test_pairs, std::uint64_t seed) {
  Rng rng(seed);
  auto make = [&](Rng& r) {
    std::uniform_int_distribution<std::size_t> len(min_len, max_len);
    std::uniform_int_distribution<std::size_t> tok(0, content_tokens - 1);
    for (;;) {
      Sentence s(len(r)), t;
      for (auto& w : s) {
        std::size_t id = tok(r);
        w = "t" + std::to_string(id);
        if (id >= stop_words) t.push_back(w);
      }
      if (!t.empty()) return std::make_pair(s, t);
    }
  };
  ToyTask task{toy_vocab(content_tokens), {}, {}, {}};
  task.train = sample(train_pairs, rng, make);
  task.dev = sample(dev_pairs, rng, make);
  task.test = sample(test_pairs, rng, make);
  return task;
}

DevSet as_dev(const ParallelCorpus& c) {
  DevSet d;
  d.source = c.source;
  for (const auto& t : c.target) d.references.push_back({t});
  return d;
}

double exact_token_accuracy(const Seq2Seq& model, const Vocabulary& vocab,
                            const ParallelCorpus& data, std::size_t max_len) {
  double hits = 0, total = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    Hypothesis h = greedy_decode(model, vocab.encode(data.source[i]), max_len);
    auto ref = vocab.encode(data.target[i]);
    for (std::size_t k = 0; k < std::min(h.tokens.size(), ref.size()); ++k)
      if (h.tokens[k] == ref[k]) hits += 1;
    total += double(std::max(h.tokens.size(), ref.size()));
  }
  return total > 0 ? hits / total : 0.0;
}

}  // namespace nse::testing
