#include "nse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>

namespace nse {

namespace {

void require_instances(const std::vector<EvalInstance>& instances, const char* metric) {
  if (instances.empty()) throw UsageError(std::string(metric) + ": no instances");
  for (const auto& inst : instances)
    if (inst.references.empty()) throw UsageError(std::string(metric) + ": instance without references");
}

double f1(double p, double r) { return (p > 0.0 || r > 0.0) ? 2.0 * p * r / (p + r) : 0.0; }

NgramCounts scaled(const NgramCounts& c, std::size_t factor) {
  NgramCounts out;
  for (const auto& [g, n] : c) out[g] = n * factor;
  return out;
}

std::size_t count_of(const NgramCounts& c, const Ngram& g) {
  auto it = c.find(g);
  return it == c.end() ? 0 : it->second;
}

// Multiset intersection and difference, keeping positive counts only.
NgramCounts intersect(const NgramCounts& a, const NgramCounts& b) {
  NgramCounts out;
  for (const auto& [g, n] : a) {
    std::size_t m = std::min(n, count_of(b, g));
    if (m) out[g] = m;
  }
  return out;
}

NgramCounts subtract(const NgramCounts& a, const NgramCounts& b) {
  NgramCounts out;
  for (const auto& [g, n] : a) {
    std::size_t m = count_of(b, g);
    if (n > m) out[g] = n - m;
  }
  return out;
}

}  // namespace

NgramCounts ngram_profile(const Sentence& tokens, std::size_t n) {
  if (n == 0) throw UsageError("ngram order must be at least 1");
  NgramCounts out;
  if (tokens.size() < n) return out;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i)
    ++out[Ngram(tokens.begin() + i, tokens.begin() + i + n)];
  return out;
}

Sentence metric_tokens(std::string_view line, bool lowercase) {
  Sentence out = tokenize(line);
  if (lowercase)
    for (auto& tok : out)
      for (auto& ch : tok)
        if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
  return out;
}

double BleuStats::precision(std::size_t order) const {
  const std::size_t i = order - 1;
  return totals[i] ? double(matches[i]) / double(totals[i]) : 0.0;
}

BleuStats bleu_stats(const std::vector<EvalInstance>& instances, const BleuOptions& opts) {
  require_instances(instances, "bleu");
  BleuStats st;
  for (const auto& inst : instances) {
    const std::size_t c = inst.output.size();
    st.candidate_length += c;
    std::size_t best = inst.references[0].size();
    for (const auto& ref : inst.references) {
      std::size_t r = ref.size();
      auto dist = [c](std::size_t x) { return x > c ? x - c : c - x; };
      if (dist(r) < dist(best) || (dist(r) == dist(best) && r < best)) best = r;
    }
    st.reference_length += best;

    for (std::size_t n = 1; n <= kMaxOrder; ++n) {
      NgramCounts cand = ngram_profile(inst.output, n);
      NgramCounts max_ref;
      for (const auto& ref : inst.references)
        for (const auto& [g, k] : ngram_profile(ref, n)) max_ref[g] = std::max(max_ref[g], k);
      for (const auto& [g, k] : cand) {
        st.matches[n - 1] += std::min(k, count_of(max_ref, g));
        st.totals[n - 1] += k;
      }
    }
  }

  if (st.candidate_length == 0) return st;
  st.brevity_penalty = st.candidate_length > st.reference_length
                           ? 1.0
                           : std::exp(1.0 - double(st.reference_length) / double(st.candidate_length));
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= kMaxOrder; ++n) {
    double m = double(st.matches[n - 1]);
    double t = double(st.totals[n - 1]);
    if (opts.smooth && n > 1) {
      m += 1.0;
      t += 1.0;
    }
    if (m == 0.0 || t == 0.0) return st;  // score stays 0
    log_sum += std::log(m / t);
  }
  st.score = 100.0 * st.brevity_penalty * std::exp(log_sum / double(kMaxOrder));
  st.score = std::min(st.score, 100.0);
  return st;
}

double bleu_corpus(const std::vector<EvalInstance>& instances, const BleuOptions& opts) {
  return bleu_stats(instances, opts).score;
}

SariComponents sari_ngram(const Sentence& source, const Sentence& output,
                          const std::vector<Sentence>& references, std::size_t n) {
  const std::size_t numref = references.size();
  if (numref == 0) throw UsageError("sari: no references");
  NgramCounts s = ngram_profile(source, n);
  NgramCounts c = ngram_profile(output, n);
  NgramCounts r;
  for (const auto& ref : references)
    for (const auto& [g, k] : ngram_profile(ref, n)) r[g] += k;
  // Source and output counts are scaled by the reference count so they are
  // comparable with counts pooled over all references.
  NgramCounts s_rep = scaled(s, numref);
  NgramCounts c_rep = scaled(c, numref);

  SariComponents out;

  NgramCounts keep = intersect(s_rep, c_rep);
  NgramCounts keep_good = intersect(keep, r);
  NgramCounts keep_all = intersect(s_rep, r);
  double kp = 0.0, kr = 0.0;
  for (const auto& [g, k] : keep_good) {
    kp += double(k) / double(keep.at(g));
    kr += double(k) / double(keep_all.at(g));
  }
  double keep_p = keep.empty() ? 0.0 : kp / double(keep.size());
  double keep_r = keep_all.empty() ? 0.0 : kr / double(keep_all.size());
  out.keep = f1(keep_p, keep_r);

  NgramCounts del = subtract(s_rep, c_rep);
  NgramCounts del_good = subtract(del, r);
  double dp = 0.0;
  for (const auto& [g, k] : del_good) dp += double(k) / double(del.at(g));
  out.del = del.empty() ? 0.0 : dp / double(del.size());

  std::set<Ngram> added, added_good, addable;
  for (const auto& [g, _] : c)
    if (!s.count(g)) added.insert(g);
  for (const auto& g : added)
    if (r.count(g)) added_good.insert(g);
  for (const auto& [g, _] : r)
    if (!s.count(g)) addable.insert(g);
  double add_p = added.empty() ? 0.0 : double(added_good.size()) / double(added.size());
  double add_r = addable.empty() ? 0.0 : double(added_good.size()) / double(addable.size());
  out.add = f1(add_p, add_r);
  return out;
}

SariScore sari_sentence(const EvalInstance& instance) {
  SariScore sc;
  for (std::size_t n = 1; n <= kMaxOrder; ++n) {
    SariComponents comp = sari_ngram(instance.source, instance.output, instance.references, n);
    sc.keep += comp.keep;
    sc.del += comp.del;
    sc.add += comp.add;
  }
  sc.keep /= double(kMaxOrder);
  sc.del /= double(kMaxOrder);
  sc.add /= double(kMaxOrder);
  sc.sari = 100.0 * (sc.keep + sc.del + sc.add) / 3.0;
  return sc;
}

SariScore sari_corpus(const std::vector<EvalInstance>& instances) {
  require_instances(instances, "sari");
  SariScore total;
  for (const auto& inst : instances) {
    SariScore s = sari_sentence(inst);
    total.sari += s.sari;
    total.keep += s.keep;
    total.del += s.del;
    total.add += s.add;
  }
  const double n = double(instances.size());
  total.sari /= n;
  total.keep /= n;
  total.del /= n;
  total.add /= n;
  return total;
}

MetricReport evaluate_corpus(const std::vector<EvalInstance>& instances, const BleuOptions& opts) {
  MetricReport rep;
  rep.bleu = bleu_corpus(instances, opts);
  rep.sari = sari_corpus(instances);
  rep.instances = instances.size();
  return rep;
}

}  // namespace nse
