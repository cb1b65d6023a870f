#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "nse/metrics.hpp"
#include "support.hpp"

using namespace nse;
using namespace nse::testing;

namespace {

std::size_t below(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

EvalInstance inst(const std::string& src, const std::string& out,
                  const std::vector<std::string>& refs) {
  EvalInstance e{tokenize(src), tokenize(out), {}};
  for (const auto& r : refs) e.references.push_back(tokenize(r));
  return e;
}

Sentence random_sentence(Rng& rng, std::size_t max_len, std::size_t alphabet) {
  std::size_t len = below(rng, max_len + 1);
  Sentence s;
  for (std::size_t i = 0; i < len; ++i) s.push_back(std::string(1, char('a' + below(rng, alphabet))));
  return s;
}

EvalInstance random_instance(Rng& rng) {
  EvalInstance e;
  e.source = random_sentence(rng, 8, 5);
  e.output = random_sentence(rng, 8, 6);
  std::size_t refs = 1 + below(rng, 4);
  for (std::size_t r = 0; r < refs; ++r) e.references.push_back(random_sentence(rng, 8, 6));
  return e;
}

}  // namespace

TEST_CASE("bleu canonical cases") {
  SUBCASE("perfect match") {
    auto e = inst("x", "the cat sat on the mat", {"the cat sat on the mat"});
    CHECK(std::fabs(bleu_corpus({e}) - 100.0) < 1e-9);
  }
  SUBCASE("clipped unigram precision") {
    auto e = inst("x", "the the the the the the the",
                  {"the cat is on the mat", "there is a cat on the mat"});
    auto st = bleu_stats({e});
    CHECK(st.matches[0] == 2);
    CHECK(st.totals[0] == 7);
    CHECK(std::fabs(st.precision(1) - 2.0 / 7.0) < 1e-9);
    CHECK(st.score == 0.0);
  }
  SUBCASE("zero overlap") {
    auto e = inst("x", "alpha beta gamma delta", {"one two three four"});
    CHECK(bleu_corpus({e}) == 0.0);
  }
  SUBCASE("brevity penalty") {
    auto e = inst("x", "a b c d e f", {"a b c d e f g h"});
    auto st = bleu_stats({e});
    CHECK(st.reference_length == 8);
    CHECK(std::fabs(st.score - 100.0 * std::exp(1.0 - 8.0 / 6.0)) < 1e-9);
  }
  SUBCASE("one substitution") {
    auto e = inst("x", "a b c d e", {"a b c d f"});
    CHECK(std::fabs(bleu_corpus({e}) - 100.0 * std::pow(0.2, 0.25)) < 1e-9);
  }
}

TEST_CASE("bleu reference length and smoothing") {
  // Closest reference length, shorter on ties: 4 and 6 around a 5 token output.
  auto e = inst("x", "a b c d e", {"a b c d", "a b c d e f"});
  CHECK(bleu_stats({e}).reference_length == 4);
  CHECK(bleu_stats({e}).brevity_penalty == 1.0);

  auto empty = inst("x", "", {"a b"});
  CHECK(bleu_corpus({empty}) == 0.0);

  auto shortcand = inst("x", "a b x", {"a b c"});
  CHECK(bleu_corpus({shortcand}) == 0.0);
  double smooth = bleu_corpus({shortcand}, BleuOptions{true});
  // p1 = 2/3, p2 = (1+1)/(2+1), p3 = (0+1)/(1+1), p4 = (0+1)/(0+1)
  CHECK(std::fabs(smooth - 100.0 * std::pow(2.0 / 3 * 2.0 / 3 * 0.5 * 1.0, 0.25)) < 1e-9);
}

TEST_CASE("bleu agrees with a naive implementation") {
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<EvalInstance> corpus;
    std::size_t n = 1 + below(rng, 5);
    for (std::size_t i = 0; i < n; ++i) corpus.push_back(random_instance(rng));
    CHECK(std::fabs(bleu_corpus(corpus) - oracle_bleu(corpus)) < 1e-9);
  }
}

TEST_CASE("sari reference values") {
  // Sentence scores from the reference SARI script on its own example.
  const std::string src = "About 95 species are currently accepted .";
  const std::vector<std::string> refs{"About 95 species are currently known .",
                                      "About 95 species are now accepted .",
                                      "95 species are now accepted ."};
  CHECK(std::fabs(sari_sentence(inst(src, "About 95 you now get in .", refs)).sari / 100.0 -
                  0.2682782411698074) < 1e-9);
  CHECK(std::fabs(sari_sentence(inst(src, "About 95 species are now agreed .", refs)).sari / 100.0 -
                  0.5889995423074248) < 1e-9);
  CHECK(std::fabs(sari_sentence(inst(src, "About 95 species are currently agreed .", refs)).sari /
                      100.0 -
                  0.5071608864657479) < 1e-9);
}

TEST_CASE("sari agrees with the brute force oracle") {
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    auto e = random_instance(rng);
    CHECK(std::fabs(sari_sentence(e).sari - oracle_sari(e.source, e.output, e.references)) < 1e-9);
  }
  std::vector<EvalInstance> corpus;
  for (int i = 0; i < 20; ++i) corpus.push_back(random_instance(rng));
  CHECK(std::fabs(sari_corpus(corpus).sari - oracle_sari_corpus(corpus)) < 1e-9);
}

TEST_CASE("sari components") {
  // Copying the source keeps everything and deletes nothing.
  auto copy = inst("a b c", "a b c", {"a b"});
  auto unigram = sari_ngram(copy.source, copy.output, copy.references, 1);
  CHECK(unigram.del == 0.0);
  CHECK(unigram.add == 0.0);
  CHECK(unigram.keep > 0.0);

  auto exact = inst("a b c", "a b d", {"a b d"});
  auto u = sari_ngram(exact.source, exact.output, exact.references, 1);
  CHECK(u.keep == 1.0);
  CHECK(u.del == 1.0);
  CHECK(u.add == 1.0);

  for (auto e : {copy, exact}) {
    auto s = sari_sentence(e);
    CHECK(s.sari >= 0.0);
    CHECK(s.sari <= 100.0);
  }
}

TEST_CASE("metrics are invariant to instance order and duplicated reference sets") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<EvalInstance> corpus;
    for (int i = 0; i < 8; ++i) corpus.push_back(random_instance(rng));
    auto shuffled = corpus;
    std::reverse(shuffled.begin(), shuffled.end());
    std::rotate(shuffled.begin(), shuffled.begin() + 3, shuffled.end());
    CHECK(std::fabs(bleu_corpus(corpus) - bleu_corpus(shuffled)) < 1e-9);
    CHECK(std::fabs(sari_corpus(corpus).sari - sari_corpus(shuffled).sari) < 1e-9);

    auto doubled = corpus;
    for (auto& e : doubled) {
      auto refs = e.references;
      e.references.insert(e.references.end(), refs.begin(), refs.end());
    }
    CHECK(std::fabs(sari_corpus(corpus).sari - sari_corpus(doubled).sari) < 1e-9);
    CHECK(std::fabs(bleu_corpus(corpus) - bleu_corpus(doubled)) < 1e-9);
  }
}

TEST_CASE("metric tokens and profiles") {
  CHECK(metric_tokens("The  Cat\tSAT") == Sentence{"the", "cat", "sat"});
  CHECK(metric_tokens("The Cat", false) == Sentence{"The", "Cat"});
  auto prof = ngram_profile(tokenize("a b a b"), 2);
  CHECK(prof.size() == 2);
  CHECK(prof.at(Ngram{"a", "b"}) == 2);
  CHECK(ngram_profile(tokenize("a"), 2).empty());
  CHECK_THROWS(evaluate_corpus({}));
}

TEST_CASE("sari on untouched and under-deleting outputs") {
  auto same = inst("the cat sat", "the cat sat", {"the cat sat"});
  for (std::size_t n = 1; n <= 3; ++n) CHECK(sari_ngram(same.source, same.output, same.references, n).keep == 1.0);

  // The reference drops a word the output keeps: no deletion credit.
  auto lazy = inst("the big cat sat", "the big cat sat", {"the cat sat"});
  CHECK(sari_ngram(lazy.source, lazy.output, lazy.references, 1).del == 0.0);
  CHECK(sari_sentence(lazy).del == 0.0);

  CHECK(ngram_profile(tokenize("a a a"), 1).at(Ngram{"a"}) == 3);
}
