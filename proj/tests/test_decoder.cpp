#include <doctest.h>

#include <cmath>

#include "nse/grad_check.hpp"
#include "nse/search.hpp"
#include "support.hpp"

using namespace nse;
using nse::testing::random_model;

TEST_CASE("attention weights and context") {
  Rng rng(1);
  Tape tape(false);
  for (int trial = 0; trial < 50; ++trial) {
    auto states = make_var(init_uniform({5, 4}, rng, 2.0));
    auto s = make_var(init_uniform({4}, rng, 2.0));
    auto a = attend(tape, s, states);
    double total = 0.0;
    for (double v : a.alpha->data) total += v;
    CHECK(std::fabs(total - 1.0) < 1e-12);
    for (std::size_t c = 0; c < 4; ++c) {
      double expect = 0.0;
      for (std::size_t i = 0; i < 5; ++i) expect += a.alpha->data[i] * states->at(i, c);
      CHECK(a.context->data[c] == doctest::Approx(expect).epsilon(1e-12));
    }
  }
  // Equal scores give uniform weights.
  auto flat = attend(tape, zeros({3}), make_var(init_uniform({4, 3}, rng, 1.0)));
  for (double v : flat.alpha->data) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));
  CHECK_THROWS_AS(attend(tape, zeros({2}), zeros({4, 3})), DimensionError);
}

TEST_CASE("decoder start state") {
  for (auto kind : {EncoderKind::Lstm, EncoderKind::Nse}) {
    CAPTURE(to_string(kind));
    auto model = random_model(kind, 4, 7, 7, 3, 0.5);
    Tape tape(false);
    std::vector<int> src{4, 5, 6};
    auto enc = model.encode(tape, src, {});
    auto st = model.start(tape, enc);
    CHECK(st.prev_token == kBosId);
    CHECK(st.step == 0);
    // h0 = tanh(W h_enc + b) for each layer.
    const auto& init = model.decoder().init;
    for (std::size_t l = 0; l < 2; ++l) {
      for (std::size_t j = 0; j < 4; ++j) {
        double z = init.h[l].b->data[j];
        for (std::size_t k = 0; k < 4; ++k) z += init.h[l].w->at(j, k) * enc.final[l].h->data[k];
        CHECK(st.layers[l].h->data[j] == doctest::Approx(std::tanh(z)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("empty source is rejected") {
  auto model = random_model(EncoderKind::Nse, 4, 7, 7, 1);
  Tape tape(false);
  std::vector<int> empty;
  CHECK_THROWS_AS(model.encode(tape, empty, {}), UsageError);
  std::vector<int> bad{9};
  CHECK_THROWS_AS(model.encode(tape, bad, {}), IndexError);
}

TEST_CASE("step output shapes and forced logits") {
  auto model = random_model(EncoderKind::Nse, 4, 7, 9, 2);
  std::vector<int> src{4, 5, 6, 4};
  std::vector<int> tgt{5, 8, kEosId};
  Tape tape(false);
  auto logits = model.forced_logits(tape, src, tgt, {});
  CHECK(logits->shape == Shape{3, 9});

  // Row t of the forced logits equals stepping with y_{t-1} fed back.
  auto enc = model.encode(tape, src, {});
  auto st = model.start(tape, enc);
  for (std::size_t t = 0; t < tgt.size(); ++t) {
    auto out = model.step(tape, st, enc, {});
    CHECK(out.alpha->shape == Shape{4});
    CHECK(out.logits->shape == Shape{9});
    for (std::size_t v = 0; v < 9; ++v) CHECK(out.logits->data[v] == logits->at(t, v));
    st = out.state;
    st.prev_token = tgt[t];
  }
}

TEST_CASE("full model gradients") {
  std::vector<int> src{4, 5, 6};
  std::vector<int> tgt{6, 4, kEosId};
  for (auto kind : {EncoderKind::Lstm, EncoderKind::Nse}) {
    CAPTURE(to_string(kind));
    auto model = random_model(kind, 4, 7, 7, 11, 0.5);
    std::vector<NamedParam> params;
    for (const auto& [n, p] : model.params()) params.push_back({n, p});
    auto rep = grad_check(
        [&](Tape& t) { return xent_loss(t, model.forced_logits(t, src, tgt, {}), tgt); }, params,
        1e-5, 1e-4);
    CHECK(rep.passed);
    CHECK(rep.max_rel_error < 1e-4);
  }
}

TEST_CASE("an EOS biased output layer stops immediately") {
  auto model = random_model(EncoderKind::Lstm, 4, 7, 7, 5);
  model.decoder().output.b->data[kEosId] = 10.0;
  std::vector<int> src{4, 5};
  auto hyp = greedy_decode(model, src, 10);
  CHECK(hyp.tokens.empty());
  CHECK(hyp.finished);
}

TEST_CASE("attention special cases") {
  Tape tape(false);
  auto single = attend(tape, make_vector({0.3, -0.2}), make_matrix(1, 2, {0.5, 0.7}));
  CHECK(single.alpha->data == std::vector<double>{1.0});
  CHECK(single.context->data == std::vector<double>{0.5, 0.7});

  auto basis = attend(tape, make_vector({1, 0}), make_matrix(2, 2, {10, 0, 0, 10}));
  CHECK(basis.alpha->data[0] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(basis.context->data[0] == doctest::Approx(10.0).epsilon(1e-3));

  // Permuting the states permutes alpha and leaves the context alone.
  Rng rng(3);
  auto states = make_var(init_uniform({4, 3}, rng, 1.0));
  auto s = make_var(init_uniform({3}, rng, 1.0));
  const std::size_t perm[] = {2, 0, 3, 1};
  Tensor shuffled({4, 3});
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t c = 0; c < 3; ++c) shuffled.data[i * 3 + c] = states->at(perm[i], c);
  auto a = attend(tape, s, states);
  auto b = attend(tape, s, make_var(shuffled));
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(b.alpha->data[i] == doctest::Approx(a.alpha->data[perm[i]]).epsilon(1e-14));
    CHECK(a.alpha->data[i] > 0.0);
  }
  for (std::size_t c = 0; c < 3; ++c)
    CHECK(b.context->data[c] == doctest::Approx(a.context->data[c]).epsilon(1e-14));
}

TEST_CASE("sequence score factorizes over steps") {
  for (auto kind : {EncoderKind::Lstm, EncoderKind::Nse}) {
    auto model = random_model(kind, 5, 8, 8, 17, 0.8);
    std::vector<int> src{4, 7, 5};
    std::vector<int> tgt{6, 6, 4, kEosId};
    Tape tape(false);
    auto enc = model.encode(tape, src, {});
    auto st = model.start(tape, enc);
    double total = 0.0;
    for (int y : tgt) {
      auto out = model.step(tape, st, enc, {});
      total += log_softmax_values(out.logits->data)[y];
      st = out.state;
      st.prev_token = y;
    }
    CHECK(std::fabs(model.sequence_log_prob(src, tgt) - total) < 1e-10);
  }
}

TEST_CASE("bias only output layer") {
  // Zero weights everywhere except the output bias: every step emits the
  // same distribution, so the score is a sum of fixed log-probabilities.
  auto model = random_model(EncoderKind::Nse, 4, 7, 6, 2);
  for (const auto& [_, p] : model.params()) std::fill(p->data.begin(), p->data.end(), 0.0);
  auto& bias = model.decoder().output.b->data;
  bias = {0.0, 0.5, -1.0, 1.5, 2.0, -0.5};
  double z = 0.0;
  for (double v : bias) z += std::exp(v);
  std::vector<int> src{4, 5};
  std::vector<int> tgt{4, kEosId};
  double expect = (2.0 - std::log(z)) + (1.5 - std::log(z));
  CHECK(std::fabs(model.sequence_log_prob(src, tgt) - expect) < 1e-10);

  // Zero encoder state and zero init maps give a zero start state.
  Tape tape(false);
  auto st = model.start(tape, model.encode(tape, src, {}));
  for (const auto& layer : st.layers) {
    for (double v : layer.h->data) CHECK(v == 0.0);
    for (double v : layer.c->data) CHECK(v == 0.0);
  }
}

TEST_CASE("the loss reaches the decoder init maps") {
  auto model = random_model(EncoderKind::Lstm, 4, 7, 7, 8, 0.5);
  std::vector<int> src{4, 5};
  std::vector<int> tgt{5, kEosId};
  model.params().zero_grad();
  Tape tape;
  tape.backward(xent_loss(tape, model.forced_logits(tape, src, tgt, {}), tgt));
  for (const auto& name : {"dec.init.h1.w", "dec.init.h2.w", "dec.init.c1.w", "dec.init.c2.w"}) {
    double norm = 0.0;
    for (double g : model.params().get(name)->grad) norm += g * g;
    CAPTURE(name);
    CHECK(norm > 0.0);
  }
}
