// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "textgrpo/error.hpp"
#include "textgrpo/policy/finite_diff.hpp"
#include "textgrpo/policy/neural_policy.hpp"
#include "textgrpo/policy/tabular_policy.hpp"
#include "textgrpo/rng.hpp"
#include "textgrpo/train/sft.hpp"

using namespace textgrpo;
using namespace textgrpo::train;
using policy::NeuralPolicy;
using policy::TabularPolicy;

namespace {

Vocabulary tiny_vocab() { return Vocabulary({"aa", "bb"}); }  // size 6

}  // namespace

TEST_CASE("sft loss of a uniform policy is log vocab size") {
  const Vocabulary v = tiny_vocab();
  TabularPolicy pol(v, 1);  // zero logits: exactly uniform conditionals
  std::vector<double> grad(pol.param_count(), 0.0);
  const TokenSequence prompt{4};
  const TokenSequence target{5, 4, Vocabulary::kEos};
  const double loss = sft_loss(pol, prompt, target, grad);
  CHECK(loss == doctest::Approx(std::log(6.0)).epsilon(1e-12));
}

TEST_CASE("sft loss gradient equals weighted logprob with -1/n weights") {
  const Vocabulary v = tiny_vocab();
  Rng rng(81);
  TabularPolicy pol = TabularPolicy::random_init(v, 1, 0.4, rng);
  const TokenSequence prompt{4, 5};
  const TokenSequence target{5, 5, Vocabulary::kEos};

  std::vector<double> grad(pol.param_count(), 0.0);
  const double loss = sft_loss(pol, prompt, target, grad);

  const auto lp = policy::logprob(pol, prompt, target);
  double nll = 0.0;
  for (double x : lp) nll -= x;
  CHECK(loss == doctest::Approx(nll / 3.0).epsilon(1e-12));

  const std::vector<double> w(target.size(), -1.0 / 3.0);
  const auto manual = policy::grad_weighted_logprob(pol, prompt, target, w);
  for (size_t k = 0; k < grad.size(); ++k)
    CHECK(grad[k] == doctest::Approx(manual[k]).epsilon(1e-12).scale(1.0));
}

TEST_CASE("sft loss gradient matches finite differences") {
  const Vocabulary v = tiny_vocab();
  const TokenSequence prompt{5};
  const TokenSequence target{4, 5, Vocabulary::kEos};

  auto check = [&](policy::Policy& pol, double tol, uint64_t seed) {
    std::vector<double> analytic(pol.param_count(), 0.0);
    static_cast<void>(sft_loss(pol, prompt, target, analytic));
    const auto loss_fn = [&]() {
      std::vector<double> scratch(pol.param_count(), 0.0);
      return sft_loss(pol, prompt, target, scratch);
    };
    Rng rng(seed);
    const auto coords = policy::pick_coords(analytic, 60, rng, true, 1e-5);
    const auto report =
        policy::check_gradient(pol.params(), loss_fn, analytic, coords, 1e-6);
    CHECK(report.checked >= 50);
    CHECK(report.max_rel_err < tol);
  };

  SUBCASE("tabular to 1e-8") {
    Rng rng(82);
    TabularPolicy pol = TabularPolicy::random_init(v, 2, 0.4, rng);
    check(pol, 1e-8, 820);
  }
  SUBCASE("neural to 1e-4") {
    Rng rng(83);
    NeuralPolicy pol = NeuralPolicy::random_init(v, 8, 5, 0.4, rng);
    check(pol, 1e-4, 830);
  }
}

TEST_CASE("sft loss validates inputs") {
  const Vocabulary v = tiny_vocab();
  TabularPolicy pol(v, 1);
  std::vector<double> grad(pol.param_count(), 0.0);
  CHECK_THROWS_AS(static_cast<void>(sft_loss(pol, {4}, {}, grad)), Error);
  std::vector<double> small(3, 0.0);
  CHECK_THROWS_AS(static_cast<void>(sft_loss(pol, {4}, {5}, small)), Error);
}

TEST_CASE("sft_train memorizes a single example to argmax accuracy") {
  const Vocabulary v = tiny_vocab();
  TabularPolicy pol(v, 2);
  const std::vector<TrainExample> data{{{5}, {4, 4}}};
  SftConfig cfg;
  cfg.lr = 0.2;
  cfg.epochs = 120;
  cfg.batch_size = 1;
  cfg.seed = 5;

  std::vector<StepRecord> records;
  TrainHooks hooks;
  hooks.on_step = [&](const StepRecord& r) { records.push_back(r); };
  const SftResult res = sft_train(pol, data, cfg, hooks);
  CHECK(res.steps == 120);
  REQUIRE(records.size() == 120);
  CHECK(records.front().loss > records.back().loss);
  CHECK(res.final_loss < 0.05);
  // SFT records carry no rl-only fields.
  CHECK_FALSE(records.back().mean_reward.has_value());
  CHECK_FALSE(records.back().mean_kl.has_value());

  // Greedy decoding reproduces the reference plus the appended EOS.
  policy::SamplingParams sp;
  sp.temperature = 1e-9;
  sp.max_len = 6;
  Rng rng(1);
  const auto out = policy::sample(pol, {5}, 1, sp, rng);
  CHECK(out[0].tokens == TokenSequence{4, 4, Vocabulary::kEos});
}

TEST_CASE("sft_train replays bit-identically for a fixed seed") {
  const Vocabulary v = tiny_vocab();
  const std::vector<TrainExample> data{
      {{4}, {5, 4}}, {{5}, {4}}, {{4, 4}, {5}}, {{5, 5}, {4, 4}}};
  auto run = [&]() {
    Rng init(84);
    NeuralPolicy pol = NeuralPolicy::random_init(v, 6, 4, 0.2, init);
    SftConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 2;
    cfg.seed = 11;
    static_cast<void>(sft_train(pol, data, cfg));
    return std::vector<double>(pol.params().begin(), pol.params().end());
  };
  CHECK(run() == run());
}

TEST_CASE("sft_train with zero epochs leaves parameters untouched") {
  const Vocabulary v = tiny_vocab();
  Rng init(85);
  TabularPolicy pol = TabularPolicy::random_init(v, 1, 0.3, init);
  const std::vector<double> before(pol.params().begin(), pol.params().end());
  SftConfig cfg;
  cfg.epochs = 0;
  const std::vector<TrainExample> data{{{4}, {5}}};
  const SftResult res = sft_train(pol, data, cfg);
  CHECK(res.steps == 0);
  const std::vector<double> after(pol.params().begin(), pol.params().end());
  CHECK(before == after);
}

TEST_CASE("sft_train guards against non-finite loss") {
  const Vocabulary v = tiny_vocab();
  Rng init(86);
  TabularPolicy pol = TabularPolicy::random_init(v, 1, 0.3, init);
  // Poison every row so the loss is NaN regardless of which rows the
  // prompt visits.
  for (double& p : pol.params()) p = std::numeric_limits<double>::quiet_NaN();
  std::vector<StepRecord> records;
  TrainHooks hooks;
  hooks.on_step = [&](const StepRecord& r) { records.push_back(r); };
  SftConfig cfg;
  cfg.epochs = 1;
  const std::vector<TrainExample> data{{{4}, {5}}};
  try {
    static_cast<void>(sft_train(pol, data, cfg, hooks));
    FAIL("expected Error");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::guard);
  }
  // The poisoned step was still recorded.
  REQUIRE(records.size() == 1);
  CHECK_FALSE(std::isfinite(records[0].loss));
}

TEST_CASE("sft_train rejects empty data") {
  const Vocabulary v = tiny_vocab();
  TabularPolicy pol(v, 1);
  CHECK_THROWS_AS(
      static_cast<void>(sft_train(pol, std::vector<TrainExample>{}, SftConfig{})),
      Error);
}
