// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "textgrpo/error.hpp"
#include "textgrpo/policy/adamw.hpp"
#include "textgrpo/policy/checkpoint.hpp"
#include "textgrpo/policy/neural_policy.hpp"
#include "textgrpo/policy/tabular_policy.hpp"
#include "textgrpo/rng.hpp"
#include "textgrpo/vocab.hpp"

using namespace textgrpo;
using namespace textgrpo::policy;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("textgrpo_ckpt_" + std::to_string(std::rand()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

bool bit_equal(std::span<const double> a, std::span<const double> b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("neural policy round-trips bit-exactly") {
  TempDir tmp;
  const Vocabulary v({"alda", "bebo", "cora"});
  Rng rng(31);
  NeuralPolicy pol = NeuralPolicy::random_init(v, 6, 4, 0.3, rng);
  pol.params()[0] = 0.1 + 0.2;  // a value with a nontrivial mantissa

  const Checkpoint out = snapshot_policy(pol, "cfg123");
  const fs::path file = tmp.path / "neural.bin";
  save_checkpoint(out, file);
  const Checkpoint in = load_checkpoint(file);

  CHECK(in.descriptor == pol.descriptor());
  CHECK(in.config_digest == "cfg123");
  CHECK(in.vocab_digest == v.digest());
  CHECK(in.vocab_words == v.content_words());
  REQUIRE(bit_equal(in.theta, pol.params()));
  CHECK_FALSE(in.optimizer.has_value());

  auto restored = restore_policy(in);
  CHECK(restored->descriptor() == pol.descriptor());
  CHECK(restored->vocab() == pol.vocab());
  REQUIRE(bit_equal(restored->params(), pol.params()));
  // Restored policy behaves identically.
  const auto lp_a = logprob(pol, {4}, {5, Vocabulary::kEos});
  const auto lp_b = logprob(*restored, {4}, {5, Vocabulary::kEos});
  CHECK(lp_a == lp_b);
}

TEST_CASE("tabular policy restores through its descriptor") {
  TempDir tmp;
  const Vocabulary v({"alda", "bebo"});
  Rng rng(32);
  TabularPolicy pol = TabularPolicy::random_init(v, 2, 0.5, rng);
  const fs::path file = tmp.path / "tab.bin";
  save_checkpoint(snapshot_policy(pol, "d"), file);
  auto restored = restore_policy(load_checkpoint(file));
  auto* tab = dynamic_cast<TabularPolicy*>(restored.get());
  REQUIRE(tab != nullptr);
  CHECK(tab->context_order() == 2);
  REQUIRE(bit_equal(tab->params(), pol.params()));
}

TEST_CASE("optimizer state round-trips and resumes exactly") {
  TempDir tmp;
  const Vocabulary v({"alda", "bebo"});
  Rng rng(33);
  NeuralPolicy pol = NeuralPolicy::random_init(v, 4, 3, 0.2, rng);
  AdamWConfig cfg;
  cfg.lr = 1e-2;
  AdamW opt(pol.param_count(), cfg);

  Rng grads(34);
  std::vector<std::vector<double>> gs;
  for (int s = 0; s < 8; ++s) {
    std::vector<double> g(pol.param_count());
    for (double& x : g) x = grads.uniform(-1.0, 1.0);
    gs.push_back(g);
  }
  for (int s = 0; s < 4; ++s) opt.step(pol.params(), gs[size_t(s)]);

  const fs::path file = tmp.path / "opt.bin";
  save_checkpoint(snapshot_policy(pol, "cfg", &opt), file);

  // Continue the original run to completion.
  auto cont = clone_frozen(pol);
  for (int s = 4; s < 8; ++s) opt.step(pol.params(), gs[size_t(s)]);

  // Resume from disk and replay the same tail.
  const Checkpoint in = load_checkpoint(file);
  REQUIRE(in.optimizer.has_value());
  CHECK(in.optimizer->step_count == 4);
  auto resumed = restore_policy(in);
  REQUIRE(bit_equal(resumed->params(), cont->params()));
  AdamW opt2(resumed->param_count(), cfg);
  opt2.restore(in.optimizer->step_count, in.optimizer->m, in.optimizer->v);
  for (int s = 4; s < 8; ++s) opt2.step(resumed->params(), gs[size_t(s)]);
  REQUIRE(bit_equal(resumed->params(), pol.params()));
}

TEST_CASE("missing and corrupt files raise io errors") {
  TempDir tmp;
  CHECK_THROWS_AS(load_checkpoint(tmp.path / "absent.bin"), Error);

  const fs::path junk = tmp.path / "junk.bin";
  std::ofstream(junk, std::ios::binary) << "not a checkpoint";
  try {
    static_cast<void>(load_checkpoint(junk));
    FAIL("expected Error");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::io);
  }
}

TEST_CASE("truncated checkpoint is rejected") {
  TempDir tmp;
  const Vocabulary v({"alda"});
  Rng rng(35);
  TabularPolicy pol = TabularPolicy::random_init(v, 1, 0.1, rng);
  const fs::path file = tmp.path / "full.bin";
  save_checkpoint(snapshot_policy(pol, "x"), file);

  std::ifstream src(file, std::ios::binary);
  std::vector<char> bytes((std::istreambuf_iterator<char>(src)),
                          std::istreambuf_iterator<char>());
  const fs::path cut = tmp.path / "cut.bin";
  std::ofstream(cut, std::ios::binary)
      .write(bytes.data(), static_cast<long>(bytes.size() / 2));
  CHECK_THROWS_AS(load_checkpoint(cut), Error);
}

TEST_CASE("unknown descriptor cannot be restored") {
  Checkpoint ckpt;
  ckpt.vocab_words = {"alda"};
  ckpt.descriptor = "transformer xl";
  ckpt.theta = {0.0};
  CHECK_THROWS_AS(restore_policy(ckpt), Error);
}
