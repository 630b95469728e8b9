// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "textgrpo/error.hpp"
#include "textgrpo/tasks/rule_policy.hpp"
#include "textgrpo/tasks/task_synth.hpp"

using namespace textgrpo;
using namespace textgrpo::tasks;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("textgrpo_tasks_" + std::to_string(std::rand()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

GenParams small_params(uint64_t seed) {
  GenParams p;
  p.seed = seed;
  p.train_size = 40;
  p.validation_size = 10;
  p.test_size = 10;
  p.vocab_size = 10;
  p.min_sentence_len = 2;
  p.max_sentence_len = 5;
  return p;
}

std::vector<std::string> split_words(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

// The source utterance is everything after the last ':' of the prompt.
std::vector<std::string> source_words(const std::string& prompt) {
  const size_t colon = prompt.rfind(':');
  REQUIRE(colon != std::string::npos);
  return split_words(prompt.substr(colon + 1));
}

std::vector<const Example*> all_examples(const DatasetSplit& split) {
  std::vector<const Example*> out;
  for (const auto& e : split.train) out.push_back(&e);
  for (const auto& e : split.validation) out.push_back(&e);
  for (const auto& e : split.test) out.push_back(&e);
  return out;
}

}  // namespace

TEST_CASE("task names parse and round-trip") {
  for (TaskId t : {TaskId::cipher, TaskId::reverse, TaskId::copyqa})
    CHECK(parse_task(task_name(t)) == t);
  CHECK_THROWS_AS(parse_task("sudoku"), Error);
}

TEST_CASE("cipher word list is deterministic and distinct") {
  const auto words = cipher_word_list(12);
  REQUIRE(words.size() == 12);
  CHECK(std::set<std::string>(words.begin(), words.end()).size() == 12);
  CHECK(cipher_word_list(12) == words);
  CHECK_THROWS_AS(cipher_word_list(1000), Error);  // beyond pool capacity
}

TEST_CASE("cipher substitution is a seeded bijection") {
  const auto map = cipher_substitution(7, 12, false);
  REQUIRE(map.size() == 12);
  std::set<int> image(map.begin(), map.end());
  CHECK(image.size() == 12);
  CHECK(*image.begin() == 0);
  CHECK(*image.rbegin() == 11);
  CHECK(cipher_substitution(7, 12, false) == map);
  CHECK(cipher_substitution(8, 12, false) != map);

  const auto id = cipher_substitution(7, 12, true);
  for (int i = 0; i < 12; ++i) CHECK(id[size_t(i)] == i);
}

TEST_CASE("cipher references apply the substitution word by word") {
  const GenParams p = small_params(3);
  const DatasetSplit split = gen_cipher(p);
  const auto words = cipher_word_list(p.vocab_size);
  const auto map = cipher_substitution(p.seed, p.vocab_size, false);
  for (const Example* e : all_examples(split)) {
    const auto src = source_words(e->prompt_text);
    const auto ref = split_words(e->reference_text);
    REQUIRE(src.size() == ref.size());
    for (size_t i = 0; i < src.size(); ++i) {
      const auto it = std::find(words.begin(), words.end(), src[i]);
      REQUIRE(it != words.end());
      const size_t idx = size_t(it - words.begin());
      CHECK(ref[i] == words[size_t(map[idx])]);
    }
  }
}

TEST_CASE("identity cipher echoes the source") {
  GenParams p = small_params(4);
  p.identity_substitution = true;
  const DatasetSplit split = gen_cipher(p);
  for (const Example* e : all_examples(split)) {
    std::ostringstream joined;
    const auto src = source_words(e->prompt_text);
    for (size_t i = 0; i < src.size(); ++i)
      joined << (i ? " " : "") << src[i];
    CHECK(e->reference_text == joined.str());
  }
}

TEST_CASE("reverse references flip the source word order") {
  const DatasetSplit split = gen_reverse(small_params(5));
  for (const Example* e : all_examples(split)) {
    auto src = source_words(e->prompt_text);
    std::reverse(src.begin(), src.end());
    CHECK(split_words(e->reference_text) == src);
  }
}

TEST_CASE("copyqa answers present keys and flags absent ones") {
  GenParams p = small_params(6);
  p.num_keys = 6;
  p.num_values = 8;
  const DatasetSplit split = gen_copyqa(p);
  int absent = 0, present = 0;
  for (const Example* e : all_examples(split)) {
    const auto words = split_words(e->prompt_text);
    // Layout: head : k is v.. . k is v.. . question : what is k
    REQUIRE(words.size() > 4);
    const std::string& queried = words.back();
    // Collect facts between the head marker and "question".
    bool found = false;
    std::string value;
    for (size_t i = 0; i + 1 < words.size(); ++i) {
      if (words[i] == "question") break;
      if (words[i] == queried && words[i + 1] == "is" && i > 0 &&
          (words[i - 1] == ":" || words[i - 1] == ".")) {
        found = true;
        std::ostringstream v;
        for (size_t j = i + 2; j < words.size() && words[j] != "."; ++j)
          v << (j > i + 2 ? " " : "") << words[j];
        value = v.str();
        break;
      }
    }
    if (found) {
      ++present;
      CHECK(e->reference_text == value);
    } else {
      ++absent;
      CHECK(e->reference_text == "it is unknown");
    }
  }
  CHECK(present > 0);
  CHECK(absent > 0);  // absent_key_prob 0.25 over 60 examples
}

TEST_CASE("splits are disjoint and sources unique") {
  for (TaskId t : {TaskId::cipher, TaskId::reverse, TaskId::copyqa}) {
    CAPTURE(task_name(t));
    const DatasetSplit split = generate(t, small_params(7));
    CHECK(split.train.size() == 40);
    CHECK(split.validation.size() == 10);
    CHECK(split.test.size() == 10);
    std::set<std::string> sources;
    for (const Example* e : all_examples(split)) {
      std::ostringstream key;
      for (const auto& w : source_words(e->prompt_text)) key << w << ' ';
      // copyqa prompts repeat source shapes; uniqueness is over full prompts.
      const std::string k =
          t == TaskId::copyqa ? e->prompt_text : key.str();
      CHECK(sources.insert(k).second);
      CHECK(!e->reference_text.empty());
      CHECK(e->task_id == t);
    }
  }
}

TEST_CASE("generation is a pure function of params") {
  const GenParams p = small_params(8);
  for (TaskId t : {TaskId::cipher, TaskId::reverse, TaskId::copyqa}) {
    CHECK(generate(t, p) == generate(t, p));
  }
  GenParams q = p;
  q.seed = 9;
  CHECK_FALSE(generate(TaskId::cipher, p) == generate(TaskId::cipher, q));
}

TEST_CASE("prompt templates rotate across examples") {
  const DatasetSplit split = gen_reverse(small_params(10));
  std::set<std::string> heads;
  for (const auto& e : split.train) {
    const size_t colon = e.prompt_text.find(':');
    heads.insert(e.prompt_text.substr(0, colon));
  }
  CHECK(heads.size() == 3);
}

TEST_CASE("zero-size splits are permitted") {
  GenParams p = small_params(11);
  p.validation_size = 0;
  p.test_size = 0;
  const DatasetSplit split = gen_cipher(p);
  CHECK(split.train.size() == 40);
  CHECK(split.validation.empty());
  CHECK(split.test.empty());
}

TEST_CASE("invalid generator params are rejected") {
  GenParams p = small_params(12);
  p.vocab_size = 9;
  CHECK_THROWS_AS(p.validate(TaskId::cipher), Error);
  p = small_params(12);
  p.min_sentence_len = 0;
  CHECK_THROWS_AS(p.validate(TaskId::reverse), Error);
  p = small_params(12);
  p.max_sentence_len = 2;
  p.min_sentence_len = 3;
  CHECK_THROWS_AS(p.validate(TaskId::cipher), Error);
  p = small_params(12);
  p.train_size = -1;
  CHECK_THROWS_AS(p.validate(TaskId::cipher), Error);
  p = small_params(12);
  p.absent_key_prob = 1.5;
  CHECK_THROWS_AS(p.validate(TaskId::copyqa), Error);
  p = small_params(12);
  p.min_facts = 5;
  p.num_keys = 4;  // cannot draw 5 distinct keys from 4
  CHECK_THROWS_AS(p.validate(TaskId::copyqa), Error);
}

TEST_CASE("save and load round-trip the split exactly") {
  TempDir tmp;
  const DatasetSplit split = gen_cipher(small_params(13));
  save_dataset(tmp.path.string(), split);
  CHECK(fs::exists(tmp.path / "train.jsonl"));
  CHECK(fs::exists(tmp.path / "validation.jsonl"));
  CHECK(fs::exists(tmp.path / "test.jsonl"));
  CHECK(fs::exists(tmp.path / "manifest.json"));
  const DatasetSplit loaded = load_dataset(tmp.path.string());
  CHECK(loaded == split);
}

TEST_CASE("malformed dataset rows report file and line") {
  TempDir tmp;
  const DatasetSplit split = gen_reverse(small_params(14));
  save_dataset(tmp.path.string(), split);
  {
    std::ofstream out(tmp.path / "validation.jsonl", std::ios::app);
    out << "{\"prompt\": 12}\n";
  }
  try {
    static_cast<void>(load_dataset(tmp.path.string()));
    FAIL("expected Error");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::data);
    const std::string msg = e.what();
    CHECK(msg.find("validation.jsonl") != std::string::npos);
    CHECK(msg.find("11") != std::string::npos);  // 10 valid rows + 1 bad
  }
}

TEST_CASE("loading a missing directory is an io error") {
  try {
    static_cast<void>(load_dataset("/nonexistent/textgrpo"));
    FAIL("expected Error");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::io);
  }
}

TEST_CASE("build_vocabulary covers every word of every split") {
  const DatasetSplit split = gen_copyqa(small_params(15));
  const Vocabulary v = build_vocabulary(split);
  for (const Example* e : all_examples(split)) {
    for (const auto& w : split_words(e->prompt_text)) CHECK(v.contains(w));
    for (const auto& w : split_words(e->reference_text)) CHECK(v.contains(w));
  }
}

TEST_CASE("rule policy reproduces references greedily") {
  for (TaskId t : {TaskId::cipher, TaskId::reverse, TaskId::copyqa}) {
    CAPTURE(task_name(t));
    const GenParams p = small_params(16);
    const DatasetSplit split = generate(t, p);
    const Vocabulary v = build_vocabulary(split);
    const auto pol = make_rule_policy(t, p, v);
    policy::SamplingParams sp;
    sp.temperature = 1e-9;  // greedy
    sp.max_len = 64;
    Rng rng(1);
    for (const auto& e : split.test) {
      const TokenSequence prompt = tokenize(e.prompt_text, v);
      const auto out = policy::sample(*pol, prompt, 1, sp, rng);
      const TokenSequence got = strip_trailing_eos(out[0].tokens);
      CHECK(detokenize(got, v) == e.reference_text);
    }
  }
}

TEST_CASE("rule policy refuses gradient work") {
  const GenParams p = small_params(17);
  const DatasetSplit split = gen_cipher(p);
  const Vocabulary v = build_vocabulary(split);
  const auto pol = make_rule_policy(TaskId::cipher, p, v);
  CHECK(pol->params().empty());
  std::vector<double> grad;
  CHECK_THROWS_AS(
      pol->add_grad_weighted_logprob({4}, {5}, std::vector<double>{1.0}, grad),
      Error);
}
