// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "textgrpo/vocab.hpp"

namespace textgrpo::tasks {

enum class TaskId { cipher, reverse, copyqa };

const char* task_name(TaskId id);
TaskId parse_task(const std::string& name);  // throws Error(config)

// One prompt/reference pair. The prompt is a rendered instruction template
// plus the source utterance; the reference is nonempty and single.
struct Example {
  std::string prompt_text;
  std::string reference_text;
  TaskId task_id = TaskId::cipher;

  bool operator==(const Example& other) const = default;
};

// Everything generation depends on. Datasets are a pure function of these
// fields, so the struct is echoed into the dataset manifest verbatim.
struct GenParams {
  uint64_t seed = 0;
  int train_size = 5000;
  int validation_size = 500;
  int test_size = 500;

  // cipher / reverse: random sentences over a closed word list
  int vocab_size = 12;  // content words; >= 10
  int min_sentence_len = 3;
  int max_sentence_len = 8;
  bool identity_substitution = false;  // cipher only: map every word to itself

  // copyqa: fact lists with a queried key
  int num_keys = 8;
  int num_values = 10;
  int min_facts = 2;
  int max_facts = 3;
  int value_phrase_len = 2;
  double absent_key_prob = 0.25;  // question about a key missing from the facts

  void validate(TaskId task) const;  // throws Error(config)
};

struct DatasetSplit {
  TaskId task_id = TaskId::cipher;
  GenParams params;
  std::vector<Example> train;
  std::vector<Example> validation;
  std::vector<Example> test;

  bool operator==(const DatasetSplit& other) const;
};

// Deterministic word pool used by cipher and reverse sources.
std::vector<std::string> cipher_word_list(int vocab_size);

// Seeded bijection over cipher_word_list indices; identity when requested.
std::vector<int> cipher_substitution(uint64_t seed, int vocab_size, bool identity);

// Generators. Source utterances are disjoint across the three splits and
// unique overall; prompt templates rotate with the global example index.
DatasetSplit gen_cipher(const GenParams& params);
DatasetSplit gen_reverse(const GenParams& params);
DatasetSplit gen_copyqa(const GenParams& params);
DatasetSplit generate(TaskId task, const GenParams& params);

// Directory layout: train.jsonl / validation.jsonl / test.jsonl, one JSON
// object {prompt, reference, task_id} per line, plus manifest.json echoing
// the generator parameters. Malformed lines report file and line number.
void save_dataset(const std::string& dir, const DatasetSplit& split);
DatasetSplit load_dataset(const std::string& dir);

// Symbol table over every prompt and reference text of all three splits.
Vocabulary build_vocabulary(const DatasetSplit& split);

}  // namespace textgrpo::tasks
