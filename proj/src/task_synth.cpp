// SPDX-License-Identifier: Apache-2.0
#include "textgrpo/tasks/task_synth.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "textgrpo/error.hpp"
#include "textgrpo/rng.hpp"

namespace textgrpo::tasks {

namespace {

constexpr const char* kCipherTemplates[3] = {"encode the message", "apply the cipher to",
                                             "rewrite in code"};
constexpr const char* kReverseTemplates[3] = {"reverse the words", "say this backwards",
                                              "flip the order of"};
constexpr const char* kCopyqaTemplates[3] = {"facts", "context", "memory"};

const std::vector<std::string>& copyqa_keys() {
  static const std::vector<std::string> keys = {"color", "size", "shape", "owner",
                                                "place", "kind",  "rank",  "name",
                                                "mood",  "taste", "speed", "age"};
  return keys;
}

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (size_t i = 0; i < words.size(); ++i) {
    if (i > 0) out += ' ';
    out += words[i];
  }
  return out;
}

// Distinct sources for train+validation+test, in draw order. The draw
// callback returns the dedupe key of a freshly generated candidate.
template <typename Draw>
std::vector<std::string> draw_unique(int total, Draw&& draw) {
  std::set<std::string> seen;
  std::vector<std::string> out;
  out.reserve(size_t(total));
  int64_t attempts = 0;
  const int64_t cap = 200 * int64_t(total) + 1000;
  while (int(out.size()) < total) {
    if (++attempts > cap) {
      throw Error(ErrorCategory::data,
                  "source space too small for " + std::to_string(total) + " unique examples");
    }
    std::string key = draw();
    if (seen.insert(key).second) out.push_back(std::move(key));
  }
  return out;
}

void distribute(DatasetSplit& split, std::vector<Example> examples) {
  const GenParams& p = split.params;
  auto it = examples.begin();
  split.train.assign(it, it + p.train_size);
  it += p.train_size;
  split.validation.assign(it, it + p.validation_size);
  it += p.validation_size;
  split.test.assign(it, it + p.test_size);
}

std::vector<std::string> random_sentence(Rng& rng, const GenParams& p,
                                         const std::vector<std::string>& words) {
  const int len = p.min_sentence_len +
                  int(rng.below(uint64_t(p.max_sentence_len - p.min_sentence_len + 1)));
  std::vector<std::string> out(static_cast<size_t>(len));
  for (std::string& w : out) w = words[rng.below(words.size())];
  return out;
}

DatasetSplit gen_sentence_task(TaskId task, const GenParams& p) {
  p.validate(task);
  DatasetSplit split;
  split.task_id = task;
  split.params = p;
  const int total = p.train_size + p.validation_size + p.test_size;
  if (total == 0) return split;

  const std::vector<std::string> words = cipher_word_list(p.vocab_size);
  const std::vector<int> sub =
      cipher_substitution(p.seed, p.vocab_size, p.identity_substitution);

  Rng rng(p.seed);
  std::vector<std::string> sources =
      draw_unique(total, [&] { return join(random_sentence(rng, p, words)); });

  const auto* templates = task == TaskId::cipher ? kCipherTemplates : kReverseTemplates;
  std::vector<Example> examples;
  examples.reserve(size_t(total));
  for (int i = 0; i < total; ++i) {
    std::istringstream in(sources[size_t(i)]);
    std::vector<std::string> src;
    for (std::string w; in >> w;) src.push_back(w);

    std::vector<std::string> ref = src;
    if (task == TaskId::cipher) {
      for (std::string& w : ref) {
        const auto pos = std::find(words.begin(), words.end(), w) - words.begin();
        w = words[size_t(sub[size_t(pos)])];
      }
    } else {
      std::reverse(ref.begin(), ref.end());
    }

    Example ex;
    ex.task_id = task;
    ex.prompt_text = std::string(templates[i % 3]) + " : " + sources[size_t(i)];
    ex.reference_text = join(ref);
    examples.push_back(std::move(ex));
  }
  distribute(split, std::move(examples));
  return split;
}

struct CopyqaDraw {
  std::vector<int> fact_keys;           // indices into copyqa_keys()
  std::vector<std::string> fact_values; // rendered value phrases, same order
  int query_key = 0;                    // index into copyqa_keys()
  bool absent = false;
};

CopyqaDraw draw_copyqa(Rng& rng, const GenParams& p, const std::vector<std::string>& values) {
  CopyqaDraw d;
  const int f = p.min_facts + int(rng.below(uint64_t(p.max_facts - p.min_facts + 1)));
  std::vector<int> keys(size_t(p.num_keys));
  std::iota(keys.begin(), keys.end(), 0);
  for (int i = 0; i < f; ++i) {  // partial Fisher-Yates: first f entries
    std::swap(keys[size_t(i)], keys[size_t(i) + rng.below(keys.size() - size_t(i))]);
  }
  d.fact_keys.assign(keys.begin(), keys.begin() + f);
  for (int i = 0; i < f; ++i) {
    std::vector<std::string> phrase(size_t(p.value_phrase_len));
    for (std::string& w : phrase) w = values[rng.below(values.size())];
    d.fact_values.push_back(join(phrase));
  }
  d.absent = rng.uniform01() < p.absent_key_prob && f < p.num_keys;
  if (d.absent) {
    d.query_key = keys[size_t(f) + rng.below(keys.size() - size_t(f))];
  } else {
    d.query_key = d.fact_keys[size_t(rng.below(uint64_t(f)))];
  }
  return d;
}

std::string copyqa_facts_string(const CopyqaDraw& d) {
  std::string out;
  for (size_t i = 0; i < d.fact_keys.size(); ++i) {
    out += copyqa_keys()[size_t(d.fact_keys[i])] + " is " + d.fact_values[i] + " . ";
  }
  return out;  // trailing space before the question section
}

std::string copyqa_dedupe_key(const CopyqaDraw& d) {
  return copyqa_facts_string(d) + "| " + copyqa_keys()[size_t(d.query_key)];
}

}  // namespace

const char* task_name(TaskId id) {
  switch (id) {
    case TaskId::cipher: return "cipher";
    case TaskId::reverse: return "reverse";
    case TaskId::copyqa: return "copyqa";
  }
  throw Error(ErrorCategory::config, "unknown task id");
}

TaskId parse_task(const std::string& name) {
  if (name == "cipher") return TaskId::cipher;
  if (name == "reverse") return TaskId::reverse;
  if (name == "copyqa") return TaskId::copyqa;
  throw Error(ErrorCategory::config, "unknown task: " + name);
}

void GenParams::validate(TaskId task) const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorCategory::config, "invalid generator params: " + what);
  };
  require(train_size >= 0 && validation_size >= 0 && test_size >= 0, "sizes must be >= 0");
  if (task == TaskId::cipher || task == TaskId::reverse) {
    require(vocab_size >= 10, "vocab_size must be >= 10");
    require(min_sentence_len >= 1, "min_sentence_len must be >= 1");
    require(max_sentence_len >= min_sentence_len, "sentence length range is inverted");
  } else {
    require(num_keys >= 2 && num_keys <= int(copyqa_keys().size()),
            "num_keys must be in [2," + std::to_string(copyqa_keys().size()) + "]");
    require(num_values >= 2, "num_values must be >= 2");
    require(min_facts >= 1, "min_facts must be >= 1");
    require(max_facts >= min_facts, "fact count range is inverted");
    require(max_facts < num_keys, "max_facts must leave at least one absent key");
    require(value_phrase_len >= 1, "value_phrase_len must be >= 1");
    require(absent_key_prob >= 0.0 && absent_key_prob <= 1.0,
            "absent_key_prob must be in [0,1]");
  }
}

bool DatasetSplit::operator==(const DatasetSplit& other) const {
  return task_id == other.task_id && train == other.train &&
         validation == other.validation && test == other.test;
}

std::vector<std::string> cipher_word_list(int vocab_size) {
  static const char* kSyllables[] = {"ba", "de", "ki", "mo", "ru", "sa", "ti",
                                     "vu", "za", "lo", "ne", "pi", "go", "fa"};
  constexpr int kSyl = int(sizeof(kSyllables) / sizeof(kSyllables[0]));
  if (vocab_size > kSyl * kSyl) {
    throw Error(ErrorCategory::config, "vocab_size exceeds word pool capacity");
  }
  std::vector<std::string> out;
  out.reserve(size_t(vocab_size));
  for (int i = 0; i < vocab_size; ++i) {
    out.push_back(std::string(kSyllables[i / kSyl]) + kSyllables[i % kSyl]);
  }
  return out;
}

std::vector<int> cipher_substitution(uint64_t seed, int vocab_size, bool identity) {
  std::vector<int> map(static_cast<size_t>(vocab_size));
  std::iota(map.begin(), map.end(), 0);
  if (identity) return map;
  Rng rng = Rng(seed).child(0x6369706865724d41ULL);  // substitution stream
  for (size_t i = map.size(); i > 1; --i) {
    std::swap(map[i - 1], map[size_t(rng.below(i))]);
  }
  return map;
}

DatasetSplit gen_cipher(const GenParams& params) {
  return gen_sentence_task(TaskId::cipher, params);
}

DatasetSplit gen_reverse(const GenParams& params) {
  return gen_sentence_task(TaskId::reverse, params);
}

DatasetSplit gen_copyqa(const GenParams& p) {
  p.validate(TaskId::copyqa);
  DatasetSplit split;
  split.task_id = TaskId::copyqa;
  split.params = p;
  const int total = p.train_size + p.validation_size + p.test_size;
  if (total == 0) return split;

  std::vector<std::string> values;
  {
    const std::vector<std::string> pool = cipher_word_list(std::max(10, p.num_values));
    values.assign(pool.begin(), pool.begin() + p.num_values);
  }

  Rng rng(p.seed);
  std::vector<CopyqaDraw> draws;
  std::set<std::string> seen;
  int64_t attempts = 0;
  const int64_t cap = 200 * int64_t(total) + 1000;
  while (int(draws.size()) < total) {
    if (++attempts > cap) {
      throw Error(ErrorCategory::data,
                  "source space too small for " + std::to_string(total) + " unique examples");
    }
    CopyqaDraw d = draw_copyqa(rng, p, values);
    if (seen.insert(copyqa_dedupe_key(d)).second) draws.push_back(std::move(d));
  }

  std::vector<Example> examples;
  examples.reserve(size_t(total));
  for (int i = 0; i < total; ++i) {
    const CopyqaDraw& d = draws[size_t(i)];
    Example ex;
    ex.task_id = TaskId::copyqa;
    ex.prompt_text = std::string(kCopyqaTemplates[i % 3]) + " : " + copyqa_facts_string(d) +
                     "question : what is " + copyqa_keys()[size_t(d.query_key)];
    if (d.absent) {
      // Multi-token so every metric (bigram overlap included) can reach 1.0.
      ex.reference_text = "it is unknown";
    } else {
      const auto it = std::find(d.fact_keys.begin(), d.fact_keys.end(), d.query_key);
      ex.reference_text = d.fact_values[size_t(it - d.fact_keys.begin())];
    }
    examples.push_back(std::move(ex));
  }
  distribute(split, std::move(examples));
  return split;
}

DatasetSplit generate(TaskId task, const GenParams& params) {
  switch (task) {
    case TaskId::cipher: return gen_cipher(params);
    case TaskId::reverse: return gen_reverse(params);
    case TaskId::copyqa: return gen_copyqa(params);
  }
  throw Error(ErrorCategory::config, "unknown task id");
}

namespace {

nlohmann::ordered_json params_to_json(const GenParams& p) {
  nlohmann::ordered_json j;
  j["seed"] = p.seed;
  j["train_size"] = p.train_size;
  j["validation_size"] = p.validation_size;
  j["test_size"] = p.test_size;
  j["vocab_size"] = p.vocab_size;
  j["min_sentence_len"] = p.min_sentence_len;
  j["max_sentence_len"] = p.max_sentence_len;
  j["identity_substitution"] = p.identity_substitution;
  j["num_keys"] = p.num_keys;
  j["num_values"] = p.num_values;
  j["min_facts"] = p.min_facts;
  j["max_facts"] = p.max_facts;
  j["value_phrase_len"] = p.value_phrase_len;
  j["absent_key_prob"] = p.absent_key_prob;
  return j;
}

GenParams params_from_json(const nlohmann::json& j) {
  GenParams p;
  p.seed = j.at("seed").get<uint64_t>();
  p.train_size = j.at("train_size").get<int>();
  p.validation_size = j.at("validation_size").get<int>();
  p.test_size = j.at("test_size").get<int>();
  p.vocab_size = j.at("vocab_size").get<int>();
  p.min_sentence_len = j.at("min_sentence_len").get<int>();
  p.max_sentence_len = j.at("max_sentence_len").get<int>();
  p.identity_substitution = j.at("identity_substitution").get<bool>();
  p.num_keys = j.at("num_keys").get<int>();
  p.num_values = j.at("num_values").get<int>();
  p.min_facts = j.at("min_facts").get<int>();
  p.max_facts = j.at("max_facts").get<int>();
  p.value_phrase_len = j.at("value_phrase_len").get<int>();
  p.absent_key_prob = j.at("absent_key_prob").get<double>();
  return p;
}

void save_examples(const std::string& path, const std::vector<Example>& examples) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCategory::io, "cannot write " + path);
  for (const Example& ex : examples) {
    nlohmann::ordered_json j;
    j["prompt"] = ex.prompt_text;
    j["reference"] = ex.reference_text;
    j["task_id"] = task_name(ex.task_id);
    out << j.dump() << '\n';
  }
}

std::vector<Example> load_examples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCategory::io, "cannot read " + path);
  std::vector<Example> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      Example ex;
      ex.prompt_text = j.at("prompt").get<std::string>();
      ex.reference_text = j.at("reference").get<std::string>();
      ex.task_id = parse_task(j.at("task_id").get<std::string>());
      if (ex.reference_text.empty()) {
        throw Error(ErrorCategory::data, "empty reference");
      }
      out.push_back(std::move(ex));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCategory::data,
                  path + ":" + std::to_string(lineno) + ": malformed example: " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorCategory::data,
                  path + ":" + std::to_string(lineno) + ": malformed example: " + e.what());
    }
  }
  return out;
}

}  // namespace

void save_dataset(const std::string& dir, const DatasetSplit& split) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCategory::io, "cannot create " + dir + ": " + ec.message());

  save_examples(dir + "/train.jsonl", split.train);
  save_examples(dir + "/validation.jsonl", split.validation);
  save_examples(dir + "/test.jsonl", split.test);

  nlohmann::ordered_json manifest;
  manifest["task_id"] = task_name(split.task_id);
  manifest["params"] = params_to_json(split.params);
  manifest["counts"] = {{"train", split.train.size()},
                        {"validation", split.validation.size()},
                        {"test", split.test.size()}};
  std::ofstream out(dir + "/manifest.json");
  if (!out) throw Error(ErrorCategory::io, "cannot write " + dir + "/manifest.json");
  out << manifest.dump(2) << '\n';
}

DatasetSplit load_dataset(const std::string& dir) {
  std::ifstream in(dir + "/manifest.json");
  if (!in) throw Error(ErrorCategory::io, "cannot read " + dir + "/manifest.json");
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCategory::data, dir + "/manifest.json: " + e.what());
  }

  DatasetSplit split;
  try {
    split.task_id = parse_task(manifest.at("task_id").get<std::string>());
    split.params = params_from_json(manifest.at("params"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCategory::data, dir + "/manifest.json: " + e.what());
  }
  split.train = load_examples(dir + "/train.jsonl");
  split.validation = load_examples(dir + "/validation.jsonl");
  split.test = load_examples(dir + "/test.jsonl");
  return split;
}

Vocabulary build_vocabulary(const DatasetSplit& split) {
  std::vector<std::string> texts;
  texts.reserve(2 * (split.train.size() + split.validation.size() + split.test.size()));
  for (const std::vector<Example>* list : {&split.train, &split.validation, &split.test}) {
    for (const Example& ex : *list) {
      texts.push_back(ex.prompt_text);
      texts.push_back(ex.reference_text);
    }
  }
  return Vocabulary::from_texts(texts);
}

}  // namespace textgrpo::tasks
