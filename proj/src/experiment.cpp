// SPDX-License-Identifier: Apache-2.0
#include "textgrpo/harness/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "textgrpo/error.hpp"
#include "textgrpo/policy/checkpoint.hpp"
#include "textgrpo/policy/neural_policy.hpp"
#include "textgrpo/policy/tabular_policy.hpp"
#include "textgrpo/train/grpo.hpp"
#include "textgrpo/train/sft.hpp"

namespace textgrpo::harness {

namespace {

namespace fs = std::filesystem;

std::string fnv1a_hex(const std::string& text) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

// Shortest round-trip decimal form, shared by CSV and markdown emitters.
std::string num(double x) { return nlohmann::json(x).dump(); }

std::string fixed2(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", x);
  return std::string(buf);
}

uint64_t derive_seed(uint64_t base, uint64_t salt) {
  uint64_t x = base ^ (salt * 0x9e3779b97f4a7c15ull + 0x9e3779b97f4a7c15ull);
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

void write_text_file(const std::string& path, const std::string& text) {
  fs::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCategory::io, "cannot write " + path);
  out << text;
}

std::vector<train::TrainExample> to_train_examples(const std::vector<tasks::Example>& examples,
                                                   const Vocabulary& vocab) {
  std::vector<train::TrainExample> out;
  out.reserve(examples.size());
  for (const tasks::Example& ex : examples) {
    train::TrainExample t;
    t.prompt = tokenize(ex.prompt_text, vocab);
    t.reference = tokenize(ex.reference_text, vocab);
    if (t.reference.empty()) {
      throw Error(ErrorCategory::data, "example with empty reference: " + ex.prompt_text);
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::unique_ptr<policy::Policy> make_policy(const ModelSpec& spec, const Vocabulary& vocab,
                                            uint64_t seed) {
  Rng rng = Rng(seed).child(0x696e6974ull);  // init stream
  if (spec.kind == "rnn") {
    return std::make_unique<policy::NeuralPolicy>(
        policy::NeuralPolicy::random_init(vocab, spec.hidden, spec.embed, spec.init_scale, rng));
  }
  if (spec.kind == "tabular") {
    return std::make_unique<policy::TabularPolicy>(
        policy::TabularPolicy::random_init(vocab, spec.order, spec.init_scale, rng));
  }
  throw Error(ErrorCategory::config, "unknown model kind: " + spec.kind);
}

int worker_count() {
  const char* env = std::getenv("TEXTGRPO_WORKERS");
  if (!env || !*env) return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || v < 1 || v > 256) {
    throw Error(ErrorCategory::config, std::string("bad TEXTGRPO_WORKERS value: ") + env);
  }
  return int(v);
}

// Runs `total` independent jobs on up to worker_count() threads, preserving
// deterministic results (each job writes only its own slot).
template <typename Job>
void run_jobs(int total, Job&& job) {
  const int workers = std::min(worker_count(), std::max(1, total));
  if (workers <= 1) {
    for (int i = 0; i < total; ++i) job(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<size_t>(total));
  std::vector<std::thread> pool;
  pool.reserve(size_t(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < total; i = next.fetch_add(1)) {
        try {
          job(i);
        } catch (...) {
          errors[size_t(i)] = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

const char* arm_name(Arm arm) {
  switch (arm) {
    case Arm::base: return "BASE";
    case Arm::sft: return "SFT";
    case Arm::grpo: return "GRPO";
    case Arm::mpgrpo: return "MPGRPO";
  }
  throw Error(ErrorCategory::config, "unknown arm");
}

Arm parse_arm(const std::string& name) {
  std::string up = name;
  std::transform(up.begin(), up.end(), up.begin(),
                 [](unsigned char c) { return char(std::toupper(c)); });
  if (up == "BASE") return Arm::base;
  if (up == "SFT") return Arm::sft;
  if (up == "GRPO") return Arm::grpo;
  if (up == "MPGRPO") return Arm::mpgrpo;
  throw Error(ErrorCategory::config, "unknown arm: " + name);
}

void ExperimentConfig::validate() const {
  train_cfg.validate();
  sft_cfg.validate();
  gen.validate(task);
  if (model.kind != "rnn" && model.kind != "tabular") {
    throw Error(ErrorCategory::config, "unknown model kind: " + model.kind);
  }
  if (model.kind == "rnn" && (model.hidden < 1 || model.embed < 1)) {
    throw Error(ErrorCategory::config, "rnn dimensions must be >= 1");
  }
  if (model.kind == "tabular" && (model.order < 0 || model.order > 2)) {
    throw Error(ErrorCategory::config, "tabular order must be in [0,2]");
  }
  if (ablate_seed_count < 1) {
    throw Error(ErrorCategory::config, "ablate_seed_count must be >= 1");
  }
  if (out_dir.empty()) throw Error(ErrorCategory::config, "out_dir must be set");
  if (dataset_dir.empty()) throw Error(ErrorCategory::config, "dataset_dir must be set");
}

nlohmann::ordered_json ExperimentConfig::to_json() const {
  nlohmann::ordered_json j;
  j["task"] = tasks::task_name(task);
  j["arm"] = arm_name(arm);
  j["seed"] = seed;
  j["dataset_dir"] = dataset_dir;
  j["out_dir"] = out_dir;
  j["init_checkpoint"] = init_checkpoint;
  j["model"] = {{"kind", model.kind},
                {"hidden", model.hidden},
                {"embed", model.embed},
                {"order", model.order},
                {"init_scale", model.init_scale}};
  j["gen"] = {{"seed", gen.seed},
              {"train_size", gen.train_size},
              {"validation_size", gen.validation_size},
              {"test_size", gen.test_size},
              {"vocab_size", gen.vocab_size},
              {"min_sentence_len", gen.min_sentence_len},
              {"max_sentence_len", gen.max_sentence_len},
              {"identity_substitution", gen.identity_substitution},
              {"num_keys", gen.num_keys},
              {"num_values", gen.num_values},
              {"min_facts", gen.min_facts},
              {"max_facts", gen.max_facts},
              {"value_phrase_len", gen.value_phrase_len},
              {"absent_key_prob", gen.absent_key_prob}};
  j["train"] = {{"group_size", train_cfg.group_size},
                {"kl_beta", train_cfg.kl_beta},
                {"clip_eps", train_cfg.clip_eps},
                {"lr", train_cfg.lr},
                {"epochs", train_cfg.epochs},
                {"batch_size", train_cfg.batch_size},
                {"warmup_frac", train_cfg.warmup_frac},
                {"weight_decay", train_cfg.weight_decay},
                {"train_temperature", train_cfg.train_temperature},
                {"eval_temperature", train_cfg.eval_temperature},
                {"eval_top_p", train_cfg.eval_top_p},
                {"max_prompt_len", train_cfg.max_prompt_len},
                {"max_completion_len", train_cfg.max_completion_len},
                {"mixed_policy", train_cfg.mixed_policy},
                {"reward", metrics::metric_name(train_cfg.reward)},
                {"kl_ceiling", train_cfg.kl_ceiling}};
  j["sft"] = {{"lr", sft_cfg.lr},
              {"epochs", sft_cfg.epochs},
              {"batch_size", sft_cfg.batch_size},
              {"warmup_frac", sft_cfg.warmup_frac},
              {"weight_decay", sft_cfg.weight_decay}};
  nlohmann::ordered_json rewards = nlohmann::ordered_json::array();
  for (metrics::MetricId m : ablate_rewards) rewards.push_back(metrics::metric_name(m));
  j["ablate_rewards"] = rewards;
  j["ablate_seed_count"] = ablate_seed_count;
  nlohmann::ordered_json arms = nlohmann::ordered_json::array();
  for (Arm a : compare_arms) arms.push_back(arm_name(a));
  j["compare_arms"] = arms;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  try {
    if (j.contains("task")) cfg.task = tasks::parse_task(j.at("task").get<std::string>());
    if (j.contains("arm")) cfg.arm = parse_arm(j.at("arm").get<std::string>());
    cfg.seed = j.value("seed", cfg.seed);
    cfg.dataset_dir = j.value("dataset_dir", cfg.dataset_dir);
    cfg.out_dir = j.value("out_dir", cfg.out_dir);
    cfg.init_checkpoint = j.value("init_checkpoint", cfg.init_checkpoint);
    if (j.contains("model")) {
      const auto& m = j.at("model");
      cfg.model.kind = m.value("kind", cfg.model.kind);
      cfg.model.hidden = m.value("hidden", cfg.model.hidden);
      cfg.model.embed = m.value("embed", cfg.model.embed);
      cfg.model.order = m.value("order", cfg.model.order);
      cfg.model.init_scale = m.value("init_scale", cfg.model.init_scale);
    }
    if (j.contains("gen")) {
      const auto& g = j.at("gen");
      cfg.gen.seed = g.value("seed", cfg.gen.seed);
      cfg.gen.train_size = g.value("train_size", cfg.gen.train_size);
      cfg.gen.validation_size = g.value("validation_size", cfg.gen.validation_size);
      cfg.gen.test_size = g.value("test_size", cfg.gen.test_size);
      cfg.gen.vocab_size = g.value("vocab_size", cfg.gen.vocab_size);
      cfg.gen.min_sentence_len = g.value("min_sentence_len", cfg.gen.min_sentence_len);
      cfg.gen.max_sentence_len = g.value("max_sentence_len", cfg.gen.max_sentence_len);
      cfg.gen.identity_substitution =
          g.value("identity_substitution", cfg.gen.identity_substitution);
      cfg.gen.num_keys = g.value("num_keys", cfg.gen.num_keys);
      cfg.gen.num_values = g.value("num_values", cfg.gen.num_values);
      cfg.gen.min_facts = g.value("min_facts", cfg.gen.min_facts);
      cfg.gen.max_facts = g.value("max_facts", cfg.gen.max_facts);
      cfg.gen.value_phrase_len = g.value("value_phrase_len", cfg.gen.value_phrase_len);
      cfg.gen.absent_key_prob = g.value("absent_key_prob", cfg.gen.absent_key_prob);
    }
    if (j.contains("train")) {
      const auto& t = j.at("train");
      cfg.train_cfg.group_size = t.value("group_size", cfg.train_cfg.group_size);
      cfg.train_cfg.kl_beta = t.value("kl_beta", cfg.train_cfg.kl_beta);
      cfg.train_cfg.clip_eps = t.value("clip_eps", cfg.train_cfg.clip_eps);
      cfg.train_cfg.lr = t.value("lr", cfg.train_cfg.lr);
      cfg.train_cfg.epochs = t.value("epochs", cfg.train_cfg.epochs);
      cfg.train_cfg.batch_size = t.value("batch_size", cfg.train_cfg.batch_size);
      cfg.train_cfg.warmup_frac = t.value("warmup_frac", cfg.train_cfg.warmup_frac);
      cfg.train_cfg.weight_decay = t.value("weight_decay", cfg.train_cfg.weight_decay);
      cfg.train_cfg.train_temperature =
          t.value("train_temperature", cfg.train_cfg.train_temperature);
      cfg.train_cfg.eval_temperature =
          t.value("eval_temperature", cfg.train_cfg.eval_temperature);
      cfg.train_cfg.eval_top_p = t.value("eval_top_p", cfg.train_cfg.eval_top_p);
      cfg.train_cfg.max_prompt_len = t.value("max_prompt_len", cfg.train_cfg.max_prompt_len);
      cfg.train_cfg.max_completion_len =
          t.value("max_completion_len", cfg.train_cfg.max_completion_len);
      cfg.train_cfg.mixed_policy = t.value("mixed_policy", cfg.train_cfg.mixed_policy);
      if (t.contains("reward")) {
        cfg.train_cfg.reward = metrics::parse_metric(t.at("reward").get<std::string>());
      }
      cfg.train_cfg.kl_ceiling = t.value("kl_ceiling", cfg.train_cfg.kl_ceiling);
    }
    if (j.contains("sft")) {
      const auto& s = j.at("sft");
      cfg.sft_cfg.lr = s.value("lr", cfg.sft_cfg.lr);
      cfg.sft_cfg.epochs = s.value("epochs", cfg.sft_cfg.epochs);
      cfg.sft_cfg.batch_size = s.value("batch_size", cfg.sft_cfg.batch_size);
      cfg.sft_cfg.warmup_frac = s.value("warmup_frac", cfg.sft_cfg.warmup_frac);
      cfg.sft_cfg.weight_decay = s.value("weight_decay", cfg.sft_cfg.weight_decay);
    }
    if (j.contains("ablate_rewards")) {
      cfg.ablate_rewards.clear();
      for (const auto& name : j.at("ablate_rewards")) {
        cfg.ablate_rewards.push_back(metrics::parse_metric(name.get<std::string>()));
      }
    }
    cfg.ablate_seed_count = j.value("ablate_seed_count", cfg.ablate_seed_count);
    if (j.contains("compare_arms")) {
      cfg.compare_arms.clear();
      for (const auto& name : j.at("compare_arms")) {
        cfg.compare_arms.push_back(parse_arm(name.get<std::string>()));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCategory::config, std::string("bad experiment config: ") + e.what());
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCategory::io, "cannot read config: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCategory::config, path + ": " + e.what());
  }
  return from_json(j);
}

std::string ExperimentConfig::digest() const { return fnv1a_hex(to_json().dump()); }

nlohmann::ordered_json EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["arm"] = arm;
  j["task"] = task;
  j["sample_count"] = sample_count;
  nlohmann::ordered_json s;
  for (metrics::MetricId m : metrics::kAllMetrics) {
    s[metrics::metric_name(m)] = scores[size_t(m)];
  }
  j["scores"] = s;
  j["avg"] = avg;
  j["eval_seed"] = eval_seed;
  j["config_digest"] = config_digest;
  j["checkpoint_config_digest"] = checkpoint_config_digest;
  j["vocab_digest"] = vocab_digest;
  j["descriptor"] = descriptor;
  return j;
}

EvalReport evaluate(const policy::Policy& pol, const std::vector<tasks::Example>& examples,
                    const Vocabulary& vocab, const train::TrainConfig& cfg, uint64_t eval_seed) {
  if (examples.empty()) throw Error(ErrorCategory::data, "cannot evaluate an empty split");
  policy::SamplingParams sp;
  sp.temperature = cfg.eval_temperature;
  sp.top_p = cfg.eval_top_p;
  sp.max_len = cfg.max_completion_len;

  Rng rng(eval_seed);
  EvalReport report;
  report.sample_count = int64_t(examples.size());
  report.eval_seed = eval_seed;
  report.vocab_digest = vocab.digest();
  report.descriptor = pol.descriptor();

  std::array<double, metrics::kMetricCount> sums{};
  for (const tasks::Example& ex : examples) {
    TokenSequence prompt = tokenize(ex.prompt_text, vocab);
    if (int(prompt.size()) > cfg.max_prompt_len) prompt.resize(size_t(cfg.max_prompt_len));
    const TokenSequence reference = tokenize(ex.reference_text, vocab);
    const auto draws = policy::sample(pol, prompt, 1, sp, rng);
    const TokenSequence candidate = strip_trailing_eos(draws[0].tokens);
    for (metrics::MetricId m : metrics::kAllMetrics) {
      sums[size_t(m)] += metrics::reward(m, candidate, reference);
    }
  }
  double total = 0.0;
  for (size_t i = 0; i < sums.size(); ++i) {
    report.scores[i] = 100.0 * sums[i] / double(examples.size());
    total += report.scores[i];
  }
  report.avg = total / double(metrics::kMetricCount);
  return report;
}

void cmd_gen(const ExperimentConfig& cfg) {
  const tasks::DatasetSplit split = tasks::generate(cfg.task, cfg.gen);
  tasks::save_dataset(cfg.dataset_dir, split);
}

namespace {

// Validation metric used for best-checkpoint selection: the reward the arm
// optimizes for GRPO arms, BLEU otherwise.
metrics::MetricId selection_metric(const ExperimentConfig& cfg) {
  if (cfg.arm == Arm::grpo || cfg.arm == Arm::mpgrpo) return cfg.train_cfg.reward;
  return metrics::MetricId::bleu;
}

struct RunContext {
  const tasks::DatasetSplit* split = nullptr;
  const Vocabulary* vocab = nullptr;
};

TrainOutcome run_train(const ExperimentConfig& cfg, const RunContext& ctx) {
  cfg.validate();
  const Vocabulary& vocab = *ctx.vocab;
  const tasks::DatasetSplit& split = *ctx.split;
  const std::string config_digest = cfg.digest();

  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) throw Error(ErrorCategory::io, "cannot create " + cfg.out_dir + ": " + ec.message());

  train::TrainConfig tcfg = cfg.train_cfg;
  tcfg.seed = cfg.seed;
  tcfg.mixed_policy = cfg.arm == Arm::mpgrpo;
  train::SftConfig scfg = cfg.sft_cfg;
  scfg.seed = cfg.seed;

  std::unique_ptr<policy::Policy> pol;
  if (cfg.init_checkpoint.empty()) {
    pol = make_policy(cfg.model, vocab, cfg.seed);
  } else {
    const policy::Checkpoint ckpt = policy::load_checkpoint(cfg.init_checkpoint);
    if (ckpt.vocab_digest != vocab.digest()) {
      throw Error(ErrorCategory::mismatch,
                  "init checkpoint vocabulary digest " + ckpt.vocab_digest +
                      " does not match dataset vocabulary " + vocab.digest());
    }
    pol = policy::restore_policy(ckpt);
  }

  TrainOutcome outcome;
  outcome.final_checkpoint = cfg.out_dir + "/checkpoint_final.bin";
  outcome.best_checkpoint = cfg.out_dir + "/checkpoint_best.bin";
  outcome.log_path = cfg.out_dir + "/train_log.jsonl";

  train::TrainLogWriter log(outcome.log_path);
  nlohmann::ordered_json header;
  header["arm"] = arm_name(cfg.arm);
  header["task"] = tasks::task_name(cfg.task);
  header["config_digest"] = config_digest;
  header["vocab_digest"] = vocab.digest();
  header["descriptor"] = pol->descriptor();
  header["off_policy_members_per_group"] = tcfg.mixed_policy ? 1 : 0;
  header["group_size"] = tcfg.group_size;
  log.write_header(header);

  const metrics::MetricId sel = selection_metric(cfg);
  const auto eval_epoch = [&](const policy::Policy& p, int salt) {
    EvalReport r = evaluate(p, split.validation, vocab, tcfg, derive_seed(cfg.seed, 1000 + uint64_t(salt)));
    r.arm = arm_name(cfg.arm);
    r.task = tasks::task_name(cfg.task);
    r.config_digest = config_digest;
    r.checkpoint_config_digest = config_digest;
    return r;
  };

  // The untrained policy participates in best-checkpoint selection so a warm
  // start can never be lost to a destabilizing run.
  policy::Checkpoint best = policy::snapshot_policy(*pol, config_digest);
  double best_score = -1.0;
  int best_epoch = -1;
  if (cfg.arm != Arm::base && !split.validation.empty()) {
    best_score = eval_epoch(*pol, 0).score(sel);
  }

  std::ofstream val_csv(cfg.out_dir + "/validation.csv");
  if (!val_csv) throw Error(ErrorCategory::io, "cannot write validation.csv");
  val_csv << "epoch,bleu,rouge1,rouge2,rougel,meteor,avg\n";

  train::TrainHooks hooks;
  hooks.on_step = [&](const train::StepRecord& rec) { log.write_step(rec); };
  hooks.on_epoch_end = [&](int epoch, const policy::Policy& p) {
    if (split.validation.empty()) return;
    EvalReport r = eval_epoch(p, epoch + 1);
    outcome.val_curve.push_back(r);
    val_csv << epoch;
    for (metrics::MetricId m : metrics::kAllMetrics) val_csv << ',' << num(r.score(m));
    val_csv << ',' << num(r.avg) << '\n';
    if (r.score(sel) > best_score) {
      best_score = r.score(sel);
      best_epoch = epoch;
      best = policy::snapshot_policy(p, config_digest);
    }
  };

  switch (cfg.arm) {
    case Arm::base:
      break;
    case Arm::sft: {
      const auto data = to_train_examples(split.train, vocab);
      outcome.steps = train::sft_train(*pol, data, scfg, hooks).steps;
      break;
    }
    case Arm::grpo:
    case Arm::mpgrpo: {
      const auto data = to_train_examples(split.train, vocab);
      outcome.steps = train::grpo_train(*pol, data, tcfg, hooks).steps;
      break;
    }
  }

  outcome.best_epoch = best_epoch;
  outcome.best_val_score = std::max(0.0, best_score);
  policy::save_checkpoint(policy::snapshot_policy(*pol, config_digest),
                          outcome.final_checkpoint);
  policy::save_checkpoint(best, outcome.best_checkpoint);

  nlohmann::ordered_json summary;
  summary["arm"] = arm_name(cfg.arm);
  summary["task"] = tasks::task_name(cfg.task);
  summary["seed"] = cfg.seed;
  summary["steps"] = outcome.steps;
  summary["best_epoch"] = best_epoch;
  summary["best_val_score"] = outcome.best_val_score;
  summary["selection_metric"] = metrics::metric_name(sel);
  summary["config_digest"] = config_digest;
  summary["vocab_digest"] = vocab.digest();
  summary["descriptor"] = pol->descriptor();
  write_text_file(cfg.out_dir + "/train_summary.json", summary.dump(2) + "\n");
  return outcome;
}

}  // namespace

TrainOutcome cmd_train(const ExperimentConfig& cfg) {
  const tasks::DatasetSplit split = tasks::load_dataset(cfg.dataset_dir);
  const Vocabulary vocab = tasks::build_vocabulary(split);
  RunContext ctx{&split, &vocab};
  return run_train(cfg, ctx);
}

EvalReport cmd_eval(const ExperimentConfig& cfg, const std::string& checkpoint_path,
                    const std::string& report_path) {
  const tasks::DatasetSplit split = tasks::load_dataset(cfg.dataset_dir);
  const Vocabulary vocab = tasks::build_vocabulary(split);

  const policy::Checkpoint ckpt = policy::load_checkpoint(checkpoint_path);
  if (ckpt.vocab_digest != vocab.digest()) {
    throw Error(ErrorCategory::mismatch,
                "checkpoint vocabulary digest " + ckpt.vocab_digest +
                    " does not match dataset vocabulary " + vocab.digest());
  }
  const std::unique_ptr<policy::Policy> pol = policy::restore_policy(ckpt);

  EvalReport report = evaluate(*pol, split.test, vocab, cfg.train_cfg, cfg.seed);
  report.arm = arm_name(cfg.arm);
  report.task = tasks::task_name(cfg.task);
  report.config_digest = cfg.digest();
  report.checkpoint_config_digest = ckpt.config_digest;
  if (!report_path.empty()) {
    write_text_file(report_path, report.to_json().dump(2) + "\n");
  }
  return report;
}

AblationResult cmd_ablate(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<metrics::MetricId> rewards = cfg.ablate_rewards;
  if (rewards.empty()) {
    rewards.assign(std::begin(metrics::kAllMetrics), std::end(metrics::kAllMetrics));
  }
  if (rewards.size() < 2) {
    throw Error(ErrorCategory::config, "ablation needs at least two rewards");
  }

  const tasks::DatasetSplit split = tasks::load_dataset(cfg.dataset_dir);
  const Vocabulary vocab = tasks::build_vocabulary(split);
  RunContext ctx{&split, &vocab};

  const int seeds = cfg.ablate_seed_count;
  const int cells = int(rewards.size()) * seeds;
  std::vector<EvalReport> reports(static_cast<size_t>(cells));

  run_jobs(cells, [&](int idx) {
    const int ri = idx / seeds;
    const int si = idx % seeds;
    ExperimentConfig cell = cfg;
    cell.arm = Arm::grpo;
    cell.train_cfg.reward = rewards[size_t(ri)];
    cell.seed = cfg.seed + uint64_t(si);
    cell.out_dir = cfg.out_dir + "/ablate/" + metrics::metric_name(rewards[size_t(ri)]) +
                   "_seed" + std::to_string(cell.seed);
    const TrainOutcome out = run_train(cell, ctx);

    const policy::Checkpoint best = policy::load_checkpoint(out.best_checkpoint);
    const std::unique_ptr<policy::Policy> pol = policy::restore_policy(best);
    EvalReport r = evaluate(*pol, split.test, vocab, cell.train_cfg,
                            derive_seed(cell.seed, 0xab1a7eull));
    r.arm = arm_name(cell.arm);
    r.task = tasks::task_name(cell.task);
    r.config_digest = cell.digest();
    r.checkpoint_config_digest = best.config_digest;
    write_text_file(cell.out_dir + "/eval_report.json", r.to_json().dump(2) + "\n");
    reports[size_t(idx)] = std::move(r);
  });

  AblationResult result;
  result.rewards = rewards;
  result.mean.resize(rewards.size());
  result.stdev.resize(rewards.size());
  result.row_avg.resize(rewards.size());
  for (size_t ri = 0; ri < rewards.size(); ++ri) {
    for (size_t mi = 0; mi < metrics::kMetricCount; ++mi) {
      double sum = 0.0;
      for (int si = 0; si < seeds; ++si) {
        sum += reports[ri * size_t(seeds) + size_t(si)].scores[mi];
      }
      const double mean = sum / double(seeds);
      double var = 0.0;
      for (int si = 0; si < seeds; ++si) {
        const double d = reports[ri * size_t(seeds) + size_t(si)].scores[mi] - mean;
        var += d * d;
      }
      result.mean[ri][mi] = mean;
      result.stdev[ri][mi] = std::sqrt(var / double(seeds));
    }
    double row_sum = 0.0;
    for (size_t mi = 0; mi < metrics::kMetricCount; ++mi) row_sum += result.mean[ri][mi];
    result.row_avg[ri] = row_sum / double(metrics::kMetricCount);

    const double diag = result.mean[ri][size_t(rewards[ri])];
    bool row_max = true;
    for (size_t mi = 0; mi < metrics::kMetricCount; ++mi) {
      if (result.mean[ri][mi] > diag + 1e-9) row_max = false;
    }
    if (row_max) ++result.diagonal_row_max_count;
  }

  std::ostringstream csv;
  csv << "reward,bleu,rouge1,rouge2,rougel,meteor,avg\n";
  for (size_t ri = 0; ri < rewards.size(); ++ri) {
    csv << metrics::metric_name(rewards[ri]);
    for (size_t mi = 0; mi < metrics::kMetricCount; ++mi) csv << ',' << num(result.mean[ri][mi]);
    csv << ',' << num(result.row_avg[ri]) << '\n';
  }
  result.csv_path = cfg.out_dir + "/ablation.csv";
  write_text_file(result.csv_path, csv.str());

  std::ostringstream md;
  md << "# Reward ablation (" << tasks::task_name(cfg.task) << ", seeds=" << seeds
     << ", mean +/- std x100)\n\n";
  md << "| reward | BLEU | ROUGE-1 | ROUGE-2 | ROUGE-L | METEOR | AVG |\n";
  md << "|---|---|---|---|---|---|---|\n";
  for (size_t ri = 0; ri < rewards.size(); ++ri) {
    md << "| " << metrics::metric_name(rewards[ri]);
    for (size_t mi = 0; mi < metrics::kMetricCount; ++mi) {
      md << " | " << fixed2(result.mean[ri][mi]) << " +/- " << fixed2(result.stdev[ri][mi]);
    }
    md << " | " << fixed2(result.row_avg[ri]) << " |\n";
  }
  md << "\nrows where the trained reward ties or beats every column: "
     << result.diagonal_row_max_count << "/" << rewards.size() << "\n";
  result.md_path = cfg.out_dir + "/ablation.md";
  write_text_file(result.md_path, md.str());
  return result;
}

CompareResult cmd_compare(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<Arm> arms = cfg.compare_arms;
  if (arms.empty()) arms = {Arm::grpo, Arm::mpgrpo};
  for (Arm a : arms) {
    if (a == Arm::base) {
      throw Error(ErrorCategory::config, "BASE has no training curve to compare");
    }
    if (a == Arm::sft && cfg.sft_cfg.epochs != cfg.train_cfg.epochs) {
      throw Error(ErrorCategory::config,
                  "compare arms must share the epoch budget (sft.epochs != train.epochs)");
    }
  }

  const tasks::DatasetSplit split = tasks::load_dataset(cfg.dataset_dir);
  const Vocabulary vocab = tasks::build_vocabulary(split);
  RunContext ctx{&split, &vocab};

  std::vector<std::vector<EvalReport>> curves(arms.size());
  run_jobs(int(arms.size()), [&](int idx) {
    ExperimentConfig arm_cfg = cfg;
    arm_cfg.arm = arms[size_t(idx)];
    arm_cfg.out_dir = cfg.out_dir + "/compare/" + arm_name(arms[size_t(idx)]);
    curves[size_t(idx)] = run_train(arm_cfg, ctx).val_curve;
  });

  CompareResult result;
  std::ostringstream csv;
  csv << "arm,epoch,val_bleu\n";
  double best_final = -1.0;
  for (size_t ai = 0; ai < arms.size(); ++ai) {
    for (size_t e = 0; e < curves[ai].size(); ++e) {
      CompareRow row;
      row.arm = arm_name(arms[ai]);
      row.epoch = int(e);
      row.val_bleu = curves[ai][e].score(metrics::MetricId::bleu);
      csv << row.arm << ',' << row.epoch << ',' << num(row.val_bleu) << '\n';
      result.rows.push_back(std::move(row));
    }
    if (!curves[ai].empty()) {
      const double final_bleu = curves[ai].back().score(metrics::MetricId::bleu);
      if (final_bleu > best_final) {
        best_final = final_bleu;
        result.leader = arm_name(arms[ai]);
      }
    }
  }
  result.csv_path = cfg.out_dir + "/compare.csv";
  write_text_file(result.csv_path, csv.str());

  std::ostringstream md;
  md << "# Validation BLEU by epoch (" << tasks::task_name(cfg.task) << ")\n\n";
  md << "| epoch |";
  for (Arm a : arms) md << ' ' << arm_name(a) << " |";
  md << "\n|---|";
  for (size_t ai = 0; ai < arms.size(); ++ai) md << "---|";
  md << "\n";
  size_t max_epochs = 0;
  for (const auto& c : curves) max_epochs = std::max(max_epochs, c.size());
  for (size_t e = 0; e < max_epochs; ++e) {
    md << "| " << e << " |";
    for (size_t ai = 0; ai < arms.size(); ++ai) {
      if (e < curves[ai].size()) {
        md << ' ' << fixed2(curves[ai][e].score(metrics::MetricId::bleu)) << " |";
      } else {
        md << " - |";
      }
    }
    md << "\n";
  }
  md << "\nleading arm by final validation BLEU: " << result.leader << "\n";
  result.md_path = cfg.out_dir + "/compare.md";
  write_text_file(result.md_path, md.str());
  return result;
}

std::string cmd_report(const std::string& dir) {
  if (!fs::is_directory(dir)) {
    throw Error(ErrorCategory::io, "not a directory: " + dir);
  }
  std::ostringstream md;
  md << "# Run report: " << fs::path(dir).filename().string() << "\n";

  // Eval reports anywhere under the directory, in sorted path order.
  std::vector<fs::path> eval_paths;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().filename() == "eval_report.json") {
      eval_paths.push_back(entry.path());
    }
  }
  std::sort(eval_paths.begin(), eval_paths.end());
  if (!eval_paths.empty()) {
    md << "\n## Test-set scores (x100)\n\n";
    md << "| run | arm | BLEU | ROUGE-1 | ROUGE-2 | ROUGE-L | METEOR | AVG | n |\n";
    md << "|---|---|---|---|---|---|---|---|---|\n";
    for (const fs::path& p : eval_paths) {
      std::ifstream in(p);
      nlohmann::json j;
      try {
        in >> j;
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCategory::data, p.string() + ": " + e.what());
      }
      md << "| " << fs::relative(p.parent_path(), dir).string() << " | "
         << j.value("arm", "?");
      for (metrics::MetricId m : metrics::kAllMetrics) {
        md << " | " << fixed2(j.at("scores").value(metrics::metric_name(m), 0.0));
      }
      md << " | " << fixed2(j.value("avg", 0.0)) << " | " << j.value("sample_count", 0)
         << " |\n";
    }
  }

  for (const char* name : {"ablation.md", "compare.md"}) {
    const fs::path p = fs::path(dir) / name;
    if (fs::is_regular_file(p)) {
      std::ifstream in(p);
      std::ostringstream body;
      body << in.rdbuf();
      md << "\n" << body.str();
    }
  }

  const std::string text = md.str();
  write_text_file(dir + "/report.md", text);
  return text;
}

}  // namespace textgrpo::harness
