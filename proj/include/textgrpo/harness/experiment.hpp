// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "textgrpo/metrics/text_metrics.hpp"
#include "textgrpo/policy/policy.hpp"
#include "textgrpo/tasks/task_synth.hpp"
#include "textgrpo/train/config.hpp"

namespace textgrpo::harness {

enum class Arm { base, sft, grpo, mpgrpo };

const char* arm_name(Arm arm);               // BASE / SFT / GRPO / MPGRPO
Arm parse_arm(const std::string& name);      // throws Error(config)

// Which policy to instantiate. "rnn" uses hidden/embed, "tabular" uses order.
struct ModelSpec {
  std::string kind = "rnn";
  int hidden = 64;
  int embed = 32;
  int order = 1;
  double init_scale = 0.08;
};

// Fully resolved description of one run. The top-level seed drives model
// init, data order and sampling; gen.seed identifies the dataset and is
// deliberately independent so sweeps reuse one dataset across run seeds.
struct ExperimentConfig {
  tasks::TaskId task = tasks::TaskId::cipher;
  Arm arm = Arm::grpo;
  uint64_t seed = 0;
  std::string dataset_dir = "data";
  std::string out_dir = "out";
  std::string init_checkpoint;  // optional warm start, e.g. an SFT checkpoint
  ModelSpec model;
  tasks::GenParams gen;
  train::TrainConfig train_cfg;
  train::SftConfig sft_cfg;
  std::vector<metrics::MetricId> ablate_rewards;  // default: all five
  int ablate_seed_count = 3;
  std::vector<Arm> compare_arms;  // default: GRPO, MPGRPO

  void validate() const;
  nlohmann::ordered_json to_json() const;
  // Lenient parse: absent keys keep their defaults.
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load_file(const std::string& path);
  std::string digest() const;  // FNV-1a over the canonical JSON dump
};

// Per-metric means over a split, reported x100 like the paper's tables.
struct EvalReport {
  std::string arm;
  std::string task;
  int64_t sample_count = 0;
  std::array<double, metrics::kMetricCount> scores{};  // MetricId order
  double avg = 0.0;
  uint64_t eval_seed = 0;
  std::string config_digest;
  std::string checkpoint_config_digest;
  std::string vocab_digest;
  std::string descriptor;

  double score(metrics::MetricId m) const { return scores[size_t(m)]; }
  nlohmann::ordered_json to_json() const;
};

// One sampled completion per example at the config's eval temperature and
// top-p, every metric scored against the reference. Identity fields other
// than vocab digest, sample count, eval seed and scores are left for the
// caller to fill.
EvalReport evaluate(const policy::Policy& pol, const std::vector<tasks::Example>& examples,
                    const Vocabulary& vocab, const train::TrainConfig& cfg, uint64_t eval_seed);

struct TrainOutcome {
  std::string final_checkpoint;
  std::string best_checkpoint;
  std::string log_path;
  int64_t steps = 0;
  int best_epoch = -1;           // -1 when no epoch ran
  double best_val_score = 0.0;   // selection metric, x100
  std::vector<EvalReport> val_curve;  // one report per epoch
};

// Subcommand bodies. Each throws textgrpo::Error on failure; the CLI maps
// categories to exit codes.
void cmd_gen(const ExperimentConfig& cfg);
TrainOutcome cmd_train(const ExperimentConfig& cfg);
EvalReport cmd_eval(const ExperimentConfig& cfg, const std::string& checkpoint_path,
                    const std::string& report_path);

struct AblationResult {
  std::vector<metrics::MetricId> rewards;                 // row order
  std::vector<std::array<double, metrics::kMetricCount>> mean;   // x100
  std::vector<std::array<double, metrics::kMetricCount>> stdev;  // across seeds
  std::vector<double> row_avg;                            // mean of the metric means
  std::string csv_path;
  std::string md_path;
  // Rows whose reward-matched column ties or beats every other column entry.
  int diagonal_row_max_count = 0;
};

// Trains one GRPO arm per reward over ablate_seed_count seeds (seed, seed+1,
// ...) and aggregates test-split reports. Independent cells may run on worker
// threads (TEXTGRPO_WORKERS); results are merged in a fixed order so output
// bytes do not depend on the worker count.
AblationResult cmd_ablate(const ExperimentConfig& cfg);

struct CompareRow {
  std::string arm;
  int epoch = 0;
  double val_bleu = 0.0;  // x100
};

struct CompareResult {
  std::vector<CompareRow> rows;  // epochs x arms
  std::string leader;            // arm with the highest final validation BLEU
  std::string csv_path;
  std::string md_path;
};

// Trains every listed arm with the shared task, seed and epoch budget and
// writes per-epoch validation BLEU as plot-ready columnar data.
CompareResult cmd_compare(const ExperimentConfig& cfg);

// Renders every recognized artifact under `dir` (eval reports, ablation
// tables, comparison curves) into one markdown document, written to
// `dir`/report.md and returned.
std::string cmd_report(const std::string& dir);

}  // namespace textgrpo::harness
