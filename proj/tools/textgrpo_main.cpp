// SPDX-License-Identifier: Apache-2.0
//
// textgrpo: generate synthetic transduction datasets, train SFT / GRPO /
// MP-GRPO policies against text-similarity rewards, evaluate checkpoints on
// every metric, sweep rewards, and render reports.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "textgrpo/error.hpp"
#include "textgrpo/harness/experiment.hpp"
#include "textgrpo/kernels/kernels.hpp"
#include "textgrpo/metrics/text_metrics.hpp"

namespace {

using textgrpo::harness::ExperimentConfig;

struct CommonFlags {
  std::string config_path;
  std::string out;
  std::string task;
  std::string arm;
  std::string reward;
  uint64_t seed = 0;
  bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "experiment config JSON file");
  cmd->add_option("--out", flags.out, "output directory override");
  cmd->add_option("--task", flags.task, "task override: cipher | reverse | copyqa");
  cmd->add_option("--arm", flags.arm, "arm override: BASE | SFT | GRPO | MPGRPO");
  cmd->add_option("--reward", flags.reward,
                  "reward metric override: bleu | rouge1 | rouge2 | rougel | meteor");
  cmd->add_option("--seed", flags.seed, "run seed override")
      ->each([&flags](const std::string&) { flags.seed_set = true; });
}

ExperimentConfig resolve(const CommonFlags& flags) {
  ExperimentConfig cfg;
  if (!flags.config_path.empty()) cfg = ExperimentConfig::load_file(flags.config_path);
  if (!flags.task.empty()) cfg.task = textgrpo::tasks::parse_task(flags.task);
  if (!flags.arm.empty()) cfg.arm = textgrpo::harness::parse_arm(flags.arm);
  if (!flags.reward.empty()) {
    cfg.train_cfg.reward = textgrpo::metrics::parse_metric(flags.reward);
  }
  if (flags.seed_set) cfg.seed = flags.seed;
  if (!flags.out.empty()) cfg.out_dir = flags.out;
  cfg.validate();
  return cfg;
}

void print_report(const textgrpo::harness::EvalReport& report) {
  std::printf("arm=%s task=%s n=%lld", report.arm.c_str(), report.task.c_str(),
              static_cast<long long>(report.sample_count));
  for (textgrpo::metrics::MetricId m : textgrpo::metrics::kAllMetrics) {
    std::printf(" %s=%.2f", textgrpo::metrics::metric_name(m), report.score(m));
  }
  std::printf(" avg=%.2f\n", report.avg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GRPO training with text-similarity rewards on synthetic transduction tasks"};
  app.require_subcommand(1);

  CommonFlags gen_flags, train_flags, eval_flags, ablate_flags, compare_flags;
  std::string eval_checkpoint, eval_data, eval_report_path;
  std::string gen_data_dir, train_data_dir, ablate_data_dir, compare_data_dir;
  std::string report_dir;
  std::vector<std::string> ablate_rewards;
  int ablate_seeds = 0;
  std::vector<std::string> compare_arms;

  CLI::App* gen = app.add_subcommand("gen", "generate a dataset with manifest");
  add_common(gen, gen_flags);
  gen->add_option("--data", gen_data_dir, "dataset directory (defaults to config dataset_dir)");

  CLI::App* train = app.add_subcommand("train", "train one arm, keep best + final checkpoints");
  add_common(train, train_flags);
  train->add_option("--data", train_data_dir, "dataset directory");

  CLI::App* eval = app.add_subcommand("eval", "score a checkpoint on the test split");
  add_common(eval, eval_flags);
  eval->add_option("--checkpoint", eval_checkpoint, "checkpoint file")->required();
  eval->add_option("--data", eval_data, "dataset directory");
  eval->add_option("--report", eval_report_path, "report JSON output path");

  CLI::App* ablate = app.add_subcommand("ablate", "train one GRPO arm per reward metric");
  add_common(ablate, ablate_flags);
  ablate->add_option("--data", ablate_data_dir, "dataset directory");
  ablate->add_option("--rewards", ablate_rewards, "reward metrics to sweep")->delimiter(',');
  ablate->add_option("--seeds", ablate_seeds, "seeds per reward");

  CLI::App* compare = app.add_subcommand("compare", "per-epoch validation curves across arms");
  add_common(compare, compare_flags);
  compare->add_option("--data", compare_data_dir, "dataset directory");
  compare->add_option("--arms", compare_arms, "arms to compare")->delimiter(',');

  CLI::App* report = app.add_subcommand("report", "render artifacts in a directory to markdown");
  report->add_option("--dir", report_dir, "run directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      ExperimentConfig cfg = resolve(gen_flags);
      if (!gen_data_dir.empty()) cfg.dataset_dir = gen_data_dir;
      else if (!gen_flags.out.empty()) cfg.dataset_dir = gen_flags.out;
      if (gen_flags.seed_set) cfg.gen.seed = gen_flags.seed;
      textgrpo::harness::cmd_gen(cfg);
      std::printf("wrote dataset to %s\n", cfg.dataset_dir.c_str());
    } else if (train->parsed()) {
      ExperimentConfig cfg = resolve(train_flags);
      if (!train_data_dir.empty()) cfg.dataset_dir = train_data_dir;
      const auto outcome = textgrpo::harness::cmd_train(cfg);
      std::printf("steps=%lld best_epoch=%d best_val=%.2f final=%s best=%s\n",
                  static_cast<long long>(outcome.steps), outcome.best_epoch,
                  outcome.best_val_score, outcome.final_checkpoint.c_str(),
                  outcome.best_checkpoint.c_str());
    } else if (eval->parsed()) {
      ExperimentConfig cfg = resolve(eval_flags);
      if (!eval_data.empty()) cfg.dataset_dir = eval_data;
      const auto rep = textgrpo::harness::cmd_eval(cfg, eval_checkpoint, eval_report_path);
      print_report(rep);
    } else if (ablate->parsed()) {
      ExperimentConfig cfg = resolve(ablate_flags);
      if (!ablate_data_dir.empty()) cfg.dataset_dir = ablate_data_dir;
      if (!ablate_rewards.empty()) {
        cfg.ablate_rewards.clear();
        for (const std::string& name : ablate_rewards) {
          cfg.ablate_rewards.push_back(textgrpo::metrics::parse_metric(name));
        }
      }
      if (ablate_seeds > 0) cfg.ablate_seed_count = ablate_seeds;
      const auto result = textgrpo::harness::cmd_ablate(cfg);
      std::printf("ablation table: %s (diagonal row-max %d/%zu)\n", result.csv_path.c_str(),
                  result.diagonal_row_max_count, result.rewards.size());
    } else if (compare->parsed()) {
      ExperimentConfig cfg = resolve(compare_flags);
      if (!compare_data_dir.empty()) cfg.dataset_dir = compare_data_dir;
      if (!compare_arms.empty()) {
        cfg.compare_arms.clear();
        for (const std::string& name : compare_arms) {
          cfg.compare_arms.push_back(textgrpo::harness::parse_arm(name));
        }
      }
      const auto result = textgrpo::harness::cmd_compare(cfg);
      std::printf("curves: %s (leader: %s)\n", result.csv_path.c_str(), result.leader.c_str());
    } else if (report->parsed()) {
      const std::string text = textgrpo::harness::cmd_report(report_dir);
      std::fputs(text.c_str(), stdout);
    }
  } catch (const textgrpo::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
