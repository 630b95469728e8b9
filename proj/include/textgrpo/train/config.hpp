// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "textgrpo/metrics/text_metrics.hpp"

namespace textgrpo::train {

// Hyperparameters of a GRPO run. Defaults G=8, beta=0.02, temperature 1 for
// training, top-p 0.9 / temperature 0.9 for evaluation, prompt cap 256,
// completion cap 200.
struct TrainConfig {
  int group_size = 8;            // G
  double kl_beta = 0.02;         // beta
  double clip_eps = 0.2;         // epsilon
  double lr = 3e-3;
  int epochs = 4;
  int batch_size = 8;
  double warmup_frac = 0.05;     // linear warm-up fraction of total steps
  double weight_decay = 0.0;
  double train_temperature = 1.0;
  double eval_temperature = 0.9;
  double eval_top_p = 0.9;
  int max_prompt_len = 256;
  int max_completion_len = 200;
  bool mixed_policy = false;     // inject the reference as an off-policy member
  metrics::MetricId reward = metrics::MetricId::bleu;
  uint64_t seed = 0;
  double adv_std_floor = 1e-8;   // degenerate groups get all-zero advantages
  double kl_ceiling = 8.0;       // divergence guard on per-step mean token KL

  void validate() const;  // throws Error(config)
};

struct SftConfig {
  double lr = 2e-3;
  int epochs = 4;
  int batch_size = 16;
  double warmup_frac = 0.05;
  double weight_decay = 0.0;
  uint64_t seed = 0;

  void validate() const;
};

}  // namespace textgrpo::train
