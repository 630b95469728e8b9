// SPDX-License-Identifier: Apache-2.0
#include "textgrpo/train/config.hpp"

#include <string>

#include "textgrpo/error.hpp"

namespace textgrpo::train {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCategory::config, "invalid config: " + what);
}

}  // namespace

void TrainConfig::validate() const {
  require(group_size >= 2, "group_size must be >= 2, got " + std::to_string(group_size));
  require(kl_beta >= 0.0, "kl_beta must be >= 0");
  require(clip_eps > 0.0, "clip_eps must be > 0");
  require(lr > 0.0, "lr must be > 0");
  require(epochs >= 0, "epochs must be >= 0");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(warmup_frac >= 0.0 && warmup_frac <= 1.0, "warmup_frac must be in [0,1]");
  require(weight_decay >= 0.0, "weight_decay must be >= 0");
  require(train_temperature > 0.0, "train_temperature must be > 0");
  require(eval_temperature > 0.0, "eval_temperature must be > 0");
  require(eval_top_p > 0.0 && eval_top_p <= 1.0, "eval_top_p must be in (0,1]");
  require(max_prompt_len >= 1, "max_prompt_len must be >= 1");
  require(max_completion_len >= 1, "max_completion_len must be >= 1");
  require(adv_std_floor >= 0.0, "adv_std_floor must be >= 0");
  require(kl_ceiling > 0.0, "kl_ceiling must be > 0");
}

void SftConfig::validate() const {
  require(lr > 0.0, "lr must be > 0");
  require(epochs >= 0, "epochs must be >= 0");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(warmup_frac >= 0.0 && warmup_frac <= 1.0, "warmup_frac must be in [0,1]");
  require(weight_decay >= 0.0, "weight_decay must be >= 0");
}

}  // namespace textgrpo::train
