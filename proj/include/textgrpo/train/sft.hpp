// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "textgrpo/policy/policy.hpp"
#include "textgrpo/train/config.hpp"
#include "textgrpo/train/example.hpp"
#include "textgrpo/train/grpo.hpp"

namespace textgrpo::train {

// Teacher-forced mean negative log-likelihood of `target` given `prompt`,
//   loss = (1/n) sum_t -log pi_theta(target_t | prompt, target_<t).
// Accumulates the gradient into grad via per-token weights -1/n. The target is
// taken verbatim; callers that want the policy to learn to stop append EOS
// before calling.
double sft_loss(const policy::Policy& pol, const TokenSequence& prompt,
                const TokenSequence& target, std::span<double> grad);

struct SftResult {
  int64_t steps = 0;
  double final_loss = 0.0;
};

// Mini-batch NLL descent with the same optimizer, warm-up schedule, logging
// shape and hooks as grpo_train. Targets are the references with EOS appended.
// Throws Error(guard) on a non-finite loss.
SftResult sft_train(policy::Policy& pol, std::span<const TrainExample> data,
                    const SftConfig& cfg, const TrainHooks& hooks = {});

}  // namespace textgrpo::train
