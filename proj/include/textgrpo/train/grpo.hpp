// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "textgrpo/policy/policy.hpp"
#include "textgrpo/rng.hpp"
#include "textgrpo/train/config.hpp"
#include "textgrpo/train/example.hpp"
#include "textgrpo/train/train_log.hpp"

namespace textgrpo::train {

// One completion inside a group. tokens ends with EOS unless the length cap
// cut it off. old_logprobs holds the sampler's per-token conditionals; the
// injected reference member carries exact zeros there (its behavior policy
// assigns it probability one) and has clipping disabled.
struct GroupMember {
  TokenSequence tokens;
  std::vector<double> old_logprobs;
  double reward = 0.0;
  bool off_policy = false;
};

struct CompletionGroup {
  TokenSequence prompt;
  std::vector<GroupMember> members;
};

// Group-relative advantages: (r_i - mean) / std with the population standard
// deviation. A spread at or below std_floor yields all-zero advantages.
// Requires at least two rewards.
std::vector<double> compute_advantages(std::span<const double> rewards, double std_floor);

// Clipped surrogate for one token: min(s*adv, clamp(s, 1-eps, 1+eps)*adv),
// or plain s*adv when clipping is disabled.
double token_objective(double ratio, double advantage, double clip_eps, bool clip_enabled);

// k3 estimator of KL(pi_theta || pi_ref) at one token: r - log r - 1 with
// r = exp(logp_ref - logp_theta). Non-negative for every r > 0.
double kl_token(double logp_ref, double logp_theta);

// Per-token views of one dapo_loss evaluation, indexed [member][token].
struct DapoDiagnostics {
  std::vector<std::vector<double>> ratios;
  std::vector<std::vector<double>> weights;   // d loss / d logp_theta
  std::vector<std::vector<bool>> clipped;     // selected branch was the clip constant
  int64_t token_count = 0;                    // |G|: tokens over all members
  int64_t on_policy_token_count = 0;
  int64_t clip_active_count = 0;              // over on-policy tokens
  double sum_kl = 0.0;
  double mean_kl() const { return token_count ? sum_kl / double(token_count) : 0.0; }
  double clip_fraction() const {
    return on_policy_token_count ? double(clip_active_count) / double(on_policy_token_count)
                                 : 0.0;
  }
};

// Token-normalized DAPO loss of one group,
//   L = -(1/|G|) sum_i sum_t (l_{i,t} - beta * kl_{i,t}),
// where |G| counts tokens over all members. Accumulates d L / d theta into
// grad (caller zeroes it). Throws Error(guard) when the loss or any ratio
// goes non-finite, naming the offending member.
double dapo_loss(const policy::Policy& pol, const policy::Policy& ref_pol,
                 const CompletionGroup& group, std::span<const double> advantages, double beta,
                 double clip_eps, std::span<double> grad, DapoDiagnostics* diag = nullptr);

// Samples a group for one example from `sampler` (the per-step policy
// snapshot) and scores every member with cfg.reward against the reference.
// Mixed mode replaces the last slot with the reference text itself, EOS
// appended, truncated to cfg.max_completion_len; *truncated_refs counts caps
// hit. Rewards strip a trailing EOS before scoring.
CompletionGroup build_group(const policy::Policy& sampler, const TrainExample& example,
                            const TrainConfig& cfg, Rng& rng, int64_t* truncated_refs = nullptr);

struct TrainHooks {
  std::function<void(const StepRecord&)> on_step;
  std::function<void(int epoch, const policy::Policy&)> on_epoch_end;
};

struct GrpoResult {
  int64_t steps = 0;
  double final_loss = 0.0;
  double final_mean_reward = 0.0;
  double final_mean_kl = 0.0;
};

// Full GRPO loop: per step, snapshot the policy, sample one group per example
// in the batch, average the DAPO losses, and take one AdamW step with linear
// warm-up then a constant rate. The reference policy is frozen at entry.
// Throws Error(guard) if a step's mean token KL exceeds cfg.kl_ceiling (the
// step record is emitted first).
GrpoResult grpo_train(policy::Policy& pol, std::span<const TrainExample> data,
                      const TrainConfig& cfg, const TrainHooks& hooks = {});

}  // namespace textgrpo::train
