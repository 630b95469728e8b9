// SPDX-License-Identifier: Apache-2.0
#include "textgrpo/train/grpo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "textgrpo/error.hpp"
#include "textgrpo/kernels/kernels.hpp"
#include "textgrpo/metrics/text_metrics.hpp"
#include "textgrpo/policy/adamw.hpp"

namespace textgrpo::train {

namespace {

double mean_of(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / double(xs.size());
}

}  // namespace

std::vector<double> compute_advantages(std::span<const double> rewards, double std_floor) {
  if (rewards.size() < 2) {
    throw Error(ErrorCategory::config,
                "advantages need at least two rewards, got " + std::to_string(rewards.size()));
  }
  const double mean = mean_of(rewards);
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= double(rewards.size());
  const double sd = std::sqrt(var);
  std::vector<double> adv(rewards.size(), 0.0);
  if (sd <= std_floor) return adv;  // degenerate group carries no signal
  for (size_t i = 0; i < rewards.size(); ++i) adv[i] = (rewards[i] - mean) / sd;
  return adv;
}

double token_objective(double ratio, double advantage, double clip_eps, bool clip_enabled) {
  const double unclipped = ratio * advantage;
  if (!clip_enabled) return unclipped;
  const double clipped = std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps) * advantage;
  return std::min(unclipped, clipped);
}

double kl_token(double logp_ref, double logp_theta) {
  const double d = logp_ref - logp_theta;  // log r
  return std::expm1(d) - d;                // r - log r - 1
}

double dapo_loss(const policy::Policy& pol, const policy::Policy& ref_pol,
                 const CompletionGroup& group, std::span<const double> advantages, double beta,
                 double clip_eps, std::span<double> grad, DapoDiagnostics* diag) {
  if (group.members.size() < 2) {
    throw Error(ErrorCategory::config, "group must have at least two members");
  }
  if (advantages.size() != group.members.size()) {
    throw Error(ErrorCategory::config, "advantage count does not match group size");
  }
  if (grad.size() != pol.params().size()) {
    throw Error(ErrorCategory::config, "gradient buffer size does not match parameter count");
  }

  int64_t total_tokens = 0;
  for (const GroupMember& m : group.members) {
    if (m.tokens.empty()) throw Error(ErrorCategory::data, "group member with no tokens");
    if (m.old_logprobs.size() != m.tokens.size()) {
      throw Error(ErrorCategory::data, "member logprob count does not match token count");
    }
    total_tokens += int64_t(m.tokens.size());
  }
  const double inv = 1.0 / double(total_tokens);

  DapoDiagnostics local;
  DapoDiagnostics& d = diag ? *diag : local;
  d = DapoDiagnostics{};
  d.token_count = total_tokens;
  d.ratios.resize(group.members.size());
  d.weights.resize(group.members.size());
  d.clipped.resize(group.members.size());

  double loss = 0.0;
  std::vector<double> weights;
  for (size_t i = 0; i < group.members.size(); ++i) {
    const GroupMember& m = group.members[i];
    const double adv = advantages[i];
    const bool clip_enabled = !m.off_policy;
    const std::vector<double> lp_theta = policy::logprob(pol, group.prompt, m.tokens);
    const std::vector<double> lp_ref = policy::logprob(ref_pol, group.prompt, m.tokens);

    const size_t n = m.tokens.size();
    weights.assign(n, 0.0);
    d.ratios[i].resize(n);
    d.weights[i].resize(n);
    d.clipped[i].assign(n, false);
    if (!m.off_policy) d.on_policy_token_count += int64_t(n);

    for (size_t t = 0; t < n; ++t) {
      const double s = std::exp(lp_theta[t] - m.old_logprobs[t]);
      if (!std::isfinite(s)) {
        throw Error(ErrorCategory::guard, "non-finite importance ratio at member " +
                                              std::to_string(i) + " token " + std::to_string(t));
      }
      const double unclipped = s * adv;
      double obj = unclipped;
      double dobj_dlogp = s * adv;  // the ratio is exp(logp), so dl/dlogp = l' * s
      if (clip_enabled) {
        const double clipped = std::clamp(s, 1.0 - clip_eps, 1.0 + clip_eps) * adv;
        if (unclipped > clipped) {
          obj = clipped;
          dobj_dlogp = 0.0;  // the selected branch is constant in theta
          d.clipped[i][t] = true;
          ++d.clip_active_count;
        }
      }
      const double r = std::exp(lp_ref[t] - lp_theta[t]);
      const double kl = kl_token(lp_ref[t], lp_theta[t]);
      d.sum_kl += kl;

      loss += -inv * (obj - beta * kl);
      // d kl / d logp_theta = 1 - r
      weights[t] = -inv * (dobj_dlogp - beta * (1.0 - r));
      d.ratios[i][t] = s;
      d.weights[i][t] = weights[t];
    }
    pol.add_grad_weighted_logprob(group.prompt, m.tokens, weights, grad);
  }

  if (!std::isfinite(loss)) {
    throw Error(ErrorCategory::guard,
                "non-finite loss for group of " + std::to_string(group.members.size()) +
                    " members, prompt length " + std::to_string(group.prompt.size()));
  }
  return loss;
}

CompletionGroup build_group(const policy::Policy& sampler, const TrainExample& example,
                            const TrainConfig& cfg, Rng& rng, int64_t* truncated_refs) {
  CompletionGroup group;
  group.prompt = example.prompt;
  if (int(group.prompt.size()) > cfg.max_prompt_len) {
    group.prompt.resize(size_t(cfg.max_prompt_len));
  }

  policy::SamplingParams sp;
  sp.temperature = cfg.train_temperature;
  sp.top_p = 1.0;
  sp.max_len = cfg.max_completion_len;

  const int n_sampled = cfg.group_size - (cfg.mixed_policy ? 1 : 0);
  std::vector<policy::SampledCompletion> draws =
      policy::sample(sampler, group.prompt, n_sampled, sp, rng);

  group.members.reserve(size_t(cfg.group_size));
  for (policy::SampledCompletion& draw : draws) {
    GroupMember m;
    m.tokens = std::move(draw.tokens);
    m.old_logprobs = std::move(draw.logprobs);
    m.reward = metrics::reward(cfg.reward, strip_trailing_eos(m.tokens), example.reference);
    group.members.push_back(std::move(m));
  }

  if (cfg.mixed_policy) {
    GroupMember ref;
    ref.tokens = example.reference;
    ref.tokens.push_back(Vocabulary::kEos);
    if (int(ref.tokens.size()) > cfg.max_completion_len) {
      ref.tokens.resize(size_t(cfg.max_completion_len));
      if (truncated_refs) ++*truncated_refs;
    }
    ref.old_logprobs.assign(ref.tokens.size(), 0.0);  // behavior policy is the identity
    ref.reward = metrics::reward(cfg.reward, strip_trailing_eos(ref.tokens), example.reference);
    ref.off_policy = true;
    group.members.push_back(std::move(ref));
  }
  return group;
}

GrpoResult grpo_train(policy::Policy& pol, std::span<const TrainExample> data,
                      const TrainConfig& cfg, const TrainHooks& hooks) {
  cfg.validate();
  if (data.empty()) throw Error(ErrorCategory::data, "no training examples");

  const std::unique_ptr<policy::Policy> ref_pol = policy::clone_frozen(pol);
  policy::AdamWConfig opt_cfg;
  opt_cfg.lr = cfg.lr;
  opt_cfg.weight_decay = cfg.weight_decay;
  policy::AdamW opt(pol.params().size(), opt_cfg);

  const int64_t n = int64_t(data.size());
  const int64_t steps_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
  const int64_t total_steps = int64_t(cfg.epochs) * steps_per_epoch;
  const int64_t warmup_steps =
      int64_t(std::ceil(cfg.warmup_frac * double(total_steps)));

  Rng rng(cfg.seed);
  std::vector<size_t> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), size_t(0));

  std::vector<double> grad(pol.params().size());
  GrpoResult result;
  const auto start = std::chrono::steady_clock::now();

  int64_t step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (size_t i = order.size(); i > 1; --i) {  // Fisher-Yates with the run rng
      std::swap(order[i - 1], order[size_t(rng.below(i))]);
    }
    for (int64_t b = 0; b < steps_per_epoch; ++b) {
      const size_t lo = size_t(b) * size_t(cfg.batch_size);
      const size_t hi = std::min(order.size(), lo + size_t(cfg.batch_size));
      const double inv_batch = 1.0 / double(hi - lo);

      const std::unique_ptr<policy::Policy> snapshot = policy::clone_frozen(pol);
      std::fill(grad.begin(), grad.end(), 0.0);

      double loss_sum = 0.0;
      double reward_sum = 0.0;
      int64_t reward_count = 0;
      double kl_sum = 0.0;
      int64_t token_count = 0;
      int64_t clip_count = 0;
      int64_t on_policy_tokens = 0;
      int64_t truncated = 0;

      for (size_t gi = lo; gi < hi; ++gi) {
        const CompletionGroup group =
            build_group(*snapshot, data[order[gi]], cfg, rng, &truncated);
        std::vector<double> rewards;
        rewards.reserve(group.members.size());
        for (const GroupMember& m : group.members) {
          rewards.push_back(m.reward);
          if (!m.off_policy) {
            reward_sum += m.reward;
            ++reward_count;
          }
        }
        const std::vector<double> adv = compute_advantages(rewards, cfg.adv_std_floor);
        DapoDiagnostics diag;
        loss_sum += dapo_loss(pol, *ref_pol, group, adv, cfg.kl_beta, cfg.clip_eps, grad, &diag);
        kl_sum += diag.sum_kl;
        token_count += diag.token_count;
        clip_count += diag.clip_active_count;
        on_policy_tokens += diag.on_policy_token_count;
      }
      kernels::scale(inv_batch, grad.data(), grad.size());

      ++step;
      StepRecord rec;
      rec.step = step;
      rec.loss = loss_sum * inv_batch;
      rec.mean_reward = reward_count ? reward_sum / double(reward_count) : 0.0;
      rec.mean_kl = token_count ? kl_sum / double(token_count) : 0.0;
      rec.clip_fraction =
          on_policy_tokens ? double(clip_count) / double(on_policy_tokens) : 0.0;
      rec.truncated_refs = truncated;
      rec.wall_time_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (hooks.on_step) hooks.on_step(rec);

      if (*rec.mean_kl > cfg.kl_ceiling) {
        throw Error(ErrorCategory::guard,
                    "mean token KL " + std::to_string(*rec.mean_kl) + " exceeds ceiling " +
                        std::to_string(cfg.kl_ceiling) + " at step " + std::to_string(step));
      }

      const double lr_scale =
          warmup_steps > 0 ? std::min(1.0, double(step) / double(warmup_steps)) : 1.0;
      opt.step(pol.params(), grad, lr_scale);

      result.steps = step;
      result.final_loss = rec.loss;
      result.final_mean_reward = *rec.mean_reward;
      result.final_mean_kl = *rec.mean_kl;
    }
    if (hooks.on_epoch_end) hooks.on_epoch_end(epoch, pol);
  }
  return result;
}

}  // namespace textgrpo::train
