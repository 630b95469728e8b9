// SPDX-License-Identifier: Apache-2.0
#include "textgrpo/train/sft.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <numeric>
#include <string>

#include "textgrpo/error.hpp"
#include "textgrpo/kernels/kernels.hpp"
#include "textgrpo/policy/adamw.hpp"

namespace textgrpo::train {

double sft_loss(const policy::Policy& pol, const TokenSequence& prompt,
                const TokenSequence& target, std::span<double> grad) {
  if (target.empty()) throw Error(ErrorCategory::data, "sft target must be nonempty");
  if (grad.size() != pol.params().size()) {
    throw Error(ErrorCategory::config, "gradient buffer size does not match parameter count");
  }
  const std::vector<double> lp = policy::logprob(pol, prompt, target);
  const double inv = 1.0 / double(target.size());
  double loss = 0.0;
  for (double v : lp) loss += -inv * v;
  const std::vector<double> weights(target.size(), -inv);
  pol.add_grad_weighted_logprob(prompt, target, weights, grad);
  return loss;
}

SftResult sft_train(policy::Policy& pol, std::span<const TrainExample> data,
                    const SftConfig& cfg, const TrainHooks& hooks) {
  cfg.validate();
  if (data.empty()) throw Error(ErrorCategory::data, "no training examples");

  policy::AdamWConfig opt_cfg;
  opt_cfg.lr = cfg.lr;
  opt_cfg.weight_decay = cfg.weight_decay;
  policy::AdamW opt(pol.params().size(), opt_cfg);

  const int64_t n = int64_t(data.size());
  const int64_t steps_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
  const int64_t total_steps = int64_t(cfg.epochs) * steps_per_epoch;
  const int64_t warmup_steps = int64_t(std::ceil(cfg.warmup_frac * double(total_steps)));

  Rng rng(cfg.seed);
  std::vector<size_t> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), size_t(0));

  std::vector<double> grad(pol.params().size());
  SftResult result;
  const auto start = std::chrono::steady_clock::now();

  int64_t step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[size_t(rng.below(i))]);
    }
    for (int64_t b = 0; b < steps_per_epoch; ++b) {
      const size_t lo = size_t(b) * size_t(cfg.batch_size);
      const size_t hi = std::min(order.size(), lo + size_t(cfg.batch_size));
      const double inv_batch = 1.0 / double(hi - lo);

      std::fill(grad.begin(), grad.end(), 0.0);
      double loss_sum = 0.0;
      for (size_t gi = lo; gi < hi; ++gi) {
        const TrainExample& ex = data[order[gi]];
        TokenSequence target = ex.reference;
        target.push_back(Vocabulary::kEos);
        loss_sum += sft_loss(pol, ex.prompt, target, grad);
      }
      kernels::scale(inv_batch, grad.data(), grad.size());

      ++step;
      StepRecord rec;
      rec.step = step;
      rec.loss = loss_sum * inv_batch;
      rec.wall_time_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (hooks.on_step) hooks.on_step(rec);

      if (!std::isfinite(rec.loss)) {
        throw Error(ErrorCategory::guard,
                    "non-finite sft loss at step " + std::to_string(step));
      }

      const double lr_scale =
          warmup_steps > 0 ? std::min(1.0, double(step) / double(warmup_steps)) : 1.0;
      opt.step(pol.params(), grad, lr_scale);

      result.steps = step;
      result.final_loss = rec.loss;
    }
    if (hooks.on_epoch_end) hooks.on_epoch_end(epoch, pol);
  }
  return result;
}

}  // namespace textgrpo::train
