// SPDX-License-Identifier: Apache-2.0
#pragma once

// AdamW: adaptive moment estimation with decoupled weight decay and bias
// correction. Training aborts (Error, guard category) on non-finite
// gradient entries.

#include <cstdint>
#include <span>
#include <vector>

namespace textgrpo::policy {

struct AdamWConfig {
  double lr = 1e-3;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class AdamW {
 public:
  AdamW(size_t param_count, const AdamWConfig& config);

  // theta -= lr_scale * lr * ( m_hat / (sqrt(v_hat) + eps) + wd * theta )
  void step(std::span<double> theta, std::span<const double> grad,
            double lr_scale = 1.0);

  uint64_t step_count() const { return step_count_; }
  const AdamWConfig& config() const { return config_; }
  std::span<const double> first_moment() const { return m_; }
  std::span<const double> second_moment() const { return v_; }

  // Checkpoint restore.
  void restore(uint64_t step_count, std::vector<double> m,
               std::vector<double> v);

 private:
  AdamWConfig config_;
  std::vector<double> m_;
  std::vector<double> v_;
  uint64_t step_count_ = 0;
};

}  // namespace textgrpo::policy
