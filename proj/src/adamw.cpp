// SPDX-License-Identifier: Apache-2.0

#include "textgrpo/policy/adamw.hpp"

#include <cmath>

#include "textgrpo/error.hpp"

namespace textgrpo::policy {

AdamW::AdamW(size_t param_count, const AdamWConfig& config)
    : config_(config), m_(param_count, 0.0), v_(param_count, 0.0) {}

void AdamW::step(std::span<double> theta, std::span<const double> grad,
                 double lr_scale) {
  if (theta.size() != m_.size() || grad.size() != m_.size()) {
    throw Error(ErrorCategory::config, "optimizer/parameter shape mismatch");
  }
  for (double g : grad) {
    if (!std::isfinite(g)) {
      throw Error(ErrorCategory::guard,
                  "non-finite gradient entry, training aborted");
    }
  }
  ++step_count_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(step_count_));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(step_count_));
  const double lr = config_.lr * lr_scale;
  for (size_t i = 0; i < theta.size(); ++i) {
    m_[i] = b1 * m_[i] + (1.0 - b1) * grad[i];
    v_[i] = b2 * v_[i] + (1.0 - b2) * grad[i] * grad[i];
    const double m_hat = m_[i] / bc1;
    const double v_hat = v_[i] / bc2;
    theta[i] -= lr * (m_hat / (std::sqrt(v_hat) + config_.eps) +
                      config_.weight_decay * theta[i]);
  }
}

void AdamW::restore(uint64_t step_count, std::vector<double> m,
                    std::vector<double> v) {
  if (m.size() != m_.size() || v.size() != v_.size()) {
    throw Error(ErrorCategory::mismatch, "optimizer state size mismatch");
  }
  step_count_ = step_count;
  m_ = std::move(m);
  v_ = std::move(v);
}

}  // namespace textgrpo::policy
