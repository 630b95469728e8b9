// SPDX-License-Identifier: Apache-2.0

#include "textgrpo/policy/tabular_policy.hpp"

#include <cmath>

#include "textgrpo/error.hpp"

namespace textgrpo::policy {

namespace {

size_t pow_size(size_t base, int exp) {
  size_t r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

class TabularDecoder : public PolicyDecoder {
 public:
  explicit TabularDecoder(const TabularPolicy& p) : policy_(p) {}

  void reset(const TokenSequence& prompt) override {
    prefix_.clear();
    prefix_.push_back(Vocabulary::kBos);
    prefix_.insert(prefix_.end(), prompt.begin(), prompt.end());
  }

  void next_logits(std::vector<double>& out) const override {
    auto row = policy_.row(policy_.row_of_prefix(prefix_));
    out.assign(row.begin(), row.end());
  }

  void push(TokenId token) override { prefix_.push_back(token); }

 private:
  const TabularPolicy& policy_;
  TokenSequence prefix_;
};

}  // namespace

TabularPolicy::TabularPolicy(const Vocabulary& vocab, int context_order)
    : vocab_(vocab), order_(context_order) {
  if (order_ < 0 || order_ > 2) {
    throw Error(ErrorCategory::config, "tabular context order must be 0, 1 or 2");
  }
  rows_ = pow_size(static_cast<size_t>(vocab_.size()), order_);
  params_.assign(rows_ * static_cast<size_t>(vocab_.size()), 0.0);
}

TabularPolicy TabularPolicy::random_init(const Vocabulary& vocab,
                                         int context_order, double scale,
                                         Rng& rng) {
  TabularPolicy p(vocab, context_order);
  for (double& v : p.params_) v = rng.uniform(-scale, scale);
  return p;
}

size_t TabularPolicy::row_of_prefix(const TokenSequence& prefix) const {
  const size_t v = static_cast<size_t>(vocab_.size());
  size_t row = 0;
  for (int j = 0; j < order_; ++j) {
    // j-th most recent token; PAD when the prefix is too short
    const size_t idx = prefix.size() >= static_cast<size_t>(j) + 1
                           ? static_cast<size_t>(
                                 prefix[prefix.size() - 1 - static_cast<size_t>(j)])
                           : static_cast<size_t>(Vocabulary::kPad);
    row = row * v + idx;
  }
  return row;
}

std::string TabularPolicy::descriptor() const {
  return "tabular order=" + std::to_string(order_);
}

std::unique_ptr<Policy> TabularPolicy::clone() const {
  return std::make_unique<TabularPolicy>(*this);
}

std::unique_ptr<PolicyDecoder> TabularPolicy::make_decoder() const {
  return std::make_unique<TabularDecoder>(*this);
}

void TabularPolicy::add_grad_weighted_logprob(const TokenSequence& prompt,
                                              const TokenSequence& completion,
                                              std::span<const double> weights,
                                              std::span<double> grad) const {
  const size_t v = static_cast<size_t>(vocab_.size());
  TokenSequence prefix;
  prefix.reserve(1 + prompt.size() + completion.size());
  prefix.push_back(Vocabulary::kBos);
  prefix.insert(prefix.end(), prompt.begin(), prompt.end());

  std::vector<double> probs(v);
  for (size_t t = 0; t < completion.size(); ++t) {
    const size_t r = row_of_prefix(prefix);
    detail::softmax(row(r), probs);
    const double w = weights[t];
    double* g = grad.data() + r * v;
    for (size_t u = 0; u < v; ++u) g[u] -= w * probs[u];
    g[static_cast<size_t>(completion[t])] += w;
    prefix.push_back(completion[t]);
  }
}

}  // namespace textgrpo::policy
