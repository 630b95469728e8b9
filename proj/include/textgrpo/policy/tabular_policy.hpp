// SPDX-License-Identifier: Apache-2.0
#pragma once

// Fully materialized logits table conditioned on the last k tokens of the
// prefix (k in {0,1,2}; shorter prefixes are left-padded with PAD). Every
// conditional is an exact softmax over one table row, which makes this
// policy cheap to enumerate exhaustively in oracle tests.

#include <memory>
#include <vector>

#include "textgrpo/policy/policy.hpp"
#include "textgrpo/rng.hpp"

namespace textgrpo::policy {

class TabularPolicy : public Policy {
 public:
  TabularPolicy(const Vocabulary& vocab, int context_order);

  static TabularPolicy random_init(const Vocabulary& vocab, int context_order,
                                   double scale, Rng& rng);

  int context_order() const { return order_; }
  size_t row_count() const { return rows_; }

  // Index of the table row conditioning on the given full prefix
  // (BOS + prompt + generated tokens).
  size_t row_of_prefix(const TokenSequence& prefix) const;

  std::span<double> row(size_t r) {
    return {params_.data() + r * vocab_.size(),
            static_cast<size_t>(vocab_.size())};
  }
  std::span<const double> row(size_t r) const {
    return {params_.data() + r * vocab_.size(),
            static_cast<size_t>(vocab_.size())};
  }

  const Vocabulary& vocab() const override { return vocab_; }
  std::span<double> params() override { return params_; }
  std::span<const double> params() const override { return params_; }
  std::string descriptor() const override;
  std::unique_ptr<Policy> clone() const override;
  std::unique_ptr<PolicyDecoder> make_decoder() const override;
  void add_grad_weighted_logprob(const TokenSequence& prompt,
                                 const TokenSequence& completion,
                                 std::span<const double> weights,
                                 std::span<double> grad) const override;

 private:
  Vocabulary vocab_;
  int order_;
  size_t rows_;
  std::vector<double> params_;  // rows_ x vocab size, row-major logits
};

}  // namespace textgrpo::policy
