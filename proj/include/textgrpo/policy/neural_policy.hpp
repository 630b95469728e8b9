// SPDX-License-Identifier: Apache-2.0
#pragma once

// Small Elman recurrent policy with hand-implemented backpropagation through
// time. Sized for single-core CPU training: vocabulary <= a few hundred,
// hidden state ~64, parameter count well under 1e5.
//
//   x_t      = Emb[token_t]
//   h_t      = tanh(Wx x_t + Wh h_{t-1} + bh)
//   logits_t = Wo h_t + bo
//
// The flat parameter vector is [Emb | Wx | Wh | bh | Wo | bo], row-major.

#include <memory>
#include <vector>

#include "textgrpo/policy/policy.hpp"
#include "textgrpo/rng.hpp"

namespace textgrpo::policy {

class NeuralPolicy : public Policy {
 public:
  NeuralPolicy(const Vocabulary& vocab, int hidden_dim, int embed_dim);

  // Uniform init in [-scale, scale], seeded.
  static NeuralPolicy random_init(const Vocabulary& vocab, int hidden_dim,
                                  int embed_dim, double scale, Rng& rng);

  int hidden_dim() const { return hidden_; }
  int embed_dim() const { return embed_; }

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

  // Parameter block offsets into the flat vector.
  struct Layout {
    size_t emb, wx, wh, bh, wo, bo, total;
  };
  const Layout& layout() const { return layout_; }

 private:
  friend class NeuralDecoder;

  const double* emb() const { return params_.data() + layout_.emb; }
  const double* wx() const { return params_.data() + layout_.wx; }
  const double* wh() const { return params_.data() + layout_.wh; }
  const double* bh() const { return params_.data() + layout_.bh; }
  const double* wo() const { return params_.data() + layout_.wo; }
  const double* bo() const { return params_.data() + layout_.bo; }

  void step_hidden(TokenId token, const std::vector<double>& h_prev,
                   std::vector<double>& h_out) const;
  void output_logits(const std::vector<double>& h,
                     std::vector<double>& logits) const;

  Vocabulary vocab_;
  int hidden_;
  int embed_;
  Layout layout_;
  std::vector<double> params_;
};

}  // namespace textgrpo::policy
