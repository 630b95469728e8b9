// SPDX-License-Identifier: Apache-2.0

#include "textgrpo/policy/neural_policy.hpp"

#include <cmath>

#include "textgrpo/error.hpp"
#include "textgrpo/kernels/kernels.hpp"

namespace textgrpo::policy {

namespace ker = textgrpo::kernels;

class NeuralDecoder : public PolicyDecoder {
 public:
  explicit NeuralDecoder(const NeuralPolicy& p)
      : policy_(p),
        h_(static_cast<size_t>(p.hidden_dim()), 0.0),
        scratch_(static_cast<size_t>(p.hidden_dim()), 0.0) {}

  void reset(const TokenSequence& prompt) override {
    std::fill(h_.begin(), h_.end(), 0.0);
    push(Vocabulary::kBos);
    for (TokenId t : prompt) push(t);
  }

  void next_logits(std::vector<double>& out) const override {
    policy_.output_logits(h_, out);
  }

  void push(TokenId token) override {
    policy_.step_hidden(token, h_, scratch_);
    std::swap(h_, scratch_);
  }

 private:
  const NeuralPolicy& policy_;
  std::vector<double> h_;
  std::vector<double> scratch_;
};

NeuralPolicy::NeuralPolicy(const Vocabulary& vocab, int hidden_dim,
                           int embed_dim)
    : vocab_(vocab), hidden_(hidden_dim), embed_(embed_dim) {
  if (hidden_ < 1 || embed_ < 1) {
    throw Error(ErrorCategory::config, "hidden/embed dims must be >= 1");
  }
  const size_t v = static_cast<size_t>(vocab_.size());
  const size_t h = static_cast<size_t>(hidden_);
  const size_t d = static_cast<size_t>(embed_);
  layout_.emb = 0;
  layout_.wx = layout_.emb + v * d;
  layout_.wh = layout_.wx + h * d;
  layout_.bh = layout_.wh + h * h;
  layout_.wo = layout_.bh + h;
  layout_.bo = layout_.wo + v * h;
  layout_.total = layout_.bo + v;
  params_.assign(layout_.total, 0.0);
}

NeuralPolicy NeuralPolicy::random_init(const Vocabulary& vocab, int hidden_dim,
                                       int embed_dim, double scale, Rng& rng) {
  NeuralPolicy p(vocab, hidden_dim, embed_dim);
  for (double& v : p.params_) v = rng.uniform(-scale, scale);
  return p;
}

std::string NeuralPolicy::descriptor() const {
  return "rnn hidden=" + std::to_string(hidden_) +
         " embed=" + std::to_string(embed_);
}

std::unique_ptr<Policy> NeuralPolicy::clone() const {
  return std::make_unique<NeuralPolicy>(*this);
}

std::unique_ptr<PolicyDecoder> NeuralPolicy::make_decoder() const {
  return std::make_unique<NeuralDecoder>(*this);
}

void NeuralPolicy::step_hidden(TokenId token, const std::vector<double>& h_prev,
                               std::vector<double>& h_out) const {
  const size_t h = static_cast<size_t>(hidden_);
  const size_t d = static_cast<size_t>(embed_);
  const double* x = emb() + static_cast<size_t>(token) * d;
  h_out.resize(h);
  ker::matvec(wx(), x, h_out.data(), h, d);
  ker::matvec_t_acc(wh(), h_prev.data(), h_out.data(), h, h);
  // Wh is stored row-major as (h x h); h_out += Wh^T h_prev applies the
  // transpose, so rows of Wh act as "incoming" weights per previous unit.
  ker::axpy(1.0, bh(), h_out.data(), h);
  for (double& v : h_out) v = std::tanh(v);
}

void NeuralPolicy::output_logits(const std::vector<double>& hstate,
                                 std::vector<double>& logits) const {
  const size_t v = static_cast<size_t>(vocab_.size());
  const size_t h = static_cast<size_t>(hidden_);
  logits.resize(v);
  ker::matvec(wo(), hstate.data(), logits.data(), v, h);
  ker::axpy(1.0, bo(), logits.data(), v);
}

void NeuralPolicy::add_grad_weighted_logprob(const TokenSequence& prompt,
                                             const TokenSequence& completion,
                                             std::span<const double> weights,
                                             std::span<double> grad) const {
  if (completion.empty()) return;
  const size_t v = static_cast<size_t>(vocab_.size());
  const size_t h = static_cast<size_t>(hidden_);
  const size_t d = static_cast<size_t>(embed_);
  const size_t m = prompt.size();
  const size_t n = completion.size();
  const size_t steps = 1 + m + (n - 1);  // BOS + prompt + all but last token

  // Inputs consumed per step.
  TokenSequence in;
  in.reserve(steps);
  in.push_back(Vocabulary::kBos);
  in.insert(in.end(), prompt.begin(), prompt.end());
  in.insert(in.end(), completion.begin(), completion.end() - 1);

  // Forward, keeping every hidden state.
  std::vector<std::vector<double>> hs(steps);
  {
    std::vector<double> h_prev(h, 0.0);
    for (size_t t = 0; t < steps; ++t) {
      step_hidden(in[t], h_prev, hs[t]);
      h_prev = hs[t];
    }
  }

  double* g_emb = grad.data() + layout_.emb;
  double* g_wx = grad.data() + layout_.wx;
  double* g_wh = grad.data() + layout_.wh;
  double* g_bh = grad.data() + layout_.bh;
  double* g_wo = grad.data() + layout_.wo;
  double* g_bo = grad.data() + layout_.bo;

  std::vector<double> dh(h, 0.0);
  std::vector<double> dh_prev(h, 0.0);
  std::vector<double> da(h, 0.0);
  std::vector<double> dlogits(v, 0.0);
  std::vector<double> logits(v), probs(v);

  const std::vector<double> h_zero(h, 0.0);
  for (size_t t = steps; t-- > 0;) {
    // Prediction heads sit on states m .. steps-1 (one per completion token).
    if (t >= m) {
      const size_t i = t - m;
      output_logits(hs[t], logits);
      detail::softmax(logits, probs);
      const double w = weights[i];
      for (size_t u = 0; u < v; ++u) dlogits[u] = -w * probs[u];
      dlogits[static_cast<size_t>(completion[i])] += w;
      ker::outer_acc(g_wo, dlogits.data(), hs[t].data(), v, h);
      ker::axpy(1.0, dlogits.data(), g_bo, v);
      ker::matvec_t_acc(wo(), dlogits.data(), dh.data(), v, h);
    }
    // Through tanh.
    for (size_t k = 0; k < h; ++k) da[k] = dh[k] * (1.0 - hs[t][k] * hs[t][k]);
    const double* x = emb() + static_cast<size_t>(in[t]) * d;
    ker::outer_acc(g_wx, da.data(), x, h, d);
    ker::axpy(1.0, da.data(), g_bh, h);
    ker::matvec_t_acc(wx(), da.data(),
                      g_emb + static_cast<size_t>(in[t]) * d, h, d);
    const std::vector<double>& h_before = t > 0 ? hs[t - 1] : h_zero;
    // Forward used Wh^T, so the backward pair swaps the roles: the
    // recurrent weight gradient is h_prev (x) da and dh_prev = Wh da.
    ker::outer_acc(g_wh, h_before.data(), da.data(), h, h);
    if (t > 0) {
      ker::matvec(wh(), da.data(), dh_prev.data(), h, h);
      std::swap(dh, dh_prev);
    }
  }
}

}  // namespace textgrpo::policy
