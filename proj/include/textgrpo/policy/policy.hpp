// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "textgrpo/rng.hpp"
#include "textgrpo/vocab.hpp"

namespace textgrpo::policy {

// Incremental decoding state for one sequence. reset() consumes BOS plus the
// prompt; push() consumes one generated token; next_logits() exposes the
// conditional logits for the upcoming position.
class PolicyDecoder {
 public:
  virtual ~PolicyDecoder() = default;
  virtual void reset(const TokenSequence& prompt) = 0;
  virtual void next_logits(std::vector<double>& out) const = 0;
  virtual void push(TokenId token) = 0;
};

// Autoregressive policy over a vocabulary with a flat parameter vector.
// Frozen clones are deep copies and therefore immutable snapshots.
class Policy {
 public:
  virtual ~Policy() = default;

  virtual const Vocabulary& vocab() const = 0;
  virtual std::span<double> params() = 0;
  virtual std::span<const double> params() const = 0;
  virtual std::string descriptor() const = 0;
  virtual std::unique_ptr<Policy> clone() const = 0;
  virtual std::unique_ptr<PolicyDecoder> make_decoder() const = 0;

  // grad += d/dtheta sum_t weights[t] * log pi(completion[t] | prompt, <t).
  // Deterministic accumulation order.
  virtual void add_grad_weighted_logprob(const TokenSequence& prompt,
                                         const TokenSequence& completion,
                                         std::span<const double> weights,
                                         std::span<double> grad) const = 0;

  size_t param_count() const { return params().size(); }
};

struct SamplingParams {
  double temperature = 1.0;
  double top_p = 1.0;
  int max_len = 200;
};

struct SampledCompletion {
  TokenSequence tokens;           // ends with EOS unless max_len was hit
  std::vector<double> logprobs;   // the policy's own conditionals, one per token
};

// Draw `count` completions. Temperature divides the logits and top_p keeps
// the smallest nucleus of probability mass >= top_p before drawing; the
// recorded logprobs are always the untempered policy conditionals of the
// chosen tokens, which is what pi_old must be when ratios are formed later.
std::vector<SampledCompletion> sample(const Policy& policy,
                                      const TokenSequence& prompt, int count,
                                      const SamplingParams& params, Rng& rng);

// Per-token log pi(completion[t] | prompt, completion[<t]). Completion must
// be nonempty and all ids in range.
std::vector<double> logprob(const Policy& policy, const TokenSequence& prompt,
                            const TokenSequence& completion);

// Convenience wrapper allocating a fresh gradient vector.
std::vector<double> grad_weighted_logprob(const Policy& policy,
                                          const TokenSequence& prompt,
                                          const TokenSequence& completion,
                                          std::span<const double> weights);

std::unique_ptr<Policy> clone_frozen(const Policy& policy);

namespace detail {
// log softmax(logits)[index] with max-subtraction; also usable to fill a
// whole row.
double log_softmax_at(std::span<const double> logits, size_t index);
void log_softmax(std::span<const double> logits, std::span<double> out);
void softmax(std::span<const double> logits, std::span<double> out);
}  // namespace detail

}  // namespace textgrpo::policy
