// SPDX-License-Identifier: Apache-2.0

#include "textgrpo/policy/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "textgrpo/error.hpp"

namespace textgrpo::policy {

namespace detail {

double log_softmax_at(std::span<const double> logits, size_t index) {
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - mx);
  return logits[index] - mx - std::log(sum);
}

void log_softmax(std::span<const double> logits, std::span<double> out) {
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  double sum = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    out[i] = logits[i] - mx;
    sum += std::exp(out[i]);
  }
  const double lz = std::log(sum);
  for (size_t i = 0; i < out.size(); ++i) out[i] -= lz;
}

void softmax(std::span<const double> logits, std::span<double> out) {
  log_softmax(logits, out);
  for (double& v : out) v = std::exp(v);
}

}  // namespace detail

namespace {

void validate_tokens(const TokenSequence& seq, const Vocabulary& vocab,
                     const char* what) {
  for (TokenId t : seq) {
    if (t < 0 || t >= vocab.size()) {
      throw Error(ErrorCategory::data, std::string(what) +
                                           " token id out of vocabulary: " +
                                           std::to_string(t));
    }
  }
}

// Sample one token id from tempered logits with nucleus truncation. Returns
// the chosen id; `raw_logprobs` must already hold the untempered log
// softmax of the same logits.
TokenId draw_token(const std::vector<double>& logits, double temperature,
                   double top_p, Rng& rng) {
  const size_t v = logits.size();
  std::vector<double> probs(v);
  if (temperature == 1.0) {
    detail::softmax(logits, probs);
  } else {
    std::vector<double> tempered(v);
    for (size_t i = 0; i < v; ++i) tempered[i] = logits[i] / temperature;
    detail::softmax(tempered, probs);
  }

  if (top_p >= 1.0) {
    return static_cast<TokenId>(rng.categorical(probs));
  }

  // Nucleus: smallest probability-sorted prefix with mass >= top_p,
  // ties broken by token id so the cut is deterministic.
  std::vector<size_t> order(v);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&probs](size_t a, size_t b) {
    if (probs[a] != probs[b]) return probs[a] > probs[b];
    return a < b;
  });
  double mass = 0.0;
  size_t keep = 0;
  while (keep < v) {
    mass += probs[order[keep]];
    ++keep;
    if (mass >= top_p) break;
  }
  std::vector<double> nucleus(keep);
  for (size_t i = 0; i < keep; ++i) nucleus[i] = probs[order[i]];
  return static_cast<TokenId>(order[rng.categorical(nucleus)]);
}

}  // namespace

std::vector<SampledCompletion> sample(const Policy& policy,
                                      const TokenSequence& prompt, int count,
                                      const SamplingParams& params, Rng& rng) {
  if (count < 1) throw Error(ErrorCategory::config, "sample count must be >= 1");
  if (params.temperature <= 0.0) {
    throw Error(ErrorCategory::config, "temperature must be > 0");
  }
  if (params.top_p <= 0.0 || params.top_p > 1.0) {
    throw Error(ErrorCategory::config, "top_p must be in (0, 1]");
  }
  if (params.max_len < 1) {
    throw Error(ErrorCategory::config, "max_len must be >= 1");
  }
  validate_tokens(prompt, policy.vocab(), "prompt");

  std::vector<SampledCompletion> out;
  out.reserve(static_cast<size_t>(count));
  auto decoder = policy.make_decoder();
  std::vector<double> logits;
  for (int k = 0; k < count; ++k) {
    decoder->reset(prompt);
    SampledCompletion sc;
    for (int t = 0; t < params.max_len; ++t) {
      decoder->next_logits(logits);
      const TokenId tok =
          draw_token(logits, params.temperature, params.top_p, rng);
      sc.tokens.push_back(tok);
      sc.logprobs.push_back(
          detail::log_softmax_at(logits, static_cast<size_t>(tok)));
      if (tok == Vocabulary::kEos) break;
      decoder->push(tok);
    }
    out.push_back(std::move(sc));
  }
  return out;
}

std::vector<double> logprob(const Policy& policy, const TokenSequence& prompt,
                            const TokenSequence& completion) {
  if (completion.empty()) {
    throw Error(ErrorCategory::data, "logprob: completion must be nonempty");
  }
  validate_tokens(prompt, policy.vocab(), "prompt");
  validate_tokens(completion, policy.vocab(), "completion");

  auto decoder = policy.make_decoder();
  decoder->reset(prompt);
  std::vector<double> out;
  out.reserve(completion.size());
  std::vector<double> logits;
  for (size_t t = 0; t < completion.size(); ++t) {
    decoder->next_logits(logits);
    out.push_back(detail::log_softmax_at(
        logits, static_cast<size_t>(completion[t])));
    if (t + 1 < completion.size()) decoder->push(completion[t]);
  }
  return out;
}

std::vector<double> grad_weighted_logprob(const Policy& policy,
                                          const TokenSequence& prompt,
                                          const TokenSequence& completion,
                                          std::span<const double> weights) {
  if (weights.size() != completion.size()) {
    throw Error(ErrorCategory::data,
                "grad_weighted_logprob: weights length must equal completion "
                "length");
  }
  validate_tokens(prompt, policy.vocab(), "prompt");
  validate_tokens(completion, policy.vocab(), "completion");
  std::vector<double> grad(policy.param_count(), 0.0);
  policy.add_grad_weighted_logprob(prompt, completion, weights, grad);
  return grad;
}

std::unique_ptr<Policy> clone_frozen(const Policy& policy) {
  return policy.clone();
}

}  // namespace textgrpo::policy
