// SPDX-License-Identifier: Apache-2.0
#pragma once

// Sentence-level text-similarity metrics over token id sequences. Each metric
// maps (candidate, reference) to a score in [0,1] and doubles as the RL
// reward signal.
//
// Conventions shared by all metrics:
//  - empty reference is an error (invalid dataset row)
//  - empty candidate scores 0 (a policy may emit an immediate end token, the
//    reward must still be defined)
//  - pure functions of their inputs, reentrant, bitwise deterministic

#include <cstdint>
#include <string>
#include <unordered_map>

#include "textgrpo/vocab.hpp"

namespace textgrpo::metrics {

enum class MetricId { bleu, rouge1, rouge2, rougel, meteor };

constexpr MetricId kAllMetrics[] = {MetricId::bleu, MetricId::rouge1,
                                    MetricId::rouge2, MetricId::rougel,
                                    MetricId::meteor};
constexpr size_t kMetricCount = sizeof(kAllMetrics) / sizeof(kAllMetrics[0]);

const char* metric_name(MetricId id);
MetricId parse_metric(const std::string& name);  // throws Error(config)

struct MetricScore {
  double value = 0.0;  // in [0,1]
  MetricId metric_id = MetricId::bleu;
};

// Multiset of n-grams. Keys pack up to 8 token ids (16 bits each) so lookups
// stay collision-free for the vocabulary sizes this project uses.
class NGramCounts {
 public:
  NGramCounts(const TokenSequence& tokens, int order);

  int order() const { return order_; }
  int total() const { return total_; }
  const std::unordered_map<uint64_t, int>& counts() const { return counts_; }

  // Sum over n-grams of min(count here, count in other).
  int clipped_overlap(const NGramCounts& other) const;

 private:
  int order_;
  int total_;
  std::unordered_map<uint64_t, int> counts_;
};

// Sentence BLEU with uniform 1/max_n weights and brevity penalty
// BP = 1 if c > r else exp(1 - r/c). Modified (clipped) n-gram precisions;
// for n > 1 a precision with zero matches is smoothed to
// (matches+1)/(total+1), the unigram precision is left unsmoothed so fully
// disjoint pairs score exactly 0.
MetricScore bleu(const TokenSequence& candidate, const TokenSequence& reference,
                 int max_n = 4);

// F1 of clipped n-gram overlap, n in {1, 2}.
MetricScore rouge_n(const TokenSequence& candidate,
                    const TokenSequence& reference, int n);

// F1 over the longest common subsequence.
MetricScore rouge_l(const TokenSequence& candidate,
                    const TokenSequence& reference);

// Exact-match METEOR: greedy left-to-right unigram alignment that prefers
// continuing the current chunk, F-mean with alpha = 0.9, fragmentation
// penalty 0.5 * (chunks/matches)^3. No stemming or synonym stages.
MetricScore meteor_lite(const TokenSequence& candidate,
                        const TokenSequence& reference);

// Uniform dispatch over the metrics above.
double reward(MetricId id, const TokenSequence& candidate,
              const TokenSequence& reference);

}  // namespace textgrpo::metrics
