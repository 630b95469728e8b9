// SPDX-License-Identifier: Apache-2.0

#include "textgrpo/metrics/text_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "textgrpo/error.hpp"

namespace textgrpo::metrics {

namespace {

void require_reference(const TokenSequence& reference) {
  if (reference.empty()) {
    throw Error(ErrorCategory::data, "metric reference must be nonempty");
  }
}

double f1(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

}  // namespace

const char* metric_name(MetricId id) {
  switch (id) {
    case MetricId::bleu:
      return "bleu";
    case MetricId::rouge1:
      return "rouge1";
    case MetricId::rouge2:
      return "rouge2";
    case MetricId::rougel:
      return "rougel";
    case MetricId::meteor:
      return "meteor";
  }
  return "?";
}

MetricId parse_metric(const std::string& name) {
  for (MetricId id : kAllMetrics) {
    if (name == metric_name(id)) return id;
  }
  throw Error(ErrorCategory::config, "unknown metric: " + name);
}

NGramCounts::NGramCounts(const TokenSequence& tokens, int order)
    : order_(order), total_(0) {
  if (order < 1 || order > 8) {
    throw Error(ErrorCategory::config, "n-gram order must be in [1,8]");
  }
  const int n = static_cast<int>(tokens.size());
  for (int i = 0; i + order <= n; ++i) {
    uint64_t key = 0;
    for (int j = 0; j < order; ++j) {
      key = (key << 16) | (static_cast<uint64_t>(tokens[i + j]) & 0xffffull);
    }
    ++counts_[key];
    ++total_;
  }
}

int NGramCounts::clipped_overlap(const NGramCounts& other) const {
  int overlap = 0;
  for (const auto& [key, count] : counts_) {
    auto it = other.counts_.find(key);
    if (it != other.counts_.end()) overlap += std::min(count, it->second);
  }
  return overlap;
}

MetricScore bleu(const TokenSequence& candidate, const TokenSequence& reference,
                 int max_n) {
  require_reference(reference);
  if (max_n < 1) throw Error(ErrorCategory::config, "bleu max_n must be >= 1");
  if (candidate.empty()) return {0.0, MetricId::bleu};

  const double c = static_cast<double>(candidate.size());
  const double r = static_cast<double>(reference.size());

  double log_precision_sum = 0.0;
  for (int n = 1; n <= max_n; ++n) {
    NGramCounts cand(candidate, n);
    NGramCounts ref(reference, n);
    int matches = cand.clipped_overlap(ref);
    int total = cand.total();
    double p;
    if (n > 1 && matches == 0) {
      p = 1.0 / (static_cast<double>(total) + 1.0);
    } else {
      if (total == 0) return {0.0, MetricId::bleu};
      p = static_cast<double>(matches) / static_cast<double>(total);
    }
    if (p == 0.0) return {0.0, MetricId::bleu};
    log_precision_sum += std::log(p);
  }

  const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
  const double value = bp * std::exp(log_precision_sum / max_n);
  return {std::min(1.0, value), MetricId::bleu};
}

MetricScore rouge_n(const TokenSequence& candidate,
                    const TokenSequence& reference, int n) {
  require_reference(reference);
  if (n != 1 && n != 2) {
    throw Error(ErrorCategory::config, "rouge_n supports n in {1,2}");
  }
  MetricId id = n == 1 ? MetricId::rouge1 : MetricId::rouge2;
  if (candidate.empty()) return {0.0, id};

  NGramCounts cand(candidate, n);
  NGramCounts ref(reference, n);
  const int overlap = cand.clipped_overlap(ref);
  const double p =
      cand.total() > 0 ? static_cast<double>(overlap) / cand.total() : 0.0;
  const double r =
      ref.total() > 0 ? static_cast<double>(overlap) / ref.total() : 0.0;
  return {f1(p, r), id};
}

MetricScore rouge_l(const TokenSequence& candidate,
                    const TokenSequence& reference) {
  require_reference(reference);
  if (candidate.empty()) return {0.0, MetricId::rougel};

  // Two-row LCS dynamic program.
  const size_t m = candidate.size();
  const size_t n = reference.size();
  std::vector<int> prev(n + 1, 0), cur(n + 1, 0);
  for (size_t i = 1; i <= m; ++i) {
    for (size_t j = 1; j <= n; ++j) {
      cur[j] = candidate[i - 1] == reference[j - 1]
                   ? prev[j - 1] + 1
                   : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  const double lcs = static_cast<double>(prev[n]);
  const double p = lcs / static_cast<double>(m);
  const double r = lcs / static_cast<double>(n);
  return {f1(p, r), MetricId::rougel};
}

MetricScore meteor_lite(const TokenSequence& candidate,
                        const TokenSequence& reference) {
  require_reference(reference);
  if (candidate.empty()) return {0.0, MetricId::meteor};

  constexpr double kAlpha = 0.9;
  constexpr double kGamma = 0.5;
  constexpr double kTheta = 3.0;

  // Greedy left-to-right alignment. Exact matches only; each candidate token
  // prefers the reference position that extends the current chunk, otherwise
  // the leftmost unmatched occurrence of the word.
  const size_t m = candidate.size();
  const size_t n = reference.size();
  std::vector<bool> ref_used(n, false);
  std::vector<int> align(m, -1);
  int last_cand = -2;  // candidate index of the previous match
  int last_ref = -2;   // reference index it aligned to
  for (size_t i = 0; i < m; ++i) {
    const TokenId w = candidate[i];
    int pick = -1;
    const size_t next = static_cast<size_t>(last_ref + 1);
    if (static_cast<int>(i) == last_cand + 1 && last_ref >= -1 && next < n &&
        !ref_used[next] && reference[next] == w) {
      pick = static_cast<int>(next);
    } else {
      for (size_t j = 0; j < n; ++j) {
        if (!ref_used[j] && reference[j] == w) {
          pick = static_cast<int>(j);
          break;
        }
      }
    }
    if (pick >= 0) {
      align[i] = pick;
      ref_used[static_cast<size_t>(pick)] = true;
      last_cand = static_cast<int>(i);
      last_ref = pick;
    }
  }

  int matches = 0;
  int chunks = 0;
  int prev_i = -2, prev_j = -2;
  for (size_t i = 0; i < m; ++i) {
    if (align[i] < 0) continue;
    ++matches;
    if (static_cast<int>(i) != prev_i + 1 || align[i] != prev_j + 1) ++chunks;
    prev_i = static_cast<int>(i);
    prev_j = align[i];
  }

  if (matches == 0) return {0.0, MetricId::meteor};
  const double p = static_cast<double>(matches) / static_cast<double>(m);
  const double r = static_cast<double>(matches) / static_cast<double>(n);
  const double f_mean = p * r / (kAlpha * p + (1.0 - kAlpha) * r);
  const double frag = static_cast<double>(chunks) / static_cast<double>(matches);
  const double penalty = kGamma * std::pow(frag, kTheta);
  return {f_mean * (1.0 - penalty), MetricId::meteor};
}

double reward(MetricId id, const TokenSequence& candidate,
              const TokenSequence& reference) {
  switch (id) {
    case MetricId::bleu:
      return bleu(candidate, reference).value;
    case MetricId::rouge1:
      return rouge_n(candidate, reference, 1).value;
    case MetricId::rouge2:
      return rouge_n(candidate, reference, 2).value;
    case MetricId::rougel:
      return rouge_l(candidate, reference).value;
    case MetricId::meteor:
      return meteor_lite(candidate, reference).value;
  }
  throw Error(ErrorCategory::config, "invalid metric id");
}

}  // namespace textgrpo::metrics
