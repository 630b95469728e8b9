// SPDX-License-Identifier: Apache-2.0

#include "textgrpo/policy/finite_diff.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "textgrpo/error.hpp"

namespace textgrpo::policy {

GradCheckReport check_gradient(std::span<double> theta,
                               const std::function<double()>& loss,
                               std::span<const double> analytic,
                               std::span<const size_t> coords, double h,
                               double denom_floor) {
  if (analytic.size() != theta.size()) {
    throw Error(ErrorCategory::config, "gradient/parameter shape mismatch");
  }
  GradCheckReport report;
  for (size_t c : coords) {
    const double saved = theta[c];
    theta[c] = saved + h;
    const double up = loss();
    theta[c] = saved - h;
    const double down = loss();
    theta[c] = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double denom =
        std::max({std::abs(analytic[c]), std::abs(numeric), denom_floor});
    const double rel = std::abs(analytic[c] - numeric) / denom;
    if (rel > report.max_rel_err) {
      report.max_rel_err = rel;
      report.worst_coord = c;
      report.worst_analytic = analytic[c];
      report.worst_numeric = numeric;
    }
    ++report.checked;
  }
  return report;
}

std::vector<size_t> pick_coords(std::span<const double> analytic, size_t count,
                                Rng& rng, bool prefer_large, double min_mag) {
  std::vector<size_t> pool;
  if (prefer_large) {
    for (size_t i = 0; i < analytic.size(); ++i) {
      if (std::abs(analytic[i]) >= min_mag) pool.push_back(i);
    }
    if (pool.size() < count) {
      pool.resize(analytic.size());
      std::iota(pool.begin(), pool.end(), size_t{0});
      std::sort(pool.begin(), pool.end(), [&analytic](size_t a, size_t b) {
        return std::abs(analytic[a]) > std::abs(analytic[b]);
      });
      pool.resize(std::min(analytic.size(), std::max(count, size_t{1})));
    }
  } else {
    pool.resize(analytic.size());
    std::iota(pool.begin(), pool.end(), size_t{0});
  }
  // Seeded partial Fisher-Yates.
  std::vector<size_t> out;
  const size_t take = std::min(count, pool.size());
  for (size_t i = 0; i < take; ++i) {
    const size_t j = i + static_cast<size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
    out.push_back(pool[i]);
  }
  return out;
}

}  // namespace textgrpo::policy
