// SPDX-License-Identifier: Apache-2.0
#pragma once

// Central finite-difference gradient verification. The loss closure must
// re-evaluate from the current parameter vector on every call.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "textgrpo/rng.hpp"

namespace textgrpo::policy {

struct GradCheckReport {
  double max_rel_err = 0.0;
  size_t worst_coord = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  size_t checked = 0;
};

// Compares analytic[c] against (f(theta_c + h) - f(theta_c - h)) / 2h on the
// given coordinates. Relative error uses max(|analytic|, |numeric|, floor)
// as the denominator.
GradCheckReport check_gradient(std::span<double> theta,
                               const std::function<double()>& loss,
                               std::span<const double> analytic,
                               std::span<const size_t> coords, double h,
                               double denom_floor = 1e-8);

// Picks `count` distinct coordinates; when `prefer_large` is set, only
// coordinates whose analytic entry is at least `min_mag` are eligible
// (falling back to the largest entries if too few qualify).
std::vector<size_t> pick_coords(std::span<const double> analytic, size_t count,
                                Rng& rng, bool prefer_large = false,
                                double min_mag = 1e-4);

}  // namespace textgrpo::policy
