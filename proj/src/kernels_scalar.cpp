// SPDX-License-Identifier: Apache-2.0

#include "textgrpo/kernels/kernels.hpp"

namespace textgrpo::kernels::detail {

double dot_scalar(const double* a, const double* b, size_t n) {
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale_scalar(double alpha, double* x, size_t n) {
  for (size_t i = 0; i < n; ++i) x[i] *= alpha;
}

}  // namespace textgrpo::kernels::detail
