// SPDX-License-Identifier: Apache-2.0

#include "textgrpo/kernels/kernels.hpp"

#include <cstdlib>
#include <cstring>
#include <string>

#include "textgrpo/error.hpp"

namespace textgrpo::kernels {

namespace {

struct Vtable {
  double (*dot)(const double*, const double*, size_t);
  void (*axpy)(double, const double*, double*, size_t);
  void (*scale)(double, double*, size_t);
};

constexpr Vtable kScalar{detail::dot_scalar, detail::axpy_scalar,
                         detail::scale_scalar};
#if defined(__x86_64__) || defined(_M_X64)
constexpr Vtable kAvx2{detail::dot_avx2, detail::axpy_avx2,
                       detail::scale_avx2};
#endif
#if defined(__aarch64__)
constexpr Vtable kNeon{detail::dot_neon, detail::axpy_neon,
                       detail::scale_neon};
#endif

Backend g_backend = Backend::scalar;
const Vtable* g_vtable = &kScalar;
bool g_initialized = false;

void apply(Backend b) {
  switch (b) {
    case Backend::scalar:
      g_vtable = &kScalar;
      break;
    case Backend::avx2:
#if defined(__x86_64__) || defined(_M_X64)
      g_vtable = &kAvx2;
      break;
#else
      throw Error(ErrorCategory::config, "avx2 backend not built on this arch");
#endif
    case Backend::neon:
#if defined(__aarch64__)
      g_vtable = &kNeon;
      break;
#else
      throw Error(ErrorCategory::config, "neon backend not built on this arch");
#endif
  }
  g_backend = b;
  g_initialized = true;
}

Backend detect() {
  const char* env = std::getenv("TEXTGRPO_KERNELS");
  if (env != nullptr && *env != '\0') {
    std::string s(env);
    if (s == "scalar") return Backend::scalar;
    if (s == "avx2") return Backend::avx2;
    if (s == "neon") return Backend::neon;
    throw Error(ErrorCategory::config,
                "TEXTGRPO_KERNELS must be scalar|avx2|neon, got '" + s + "'");
  }
#if defined(__x86_64__) || defined(_M_X64)
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
    return Backend::avx2;
  }
#endif
#if defined(__aarch64__)
  return Backend::neon;
#endif
  return Backend::scalar;
}

void ensure_initialized() {
  if (!g_initialized) apply(detect());
}

}  // namespace

const char* backend_name(Backend b) {
  switch (b) {
    case Backend::scalar:
      return "scalar";
    case Backend::avx2:
      return "avx2";
    case Backend::neon:
      return "neon";
  }
  return "?";
}

Backend active_backend() {
  ensure_initialized();
  return g_backend;
}

bool backend_available(Backend b) {
  switch (b) {
    case Backend::scalar:
      return true;
    case Backend::avx2:
#if defined(__x86_64__) || defined(_M_X64)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Backend::neon:
#if defined(__aarch64__)
      return true;
#else
      return false;
#endif
  }
  return false;
}

void force_backend(Backend b) {
  if (!backend_available(b)) {
    throw Error(ErrorCategory::config,
                std::string("kernel backend unavailable: ") + backend_name(b));
  }
  apply(b);
}

void reset_backend() { apply(detect()); }

double dot(const double* a, const double* b, size_t n) {
  ensure_initialized();
  return g_vtable->dot(a, b, n);
}

void axpy(double alpha, const double* x, double* y, size_t n) {
  ensure_initialized();
  g_vtable->axpy(alpha, x, y, n);
}

void scale(double alpha, double* x, size_t n) {
  ensure_initialized();
  g_vtable->scale(alpha, x, n);
}

void matvec(const double* m, const double* x, double* y, size_t rows,
            size_t cols) {
  ensure_initialized();
  for (size_t r = 0; r < rows; ++r) y[r] = g_vtable->dot(m + r * cols, x, cols);
}

void matvec_t_acc(const double* m, const double* x, double* y, size_t rows,
                  size_t cols) {
  ensure_initialized();
  for (size_t r = 0; r < rows; ++r) g_vtable->axpy(x[r], m + r * cols, y, cols);
}

void outer_acc(double* m, const double* u, const double* v, size_t rows,
               size_t cols) {
  ensure_initialized();
  for (size_t r = 0; r < rows; ++r) g_vtable->axpy(u[r], v, m + r * cols, cols);
}

}  // namespace textgrpo::kernels
