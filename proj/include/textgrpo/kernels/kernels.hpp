// SPDX-License-Identifier: Apache-2.0
#pragma once

// Dense double-precision kernels backing the neural policy's forward and
// backward passes. Every kernel has a scalar reference implementation plus
// SIMD variants (AVX2+FMA on x86-64, NEON on aarch64) selected once at
// runtime. The TEXTGRPO_KERNELS environment variable (scalar|avx2|neon)
// overrides auto-detection; force_backend() does the same from code.
//
// SIMD variants reduce in a fixed lane order, so results are deterministic
// for a given backend but may differ from the scalar path in the last few
// ulps. Equivalence between backends is covered by the kernel test suite.

#include <cstddef>

namespace textgrpo::kernels {

enum class Backend { scalar, avx2, neon };

const char* backend_name(Backend b);

// Backend currently in use (detection runs on first query).
Backend active_backend();

// True if the named backend can run on this machine.
bool backend_available(Backend b);

// Select a backend explicitly; throws Error(config) if unavailable.
void force_backend(Backend b);

// Re-run detection (honors TEXTGRPO_KERNELS).
void reset_backend();

// y = sum_i a[i] * b[i]
double dot(const double* a, const double* b, size_t n);

// y[i] += alpha * x[i]
void axpy(double alpha, const double* x, double* y, size_t n);

// x[i] *= alpha
void scale(double alpha, double* x, size_t n);

// Row-major matrix helpers layered on dot/axpy.
// y = M x, M is rows x cols
void matvec(const double* m, const double* x, double* y, size_t rows,
            size_t cols);

// y += M^T x, M is rows x cols, x has rows entries, y has cols entries
void matvec_t_acc(const double* m, const double* x, double* y, size_t rows,
                  size_t cols);

// M += u v^T, u has rows entries, v has cols entries
void outer_acc(double* m, const double* u, const double* v, size_t rows,
               size_t cols);

namespace detail {
double dot_scalar(const double* a, const double* b, size_t n);
void axpy_scalar(double alpha, const double* x, double* y, size_t n);
void scale_scalar(double alpha, double* x, size_t n);
#if defined(__x86_64__) || defined(_M_X64)
double dot_avx2(const double* a, const double* b, size_t n);
void axpy_avx2(double alpha, const double* x, double* y, size_t n);
void scale_avx2(double alpha, double* x, size_t n);
#endif
#if defined(__aarch64__)
double dot_neon(const double* a, const double* b, size_t n);
void axpy_neon(double alpha, const double* x, double* y, size_t n);
void scale_neon(double alpha, double* x, size_t n);
#endif
}  // namespace detail

}  // namespace textgrpo::kernels
