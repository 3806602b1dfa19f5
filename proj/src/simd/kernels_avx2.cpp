// SPDX-License-Identifier: Apache-2.0
//
// AVX2 variants. Compiled with per-function target attributes rather than -mavx2 on the
// translation unit, so no inline library code is emitted with AVX encodings.
#include "aluc/simd.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>
#define ALUC_HAVE_AVX2_KERNELS 1
#define ALUC_AVX2 __attribute__((target("avx2")))
#else
#define ALUC_HAVE_AVX2_KERNELS 0
#endif

namespace aluc::simd {

#if ALUC_HAVE_AVX2_KERNELS
namespace {

ALUC_AVX2 inline double hsum(__m256d v) noexcept {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

ALUC_AVX2 double squared_distance_avx2(const double* a, const double* b, std::size_t n) noexcept {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4));
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(d0, d0));
    acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(d1, d1));
  }
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(d, d));
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

ALUC_AVX2 double dot_avx2(const double* a, const double* b, std::size_t n) noexcept {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4)));
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

// Operand order matches the scalar `src < acc ? src : acc` so NaN handling is identical.
ALUC_AVX2 void min_avx2(double* acc, const double* src, std::size_t n) noexcept {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(acc + i, _mm256_min_pd(_mm256_loadu_pd(src + i), _mm256_loadu_pd(acc + i)));
  }
  for (; i < n; ++i) acc[i] = src[i] < acc[i] ? src[i] : acc[i];
}

ALUC_AVX2 void max_avx2(double* acc, const double* src, std::size_t n) noexcept {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(acc + i, _mm256_max_pd(_mm256_loadu_pd(src + i), _mm256_loadu_pd(acc + i)));
  }
  for (; i < n; ++i) acc[i] = src[i] > acc[i] ? src[i] : acc[i];
}

}  // namespace

const KernelTable& avx2_kernels() noexcept {
  static const KernelTable table{squared_distance_avx2, dot_avx2, min_avx2, max_avx2};
  return table;
}

bool cpu_has_avx2() noexcept {
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
}

#else

const KernelTable& avx2_kernels() noexcept { return scalar_kernels(); }
bool cpu_has_avx2() noexcept { return false; }

#endif

}  // namespace aluc::simd
