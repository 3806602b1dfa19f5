// SPDX-License-Identifier: Apache-2.0
#include "aluc/simd.hpp"

namespace aluc::simd {
namespace {

double squared_distance_scalar(const double* a, const double* b, std::size_t n) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double dot_scalar(const double* a, const double* b, std::size_t n) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void min_scalar(double* acc, const double* src, std::size_t n) noexcept {
  for (std::size_t i = 0; i < n; ++i) acc[i] = src[i] < acc[i] ? src[i] : acc[i];
}

void max_scalar(double* acc, const double* src, std::size_t n) noexcept {
  for (std::size_t i = 0; i < n; ++i) acc[i] = src[i] > acc[i] ? src[i] : acc[i];
}

}  // namespace

const KernelTable& scalar_kernels() noexcept {
  static const KernelTable table{squared_distance_scalar, dot_scalar, min_scalar, max_scalar};
  return table;
}

}  // namespace aluc::simd
