// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>

// Data-parallel inner loops. Every kernel has a scalar reference implementation and an
// AVX2 variant; the active variant is chosen once at startup from CPUID and can be
// pinned (tests compare the two).

namespace aluc::simd {

enum class Level { scalar, avx2 };

const char* level_name(Level level) noexcept;
Level best_supported_level() noexcept;
Level active_level() noexcept;
/// Selects a variant. Requests above the supported level fall back to the best one.
Level set_level(Level level) noexcept;

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept;
/// out[i] = |x - rows[i]|^2 for the row-major matrix `rows` with x.size() columns.
void squared_distances(std::span<const double> x, std::span<const double> rows,
                       std::span<double> out) noexcept;
/// out[i] = exp(-gamma * |x - rows[i]|^2).
void rbf_row(std::span<const double> x, std::span<const double> rows, double gamma,
             std::span<double> out) noexcept;
double dot(std::span<const double> a, std::span<const double> b) noexcept;
void min_inplace(std::span<double> acc, std::span<const double> src) noexcept;
void max_inplace(std::span<double> acc, std::span<const double> src) noexcept;

// Direct access to each variant, for equivalence tests.
struct KernelTable {
  double (*squared_distance)(const double*, const double*, std::size_t) noexcept;
  double (*dot)(const double*, const double*, std::size_t) noexcept;
  void (*min_inplace)(double*, const double*, std::size_t) noexcept;
  void (*max_inplace)(double*, const double*, std::size_t) noexcept;
};

const KernelTable& scalar_kernels() noexcept;
/// Only valid to call through when best_supported_level() == Level::avx2.
const KernelTable& avx2_kernels() noexcept;

}  // namespace aluc::simd
