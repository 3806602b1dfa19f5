// SPDX-License-Identifier: Apache-2.0
#include <atomic>
#include <cmath>

#include "aluc/simd.hpp"

namespace aluc::simd {

bool cpu_has_avx2() noexcept;

namespace {

std::atomic<const KernelTable*>& active_table() {
  static std::atomic<const KernelTable*> table{cpu_has_avx2() ? &avx2_kernels() : &scalar_kernels()};
  return table;
}

const KernelTable& table() noexcept { return *active_table().load(std::memory_order_relaxed); }

}  // namespace

const char* level_name(Level level) noexcept { return level == Level::avx2 ? "avx2" : "scalar"; }

Level best_supported_level() noexcept {
  static const bool avx2 = cpu_has_avx2();
  return avx2 ? Level::avx2 : Level::scalar;
}

Level active_level() noexcept {
  return &table() == &scalar_kernels() ? Level::scalar : Level::avx2;
}

Level set_level(Level level) noexcept {
  if (level == Level::avx2 && best_supported_level() != Level::avx2) level = Level::scalar;
  active_table().store(level == Level::avx2 ? &avx2_kernels() : &scalar_kernels());
  return level;
}

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
  return table().squared_distance(a.data(), b.data(), a.size());
}

void squared_distances(std::span<const double> x, std::span<const double> rows,
                       std::span<double> out) noexcept {
  const auto& t = table();
  const std::size_t dim = x.size();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = t.squared_distance(x.data(), rows.data() + i * dim, dim);
}

void rbf_row(std::span<const double> x, std::span<const double> rows, double gamma,
             std::span<double> out) noexcept {
  squared_distances(x, rows, out);
  for (double& v : out) v = std::exp(-gamma * v);
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
  return table().dot(a.data(), b.data(), a.size());
}

void min_inplace(std::span<double> acc, std::span<const double> src) noexcept {
  table().min_inplace(acc.data(), src.data(), acc.size());
}

void max_inplace(std::span<double> acc, std::span<const double> src) noexcept {
  table().max_inplace(acc.data(), src.data(), acc.size());
}

}  // namespace aluc::simd
