// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <numeric>

#include "aluc/error.hpp"
#include "aluc/rng.hpp"
#include "aluc/simd.hpp"
#include "aluc/svm.hpp"

namespace aluc {

void KernelParams::validate() const {
  if (!(sigma > 0) || !std::isfinite(sigma)) throw Error(Errc::invalid_argument, "kernel sigma must be positive");
  if (!(C > 0) || !std::isfinite(C)) throw Error(Errc::invalid_argument, "box constraint C must be positive");
}

double rbf_kernel(std::span<const double> x, std::span<const double> z, double sigma) {
  if (x.size() != z.size()) throw Error(Errc::invalid_argument, "kernel arguments differ in dimension");
  if (!(sigma > 0)) throw Error(Errc::invalid_argument, "kernel sigma must be positive");
  return std::exp(-simd::squared_distance(x, z) / (2.0 * sigma * sigma));
}

double median_sigma(const SampleMatrix& pool, std::size_t sample_size, std::uint64_t seed) {
  if (pool.rows() < 2) throw Error(Errc::invalid_argument, "median bandwidth needs at least 2 vectors");
  std::vector<std::size_t> idx(pool.rows());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const std::size_t m = std::clamp<std::size_t>(sample_size, 2, pool.rows());
  if (m < pool.rows()) {
    Rng rng(seed);
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.index(pool.rows() - i));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(m);
  }
  std::vector<double> dist;
  dist.reserve(m * (m - 1) / 2);
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a + 1; b < m; ++b) dist.push_back(std::sqrt(simd::squared_distance(pool.row(idx[a]), pool.row(idx[b]))));
  }
  const std::size_t mid = dist.size() / 2;
  std::nth_element(dist.begin(), dist.begin() + mid, dist.end());
  double median = dist[mid];
  if (dist.size() % 2 == 0) {
    const double lower = *std::max_element(dist.begin(), dist.begin() + mid);
    median = 0.5 * (median + lower);
  }
  if (!(median > 0)) throw Error(Errc::degenerate, "zero bandwidth: sampled vectors are identical");
  return median;
}

}  // namespace aluc
