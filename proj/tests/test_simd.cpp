// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <vector>

#include "aluc/rng.hpp"
#include "aluc/simd.hpp"

using namespace aluc;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal() * 10.0;
  return v;
}

}  // namespace

TEST_CASE("avx2 kernels agree with the scalar reference") {
  if (simd::best_supported_level() != simd::Level::avx2) {
    MESSAGE("AVX2 unavailable; equivalence not exercised");
    return;
  }
  const auto& s = simd::scalar_kernels();
  const auto& v = simd::avx2_kernels();
  Rng rng(7);
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 9u, 15u, 16u, 17u, 31u, 64u, 101u, 1000u}) {
    CAPTURE(n);
    const auto a = random_vec(rng, n), b = random_vec(rng, n);
    const double sd = s.squared_distance(a.data(), b.data(), n);
    const double vd = v.squared_distance(a.data(), b.data(), n);
    CHECK(std::abs(sd - vd) <= 1e-12 * std::max(1.0, sd));
    const double sdot = s.dot(a.data(), b.data(), n);
    const double vdot = v.dot(a.data(), b.data(), n);
    double mag = 0;
    for (std::size_t i = 0; i < n; ++i) mag += std::abs(a[i] * b[i]);
    CHECK(std::abs(sdot - vdot) <= 1e-13 * std::max(1.0, mag));

    auto smin = a, vmin = a, smax = a, vmax = a;
    s.min_inplace(smin.data(), b.data(), n);
    v.min_inplace(vmin.data(), b.data(), n);
    s.max_inplace(smax.data(), b.data(), n);
    v.max_inplace(vmax.data(), b.data(), n);
    CHECK(smin == vmin);
    CHECK(smax == vmax);
  }
}

TEST_CASE("min/max kernels keep the accumulator on equal values and handle signed zeros alike") {
  std::vector<double> acc{0.0, -0.0, 1.0, 2.0, 3.0, -1.0, 5.0, 0.0, -0.0};
  std::vector<double> src{-0.0, 0.0, 1.0, 1.0, 4.0, -2.0, 5.0, -0.0, 0.0};
  for (auto level : {simd::Level::scalar, simd::Level::avx2}) {
    simd::set_level(level);
    auto lo = acc, hi = acc;
    simd::min_inplace(lo, src);
    simd::max_inplace(hi, src);
    for (std::size_t i = 0; i < acc.size(); ++i) {
      CHECK(lo[i] == std::min(acc[i], src[i]));
      CHECK(hi[i] == std::max(acc[i], src[i]));
      CHECK(std::signbit(lo[i]) == std::signbit(src[i] < acc[i] ? src[i] : acc[i]));
    }
  }
  simd::set_level(simd::best_supported_level());
}

TEST_CASE("dispatched rbf_row equals exp of the scalar squared distance") {
  Rng rng(3);
  const std::size_t d = 7, rows = 33;
  const auto x = random_vec(rng, d);
  const auto m = random_vec(rng, d * rows);
  for (auto level : {simd::Level::scalar, simd::Level::avx2}) {
    simd::set_level(level);
    std::vector<double> out(rows), d2(rows);
    simd::rbf_row(x, m, 0.01, out);
    simd::squared_distances(x, m, d2);
    for (std::size_t i = 0; i < rows; ++i) {
      double ref = 0;
      for (std::size_t c = 0; c < d; ++c) ref += (x[c] - m[i * d + c]) * (x[c] - m[i * d + c]);
      CHECK(d2[i] == doctest::Approx(ref).epsilon(1e-12));
      CHECK(out[i] == doctest::Approx(std::exp(-0.01 * ref)).epsilon(1e-12));
    }
  }
  simd::set_level(simd::best_supported_level());
}

TEST_CASE("set_level falls back when a level is unsupported") {
  const auto best = simd::best_supported_level();
  CHECK(simd::set_level(simd::Level::scalar) == simd::Level::scalar);
  CHECK(simd::active_level() == simd::Level::scalar);
  CHECK(simd::set_level(simd::Level::avx2) == best);
  CHECK(std::string(simd::level_name(simd::Level::avx2)) == "avx2");
}
