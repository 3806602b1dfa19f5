// SPDX-License-Identifier: Apache-2.0
#include "aluc/features.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

#include <Eigen/Dense>

#include "aluc/error.hpp"
#include "aluc/rng.hpp"
#include "aluc/simd.hpp"

namespace aluc {

void MorphConfig::validate() const {
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (radii[i] <= 0) throw Error(Errc::invalid_argument, "structuring element radii must be positive");
    if (i > 0 && radii[i] <= radii[i - 1]) throw Error(Errc::invalid_argument, "radii must be strictly increasing");
  }
}

Grid pca_first_component(const Raster& raster) {
  raster.validate();
  const std::size_t n = raster.pixel_count();
  const int d = raster.bands;
  if (n < 2) throw Error(Errc::invalid_argument, "PCA needs at least 2 pixels");

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (int b = 0; b < d; ++b) {
    const auto band = raster.band(b);
    double s = 0.0;
    for (float v : band) s += v;
    mean[b] = s / static_cast<double>(n);
  }
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  for (int a = 0; a < d; ++a) {
    for (int b = a; b < d; ++b) {
      const auto ba = raster.band(a);
      const auto bb = raster.band(b);
      double s = 0.0;
      for (std::size_t p = 0; p < n; ++p) s += (ba[p] - mean[a]) * (bb[p] - mean[b]);
      cov(a, b) = cov(b, a) = s / static_cast<double>(n - 1);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  const Eigen::VectorXd& evals = solver.eigenvalues();
  const double top = evals[d - 1];
  if (!(top > 1e-12 * std::max(1.0, cov.diagonal().cwiseAbs().maxCoeff())) || !(top > 0)) {
    throw Error(Errc::degenerate, "degenerate PCA: band covariance is zero");
  }
  Eigen::VectorXd v = solver.eigenvectors().col(d - 1);
  Eigen::Index arg = 0;
  v.cwiseAbs().maxCoeff(&arg);
  if (v[arg] < 0) v = -v;

  Grid out{raster.width, raster.height, std::vector<double>(n, 0.0)};
  for (int b = 0; b < d; ++b) {
    const auto band = raster.band(b);
    for (std::size_t p = 0; p < n; ++p) out.values[p] += v[b] * (band[p] - mean[b]);
  }
  return out;
}

std::vector<int> disk_half_widths(int radius) {
  std::vector<int> widths(2 * radius + 1);
  const long long limit = static_cast<long long>(radius) * radius + radius;
  for (int dy = -radius; dy <= radius; ++dy) {
    int wx = 0;
    while (static_cast<long long>(wx + 1) * (wx + 1) + static_cast<long long>(dy) * dy <= limit) ++wx;
    widths[dy + radius] = wx;
  }
  return widths;
}

namespace {

enum class Rank { min, max };

// Flat-disk rank filter with edge replication. The disk is swept as horizontal runs:
// each source row is padded once, then every shift of the run is folded into the
// accumulator with the SIMD min/max kernel.
Grid rank_filter(const Grid& grid, int radius, Rank rank) {
  const int w = grid.width;
  const int h = grid.height;
  const auto widths = disk_half_widths(radius);
  const double init = rank == Rank::min ? HUGE_VAL : -HUGE_VAL;
  Grid out{w, h, std::vector<double>(grid.values.size(), init)};
  std::vector<double> padded(static_cast<std::size_t>(w) + 2 * radius);
  for (int r = 0; r < h; ++r) {
    std::span<double> acc(out.values.data() + static_cast<std::size_t>(r) * w, w);
    for (int dy = -radius; dy <= radius; ++dy) {
      const int src_row = std::clamp(r + dy, 0, h - 1);
      const double* src = grid.values.data() + static_cast<std::size_t>(src_row) * w;
      for (int i = 0; i < radius; ++i) {
        padded[i] = src[0];
        padded[radius + w + i] = src[w - 1];
      }
      std::copy(src, src + w, padded.begin() + radius);
      const int wx = widths[dy + radius];
      for (int dx = -wx; dx <= wx; ++dx) {
        std::span<const double> shifted(padded.data() + radius + dx, w);
        if (rank == Rank::min) {
          simd::min_inplace(acc, shifted);
        } else {
          simd::max_inplace(acc, shifted);
        }
      }
    }
  }
  return out;
}

}  // namespace

Grid erode(const Grid& grid, int radius) { return rank_filter(grid, radius, Rank::min); }
Grid dilate(const Grid& grid, int radius) { return rank_filter(grid, radius, Rank::max); }
Grid opening(const Grid& grid, int radius) { return dilate(erode(grid, radius), radius); }
Grid closing(const Grid& grid, int radius) { return erode(dilate(grid, radius), radius); }

std::vector<Grid> morphological_filter(const Grid& grid, const MorphConfig& config) {
  config.validate();
  std::vector<Grid> out;
  out.reserve(2 * config.radii.size());
  for (int r : config.radii) {
    out.push_back(opening(grid, r));
    out.push_back(closing(grid, r));
  }
  return out;
}

FeatureStack build_feature_stack(const Raster& raster, const MorphConfig& config) {
  config.validate();
  const Grid pc1 = pca_first_component(raster);
  const auto morph = morphological_filter(pc1, config);
  const std::size_t n = raster.pixel_count();
  const std::size_t d = static_cast<std::size_t>(raster.bands) + morph.size();

  FeatureStack fs;
  fs.width = raster.width;
  fs.height = raster.height;
  fs.samples = SampleMatrix(n, d);
  for (int b = 0; b < raster.bands; ++b) fs.names.push_back("band" + std::to_string(b + 1));
  for (int r : config.radii) {
    fs.names.push_back("opening_r" + std::to_string(r));
    fs.names.push_back("closing_r" + std::to_string(r));
  }

  std::vector<double> column(n);
  for (std::size_t f = 0; f < d; ++f) {
    if (f < static_cast<std::size_t>(raster.bands)) {
      const auto band = raster.band(static_cast<int>(f));
      std::copy(band.begin(), band.end(), column.begin());
    } else {
      column = morph[f - raster.bands].values;
    }
    double mean = 0.0;
    for (double v : column) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : column) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / static_cast<double>(n));
    const bool flat = !(sd > 0.0);
    fs.means.push_back(mean);
    fs.stds.push_back(flat ? 0.0 : sd);
    fs.constant.push_back(flat);
    for (std::size_t p = 0; p < n; ++p) fs.samples.row(p)[f] = flat ? 0.0 : (column[p] - mean) / sd;
  }
  return fs;
}

void store_feature_stack(const FeatureStack& stack, const std::filesystem::path& path) {
  Raster r;
  r.width = stack.width;
  r.height = stack.height;
  r.bands = static_cast<int>(stack.dim());
  const std::size_t n = stack.pixel_count();
  r.values.resize(n * stack.dim());
  for (std::size_t f = 0; f < stack.dim(); ++f) {
    for (std::size_t p = 0; p < n; ++p) r.values[f * n + p] = static_cast<float>(stack.samples.row(p)[f]);
  }
  nlohmann::json features = nlohmann::json::array();
  for (std::size_t f = 0; f < stack.dim(); ++f) {
    features.push_back({{"name", stack.names[f]}, {"mean", stack.means[f]}, {"std", stack.stds[f]},
                        {"constant", static_cast<bool>(stack.constant[f])}});
  }
  store_raster(r, path, {{"features", features}});
}

FeatureStack load_feature_stack(const std::filesystem::path& path) {
  const Raster r = load_raster(path);
  const auto header = load_sidecar(path);
  FeatureStack fs;
  fs.width = r.width;
  fs.height = r.height;
  const std::size_t n = r.pixel_count();
  const std::size_t d = static_cast<std::size_t>(r.bands);
  fs.samples = SampleMatrix(n, d);
  for (std::size_t f = 0; f < d; ++f) {
    for (std::size_t p = 0; p < n; ++p) fs.samples.row(p)[f] = r.values[f * n + p];
  }
  if (header.contains("features")) {
    const auto& features = header["features"];
    if (features.size() != d) throw Error(Errc::format, "feature list does not match band count");
    for (const auto& f : features) {
      fs.names.push_back(f.value("name", ""));
      fs.means.push_back(f.value("mean", 0.0));
      fs.stds.push_back(f.value("std", 1.0));
      fs.constant.push_back(f.value("constant", false));
    }
  } else {
    for (std::size_t f = 0; f < d; ++f) {
      fs.names.push_back("band" + std::to_string(f + 1));
      fs.means.push_back(0.0);
      fs.stds.push_back(1.0);
      fs.constant.push_back(false);
    }
  }
  return fs;
}

std::uint64_t fingerprint(const FeatureStack& stack) {
  std::uint64_t h = splitmix64(stack.pixel_count() * 131 + stack.dim());
  for (double v : stack.samples.data()) h = splitmix64(h ^ std::bit_cast<std::uint64_t>(v));
  return h;
}

}  // namespace aluc
