// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "aluc/matrix.hpp"
#include "aluc/raster.hpp"

namespace aluc {

/// Single-band real image, row-major.
struct Grid {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  double at(int row, int col) const { return values[static_cast<std::size_t>(row) * width + col]; }
  double& at(int row, int col) { return values[static_cast<std::size_t>(row) * width + col]; }
  bool operator==(const Grid&) const = default;
};

struct MorphConfig {
  std::vector<int> radii{1, 3};
  void validate() const;
};

/// Per-pixel feature vectors: spectral bands followed by (opening, closing) of the first
/// principal component for each radius, each feature z-scored over the whole image.
struct FeatureStack {
  int width = 0;
  int height = 0;
  SampleMatrix samples;  // pixel-major: row = pixel index (row * width + col)
  std::vector<std::string> names;
  std::vector<double> means;
  std::vector<double> stds;
  std::vector<bool> constant;  // zero-variance features, stored as all zeros

  std::size_t dim() const noexcept { return samples.cols(); }
  std::size_t pixel_count() const noexcept { return samples.rows(); }
};

/// Projection on the leading eigenvector of the band covariance; the eigenvector's
/// largest-magnitude entry is made positive.
Grid pca_first_component(const Raster& raster);

/// Half-width of the disk's horizontal run at each vertical offset -r..r. Membership is
/// |o|^2 <= r^2 + r, the circular digitization under which larger disks are open with
/// respect to the radius-1 disk.
std::vector<int> disk_half_widths(int radius);

Grid erode(const Grid& grid, int radius);
Grid dilate(const Grid& grid, int radius);
Grid opening(const Grid& grid, int radius);
Grid closing(const Grid& grid, int radius);

/// [opening(r1), closing(r1), opening(r2), closing(r2), ...]
std::vector<Grid> morphological_filter(const Grid& grid, const MorphConfig& config);

FeatureStack build_feature_stack(const Raster& raster, const MorphConfig& config);

/// Raster container with one band per feature plus names and standardization constants
/// in the sidecar. Values are stored as f32.
void store_feature_stack(const FeatureStack& stack, const std::filesystem::path& path);
FeatureStack load_feature_stack(const std::filesystem::path& path);

/// Order-sensitive hash of the feature values, used to tie snapshots to their inputs.
std::uint64_t fingerprint(const FeatureStack& stack);

}  // namespace aluc
