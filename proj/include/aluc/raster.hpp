// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

namespace aluc {

/// Multiband image, band-sequential and row-major within each band.
struct Raster {
  int width = 0;
  int height = 0;
  int bands = 0;
  std::vector<float> values;

  std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(width) * height; }
  float at(int band, int row, int col) const { return values[index(band, row, col)]; }
  float& at(int band, int row, int col) { return values[index(band, row, col)]; }
  std::span<const float> band(int b) const { return {values.data() + b * pixel_count(), pixel_count()}; }

  /// Throws on non-positive dimensions, a value count mismatch or a non-finite value.
  void validate() const;

 private:
  std::size_t index(int band, int row, int col) const noexcept {
    return (static_cast<std::size_t>(band) * height + row) * width + col;
  }
};

/// Per-pixel class index; 0 means unlabeled.
struct LabelMap {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> labels;

  std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(width) * height; }
  std::uint16_t at(int row, int col) const { return labels[static_cast<std::size_t>(row) * width + col]; }
  std::uint16_t& at(int row, int col) { return labels[static_cast<std::size_t>(row) * width + col]; }

  /// Throws if any label exceeds `omega`, naming the first offending pixel.
  void validate(int omega) const;
};

/// Parameters of a synthetic labeled scene: a nearest-site tessellation whose regions
/// carry one class each, with per-class diagonal-Gaussian spectra plus sensor noise.
/// `mixing` > 0 blurs the class spectra with a Gaussian point-spread function of that
/// width (pixels) before the noise is added, so pixels near region boundaries become
/// spectral mixtures of the adjacent classes. `region_variation` > 0 shifts every
/// region's mean by its own N(0, region_variation^2) offset per band, so one class
/// looks different from field to field.
struct SceneSpec {
  int width = 96;
  int height = 96;
  int classes = 5;
  int bands = 4;
  double granularity = 24.0;                    // mean region diameter, pixels
  std::vector<std::vector<double>> means;       // classes x bands
  std::vector<std::vector<double>> stds;        // classes x bands, all > 0
  double noise = 0.0;
  double mixing = 0.0;
  double region_variation = 0.0;
  std::uint64_t seed = 1;

  void validate() const;

  /// Draws class centers as 100 + spread * N(0, 1) per band (seeded) and sets every
  /// class standard deviation to `class_std`.
  static SceneSpec with_generated_spectra(int width, int height, int classes, int bands,
                                          double granularity, double spread,
                                          double class_std, double noise, std::uint64_t seed);
};

struct Scene {
  Raster raster;
  LabelMap labels;
  std::vector<int> regions;  // tessellation cell per pixel
  int region_count = 0;
};

/// Pure function of the spec (seed included). Every tessellation cell is 4-connected.
Scene generate_synthetic_scene(const SceneSpec& spec);

// Containers: <base>.json sidecar + <base>.bin little-endian payload. `path` may name
// the base, the sidecar or the payload.
void store_raster(const Raster& raster, const std::filesystem::path& path,
                  const nlohmann::json& extra = nlohmann::json::object());
Raster load_raster(const std::filesystem::path& path);
void store_label_map(const LabelMap& labels, const std::filesystem::path& path);
LabelMap load_label_map(const std::filesystem::path& path, int omega);

std::filesystem::path sidecar_path(const std::filesystem::path& path);
std::filesystem::path payload_path(const std::filesystem::path& path);
nlohmann::json load_sidecar(const std::filesystem::path& path);

nlohmann::json to_json(const SceneSpec& spec);
SceneSpec scene_spec_from_json(const nlohmann::json& j);

}  // namespace aluc
