// SPDX-License-Identifier: Apache-2.0
// Small scenes and feature stacks shared by the engine-level tests.
#pragma once

#include "aluc/features.hpp"
#include "aluc/raster.hpp"

namespace fixture {

struct Prepared {
  aluc::Scene scene;
  aluc::FeatureStack features;
};

inline Prepared scene(int size, int classes, std::uint64_t seed, double noise = 2.0, double granularity = 12.0) {
  auto spec = aluc::SceneSpec::with_generated_spectra(size, size, classes, 3, granularity, 10.0, 4.0, noise, seed);
  spec.mixing = 1.0;
  Prepared p{aluc::generate_synthetic_scene(spec), {}};
  p.features = aluc::build_feature_stack(p.scene.raster, aluc::MorphConfig{{1, 3}});
  return p;
}

// Hand-made stack: one feature row per pixel, value = pixel index.
inline aluc::FeatureStack tiny_stack(int width, int height) {
  aluc::FeatureStack f;
  f.width = width;
  f.height = height;
  for (int p = 0; p < width * height; ++p) f.samples.append(std::vector<double>{double(p), double(p % width)});
  f.names = {"a", "b"};
  f.means = {0, 0};
  f.stds = {1, 1};
  f.constant = {false, false};
  return f;
}

}  // namespace fixture
