// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace aluc {

struct Image8 {
  int width = 0;
  int height = 0;
  int channels = 0;  // 1 gray, 3 RGB
  std::vector<std::uint8_t> pixels;
};

using Rgb = std::array<std::uint8_t, 3>;

/// Fixed legend colors; index 0 is black (unlabeled), classes cycle after 12.
Rgb legend_color(int cls) noexcept;

std::vector<std::uint8_t> encode_png(const Image8& image);
/// 8-bit palette image of class indices 0..omega with the legend colors.
std::vector<std::uint8_t> encode_png_indexed(int width, int height, std::span<const int> classes, int omega);
/// Decodes to 8-bit gray or RGB (palette images expand to RGB).
Image8 decode_png(std::span<const std::uint8_t> bytes);

/// Classification map PNG (palette).
std::vector<std::uint8_t> classification_png(int width, int height, std::span<const int> predicted, int omega);
/// Confidence map PNG: gray level round(255 p); an empty map is all-pass (255).
std::vector<std::uint8_t> confidence_png(int width, int height, std::span<const double> confidence);

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace aluc
