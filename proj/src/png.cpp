// SPDX-License-Identifier: Apache-2.0
#include "aluc/png.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <png.h>

#include "aluc/error.hpp"

namespace aluc {

namespace {

constexpr Rgb kLegend[12] = {{{230, 25, 75}},  {{60, 180, 75}},  {{255, 225, 25}}, {{0, 130, 200}},
                             {{245, 130, 48}}, {{145, 30, 180}}, {{70, 240, 240}}, {{240, 50, 230}},
                             {{210, 245, 60}}, {{250, 190, 190}}, {{0, 128, 128}}, {{170, 110, 40}}};

std::vector<std::uint8_t> write_image(png_image& image, const void* buffer, const void* colormap) {
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, buffer, 0, colormap))
    throw Error(Errc::io, std::string("png encode: ") + image.message);
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, buffer, 0, colormap))
    throw Error(Errc::io, std::string("png encode: ") + image.message);
  out.resize(size);
  return out;
}

void check_dims(int width, int height, std::size_t count) {
  if (width <= 0 || height <= 0 || count != static_cast<std::size_t>(width) * height)
    throw Error(Errc::size_mismatch, "image dimensions do not match pixel count");
}

}  // namespace

Rgb legend_color(int cls) noexcept {
  if (cls <= 0) return {0, 0, 0};
  return kLegend[(cls - 1) % 12];
}

std::vector<std::uint8_t> encode_png(const Image8& img) {
  if (img.channels != 1 && img.channels != 3) throw Error(Errc::invalid_argument, "png: 1 or 3 channels");
  check_dims(img.width, img.height, img.pixels.size() / static_cast<std::size_t>(img.channels));
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = img.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  return write_image(image, img.pixels.data(), nullptr);
}

std::vector<std::uint8_t> encode_png_indexed(int width, int height, std::span<const int> classes, int omega) {
  check_dims(width, height, classes.size());
  if (omega < 1 || omega > 255) throw Error(Errc::invalid_argument, "png: omega must be in 1..255");
  std::vector<std::uint8_t> index(classes.size());
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (classes[i] < 0 || classes[i] > omega) throw Error(Errc::invalid_argument, "png: class index out of range");
    index[i] = static_cast<std::uint8_t>(classes[i]);
  }
  std::vector<std::uint8_t> colormap;
  for (int c = 0; c <= omega; ++c) {
    const Rgb rgb = legend_color(c);
    colormap.insert(colormap.end(), rgb.begin(), rgb.end());
  }
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = PNG_FORMAT_RGB_COLORMAP;
  image.colormap_entries = static_cast<png_uint_32>(omega + 1);
  return write_image(image, index.data(), colormap.data());
}

Image8 decode_png(std::span<const std::uint8_t> bytes) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
    throw Error(Errc::format, std::string("png decode: ") + image.message);
  const bool gray = (image.format & PNG_FORMAT_FLAG_COLOR) == 0;
  image.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  Image8 out{static_cast<int>(image.width), static_cast<int>(image.height), gray ? 1 : 3, {}};
  out.pixels.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, out.pixels.data(), 0, nullptr)) {
    png_image_free(&image);
    throw Error(Errc::format, std::string("png decode: ") + image.message);
  }
  return out;
}

std::vector<std::uint8_t> classification_png(int width, int height, std::span<const int> predicted, int omega) {
  return encode_png_indexed(width, height, predicted, omega);
}

std::vector<std::uint8_t> confidence_png(int width, int height, std::span<const double> confidence) {
  const std::size_t n = static_cast<std::size_t>(width) * height;
  Image8 img{width, height, 1, std::vector<std::uint8_t>(n, 255)};
  if (!confidence.empty()) {
    check_dims(width, height, confidence.size());
    for (std::size_t i = 0; i < n; ++i) {
      const double p = std::clamp(confidence[i], 0.0, 1.0);
      img.pixels[i] = static_cast<std::uint8_t>(std::lround(p * 255.0));
    }
  }
  return encode_png(img);
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::io, "write failed: " + path.string());
}

}  // namespace aluc
