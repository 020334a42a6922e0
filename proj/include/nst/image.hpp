#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "nst/tensor.hpp"

namespace nst {

/// 8-bit interleaved RGB raster.
struct RgbImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // row-major, 3 bytes per pixel

  RgbImage() = default;
  RgbImage(std::size_t w, std::size_t h, std::uint8_t fill = 0) : width(w), height(h), pixels(w * h * 3, fill) {}

  bool empty() const { return width == 0 || height == 0; }
  std::size_t long_edge() const { return width > height ? width : height; }
  std::uint8_t& at(std::size_t x, std::size_t y, std::size_t c) { return pixels[(y * width + x) * 3 + c]; }
  std::uint8_t at(std::size_t x, std::size_t y, std::size_t c) const { return pixels[(y * width + x) * 3 + c]; }

  bool operator==(const RgbImage&) const = default;
};

RgbImage read_png(const std::filesystem::path& path);
void write_png(const RgbImage& image, const std::filesystem::path& path);

/// Planar float copy (3 x H x W) with values in 0..255.
Tensor3f to_planes(const RgbImage& image);
/// Rounds to nearest and clamps to 0..255.
RgbImage from_planes(const Tensor3f& planes);

/// Bicubic (Keys, a = -0.5) resampling with edge clamping, separable.
Tensor3f resize_bicubic(const Tensor3f& image, std::size_t new_height, std::size_t new_width);
RgbImage resize_bicubic(const RgbImage& image, std::size_t new_width, std::size_t new_height);

/// Dimensions with the long edge scaled to `long_edge`, aspect preserved, each side at least 1.
struct Extent {
  std::size_t width = 0;
  std::size_t height = 0;
  bool operator==(const Extent&) const = default;
};
Extent scale_to_long_edge(std::size_t width, std::size_t height, std::size_t long_edge);

/// Rotates by `degrees` counter-clockwise about the image centre and scales
/// uniformly by `scale`, keeping the canvas size. Bilinear sampling with
/// edge replication outside the source. Multiples of 90 degrees use exact
/// trigonometry, so quarter turns of square images are pure permutations.
Tensor3f rotate_scale(const Tensor3f& image, double degrees, double scale);

/// Peak signal-to-noise ratio in dB over a rectangular window of two images.
double psnr(const Tensor3f& a, const Tensor3f& b, std::size_t margin = 0, double peak = 255.0);

}  // namespace nst
