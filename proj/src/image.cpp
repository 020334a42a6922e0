#include "nst/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace nst {

RgbImage read_png(const std::filesystem::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (png_image_begin_read_from_file(&png, path.c_str()) == 0) {
    throw Error("cannot read PNG " + path.string() + ": " + png.message);
  }
  png.format = PNG_FORMAT_RGB;
  RgbImage image(png.width, png.height);
  if (png_image_finish_read(&png, nullptr, image.pixels.data(), 0, nullptr) == 0) {
    png_image_free(&png);
    throw Error("cannot decode PNG " + path.string() + ": " + png.message);
  }
  return image;
}

void write_png(const RgbImage& image, const std::filesystem::path& path) {
  if (image.empty()) throw DimensionError("write_png: empty image");
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_RGB;
  if (png_image_write_to_file(&png, path.c_str(), 0, image.pixels.data(), 0, nullptr) == 0) {
    throw Error("cannot write PNG " + path.string() + ": " + png.message);
  }
}

Tensor3f to_planes(const RgbImage& image) {
  Tensor3f planes(3, image.height, image.width);
  for (std::size_t y = 0; y < image.height; ++y) {
    for (std::size_t x = 0; x < image.width; ++x) {
      for (std::size_t c = 0; c < 3; ++c) planes(c, y, x) = image.at(x, y, c);
    }
  }
  return planes;
}

RgbImage from_planes(const Tensor3f& planes) {
  if (planes.channels() != 3) throw DimensionError("from_planes: expected 3 channels, got " + planes.shape_string());
  RgbImage image(planes.width(), planes.height());
  for (std::size_t y = 0; y < image.height; ++y) {
    for (std::size_t x = 0; x < image.width; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        const float v = std::nearbyint(std::clamp(planes(c, y, x), 0.0f, 255.0f));
        image.at(x, y, c) = static_cast<std::uint8_t>(v);
      }
    }
  }
  return image;
}

namespace {

double cubic(double t) {
  constexpr double a = -0.5;
  t = std::abs(t);
  if (t < 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

struct Taps {
  std::vector<std::size_t> first;   // first source index per output sample
  std::vector<std::size_t> count;
  std::vector<std::vector<double>> weights;
};

// Per-output filter taps; the kernel widens when shrinking so downscaling is antialiased.
Taps make_taps(std::size_t src, std::size_t dst) {
  Taps taps;
  const double scale = static_cast<double>(src) / static_cast<double>(dst);
  const double support = 2.0 * std::max(scale, 1.0);
  const double stretch = std::max(scale, 1.0);
  for (std::size_t i = 0; i < dst; ++i) {
    const double center = (static_cast<double>(i) + 0.5) * scale - 0.5;
    const auto lo = static_cast<std::ptrdiff_t>(std::floor(center - support)) + 1;
    const auto hi = static_cast<std::ptrdiff_t>(std::floor(center + support));
    // Taps falling outside the source accumulate onto the edge pixels.
    std::vector<double> dense;
    std::ptrdiff_t first = -1;
    for (std::ptrdiff_t s = lo; s <= hi; ++s) {
      const double k = cubic((static_cast<double>(s) - center) / stretch);
      if (k == 0.0) continue;
      const auto clamped = std::clamp<std::ptrdiff_t>(s, 0, static_cast<std::ptrdiff_t>(src) - 1);
      if (first < 0) first = clamped;
      if (clamped < first) {
        dense.insert(dense.begin(), static_cast<std::size_t>(first - clamped), 0.0);
        first = clamped;
      }
      const auto off = static_cast<std::size_t>(clamped - first);
      if (off >= dense.size()) dense.resize(off + 1, 0.0);
      dense[off] += k;
    }
    double sum = 0.0;
    for (double v : dense) sum += v;
    for (double& v : dense) v /= sum;
    taps.first.push_back(static_cast<std::size_t>(first));
    taps.count.push_back(dense.size());
    taps.weights.push_back(std::move(dense));
  }
  return taps;
}

}  // namespace

Tensor3f resize_bicubic(const Tensor3f& image, std::size_t new_height, std::size_t new_width) {
  if (image.empty() || new_height == 0 || new_width == 0) {
    throw DimensionError("resize_bicubic: cannot resize " + image.shape_string() + " to " +
                         std::to_string(new_height) + "x" + std::to_string(new_width));
  }
  if (new_height == image.height() && new_width == image.width()) return image;

  const Taps tx = make_taps(image.width(), new_width);
  const Taps ty = make_taps(image.height(), new_height);
  Tensor3f horizontal(image.channels(), image.height(), new_width);
  for (std::size_t c = 0; c < image.channels(); ++c) {
    for (std::size_t y = 0; y < image.height(); ++y) {
      for (std::size_t x = 0; x < new_width; ++x) {
        double acc = 0.0;
        for (std::size_t k = 0; k < tx.count[x]; ++k) acc += tx.weights[x][k] * image(c, y, tx.first[x] + k);
        horizontal(c, y, x) = static_cast<float>(acc);
      }
    }
  }
  Tensor3f out(image.channels(), new_height, new_width);
  for (std::size_t c = 0; c < image.channels(); ++c) {
    for (std::size_t y = 0; y < new_height; ++y) {
      for (std::size_t x = 0; x < new_width; ++x) {
        double acc = 0.0;
        for (std::size_t k = 0; k < ty.count[y]; ++k) acc += ty.weights[y][k] * horizontal(c, ty.first[y] + k, x);
        out(c, y, x) = static_cast<float>(acc);
      }
    }
  }
  return out;
}

RgbImage resize_bicubic(const RgbImage& image, std::size_t new_width, std::size_t new_height) {
  return from_planes(resize_bicubic(to_planes(image), new_height, new_width));
}

Extent scale_to_long_edge(std::size_t width, std::size_t height, std::size_t long_edge) {
  if (width == 0 || height == 0 || long_edge == 0) throw DimensionError("scale_to_long_edge: zero extent");
  const double f = static_cast<double>(long_edge) / static_cast<double>(std::max(width, height));
  auto scaled = [f](std::size_t v) { return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(v * f))); };
  if (width >= height) return {long_edge, scaled(height)};
  return {scaled(width), long_edge};
}

Tensor3f rotate_scale(const Tensor3f& image, double degrees, double scale) {
  if (!std::isfinite(degrees) || !std::isfinite(scale)) throw ParameterError("rotate_scale: non-finite parameters");
  if (scale <= 0.0) throw ParameterError("rotate_scale: scale must be positive, got " + std::to_string(scale));
  if (image.empty()) return image;

  double cos_t = 0.0;
  double sin_t = 0.0;
  const double turns = degrees / 90.0;
  if (turns == std::floor(turns)) {
    static constexpr int kCos[4] = {1, 0, -1, 0};
    static constexpr int kSin[4] = {0, 1, 0, -1};
    const auto q = static_cast<int>(((static_cast<long long>(turns) % 4) + 4) % 4);
    cos_t = kCos[q];
    sin_t = kSin[q];
  } else {
    const double rad = degrees * std::numbers::pi / 180.0;
    cos_t = std::cos(rad);
    sin_t = std::sin(rad);
  }

  const std::size_t h = image.height();
  const std::size_t w = image.width();
  const double cx = (static_cast<double>(w) - 1.0) / 2.0;
  const double cy = (static_cast<double>(h) - 1.0) / 2.0;
  Tensor3f out(image.channels(), h, w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      // Inverse map: undo the scale, then rotate clockwise back into the source.
      const double dx = (static_cast<double>(x) - cx) / scale;
      const double dy = (static_cast<double>(y) - cy) / scale;
      const double sx = std::clamp(cx + cos_t * dx - sin_t * dy, 0.0, static_cast<double>(w - 1));
      const double sy = std::clamp(cy + sin_t * dx + cos_t * dy, 0.0, static_cast<double>(h - 1));
      const auto x0 = static_cast<std::size_t>(std::floor(sx));
      const auto y0 = static_cast<std::size_t>(std::floor(sy));
      const std::size_t x1 = std::min(x0 + 1, w - 1);
      const std::size_t y1 = std::min(y0 + 1, h - 1);
      const double fx = sx - static_cast<double>(x0);
      const double fy = sy - static_cast<double>(y0);
      for (std::size_t c = 0; c < image.channels(); ++c) {
        if (fx == 0.0 && fy == 0.0) {
          out(c, y, x) = image(c, y0, x0);
          continue;
        }
        const double top = (1.0 - fx) * image(c, y0, x0) + fx * image(c, y0, x1);
        const double bottom = (1.0 - fx) * image(c, y1, x0) + fx * image(c, y1, x1);
        out(c, y, x) = static_cast<float>((1.0 - fy) * top + fy * bottom);
      }
    }
  }
  return out;
}

double psnr(const Tensor3f& a, const Tensor3f& b, std::size_t margin, double peak) {
  require_same_shape(a, b, "psnr");
  if (2 * margin >= a.height() || 2 * margin >= a.width()) throw DimensionError("psnr: margin leaves no pixels");
  double sse = 0.0;
  std::size_t n = 0;
  for (std::size_t c = 0; c < a.channels(); ++c) {
    for (std::size_t y = margin; y < a.height() - margin; ++y) {
      for (std::size_t x = margin; x < a.width() - margin; ++x) {
        const double d = static_cast<double>(a(c, y, x)) - static_cast<double>(b(c, y, x));
        sse += d * d;
        ++n;
      }
    }
  }
  if (sse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / (sse / static_cast<double>(n)));
}

}  // namespace nst
