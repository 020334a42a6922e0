#include "nst/tensor_ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>

namespace nst {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using FloatRowMap = Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

// Bound on im2col buffer size (doubles) before splitting the image into row bands.
constexpr std::size_t kMaxColumnElements = std::size_t{1} << 22;

std::size_t rows_per_band(std::size_t patch_len, std::size_t width, std::size_t height) {
  const std::size_t per_row = std::max<std::size_t>(1, patch_len * width);
  return std::clamp<std::size_t>(kMaxColumnElements / per_row, 1, height);
}

// Fills `cols` (patch_len x band_rows*width) with zero-padded 3x3 patches of
// input rows [row0, row0 + band_rows).
template <typename T>
void im2col_band(const Tensor3<T>& input, std::size_t row0, std::size_t band_rows, RowMatrix& cols) {
  const auto h = static_cast<std::ptrdiff_t>(input.height());
  const auto w = static_cast<std::ptrdiff_t>(input.width());
  const std::size_t n = band_rows * input.width();
  cols.resize(static_cast<Eigen::Index>(input.channels() * 9), static_cast<Eigen::Index>(n));
  for (std::size_t c = 0; c < input.channels(); ++c) {
    for (std::ptrdiff_t ky = 0; ky < 3; ++ky) {
      for (std::ptrdiff_t kx = 0; kx < 3; ++kx) {
        double* dst = cols.row(static_cast<Eigen::Index>((c * 3 + ky) * 3 + kx)).data();
        for (std::size_t r = 0; r < band_rows; ++r) {
          const std::ptrdiff_t y = static_cast<std::ptrdiff_t>(row0 + r) + ky - 1;
          double* out = dst + r * input.width();
          if (y < 0 || y >= h) {
            std::fill(out, out + w, 0.0);
            continue;
          }
          for (std::ptrdiff_t x = 0; x < w; ++x) {
            const std::ptrdiff_t sx = x + kx - 1;
            out[x] = (sx < 0 || sx >= w) ? 0.0 : static_cast<double>(input(c, static_cast<std::size_t>(y),
                                                                           static_cast<std::size_t>(sx)));
          }
        }
      }
    }
  }
}

RowMatrix weight_matrix(const ConvKernel& kernel) {
  FloatRowMap map(kernel.weights.data(), static_cast<Eigen::Index>(kernel.out_channels),
                  static_cast<Eigen::Index>(kernel.in_channels * 9));
  return map.cast<double>();
}

}  // namespace

void ConvKernel::validate() const {
  if (weights.size() != out_channels * in_channels * kSize * kSize || bias.size() != out_channels) {
    throw DimensionError("conv kernel buffers do not match " + std::to_string(out_channels) + "x" +
                         std::to_string(in_channels) + "x3x3");
  }
}

template <typename T>
Tensor3<T> conv2d_forward(const Tensor3<T>& input, const ConvKernel& kernel) {
  kernel.validate();
  if (input.channels() != kernel.in_channels) {
    throw DimensionError("conv2d_forward: input has " + std::to_string(input.channels()) +
                         " channels, kernel expects " + std::to_string(kernel.in_channels));
  }
  Tensor3<T> out(kernel.out_channels, input.height(), input.width());
  if (input.empty()) return out;

  const RowMatrix w = weight_matrix(kernel);
  const std::size_t band = rows_per_band(kernel.in_channels * 9, input.width(), input.height());
  RowMatrix cols;
  RowMatrix result;
  for (std::size_t row0 = 0; row0 < input.height(); row0 += band) {
    const std::size_t rows = std::min(band, input.height() - row0);
    im2col_band(input, row0, rows, cols);
    result.noalias() = w * cols;
    const std::size_t n = rows * input.width();
    for (std::size_t o = 0; o < kernel.out_channels; ++o) {
      const double b = kernel.bias[o];
      const double* src = result.row(static_cast<Eigen::Index>(o)).data();
      T* dst = &out(o, row0, 0);
      for (std::size_t i = 0; i < n; ++i) dst[i] = static_cast<T>(src[i] + b);
    }
  }
  return out;
}

template <typename T>
Tensor3<T> conv2d_backward_input(const Tensor3<T>& grad_out, const ConvKernel& kernel) {
  kernel.validate();
  if (grad_out.channels() != kernel.out_channels) {
    throw DimensionError("conv2d_backward_input: gradient has " + std::to_string(grad_out.channels()) +
                         " channels, kernel produces " + std::to_string(kernel.out_channels));
  }
  const std::size_t h = grad_out.height();
  const std::size_t w = grad_out.width();
  Tensor3<T> grad_in(kernel.in_channels, h, w);
  if (grad_out.empty()) return grad_in;

  const RowMatrix wt = weight_matrix(kernel).transpose();
  std::vector<double> acc(kernel.in_channels * h * w, 0.0);
  const std::size_t band = rows_per_band(kernel.in_channels * 9, w, h);
  RowMatrix g;
  RowMatrix cols;
  for (std::size_t row0 = 0; row0 < h; row0 += band) {
    const std::size_t rows = std::min(band, h - row0);
    const std::size_t n = rows * w;
    g.resize(static_cast<Eigen::Index>(kernel.out_channels), static_cast<Eigen::Index>(n));
    for (std::size_t o = 0; o < kernel.out_channels; ++o) {
      const T* src = &grad_out(o, row0, 0);
      double* dst = g.row(static_cast<Eigen::Index>(o)).data();
      for (std::size_t i = 0; i < n; ++i) dst[i] = static_cast<double>(src[i]);
    }
    cols.noalias() = wt * g;
    // col2im: scatter each patch entry back onto the input pixel it was read from.
    for (std::size_t c = 0; c < kernel.in_channels; ++c) {
      for (std::size_t ky = 0; ky < 3; ++ky) {
        for (std::size_t kx = 0; kx < 3; ++kx) {
          const double* src = cols.row(static_cast<Eigen::Index>((c * 3 + ky) * 3 + kx)).data();
          for (std::size_t r = 0; r < rows; ++r) {
            const std::ptrdiff_t y = static_cast<std::ptrdiff_t>(row0 + r + ky) - 1;
            if (y < 0 || y >= static_cast<std::ptrdiff_t>(h)) continue;
            double* dst = &acc[(c * h + static_cast<std::size_t>(y)) * w];
            const double* row = src + r * w;
            const std::size_t x_begin = kx == 0 ? 1 : 0;
            const std::size_t x_end = kx == 2 ? w - 1 : w;
            for (std::size_t x = x_begin; x < x_end; ++x) dst[x + kx - 1] += row[x];
          }
        }
      }
    }
  }
  for (std::size_t i = 0; i < acc.size(); ++i) grad_in[i] = static_cast<T>(acc[i]);
  return grad_in;
}

template <typename T>
Tensor3<T> relu_forward(const Tensor3<T>& input) {
  Tensor3<T> out = input;
  for (auto& v : out.values()) v = v > T{0} ? v : T{0};
  return out;
}

template <typename T>
Tensor3<T> relu_backward(const Tensor3<T>& grad_out, const Tensor3<T>& input) {
  require_same_shape(grad_out, input, "relu_backward");
  Tensor3<T> grad_in(input.channels(), input.height(), input.width());
  for (std::size_t i = 0; i < input.size(); ++i) grad_in[i] = input[i] > T{0} ? grad_out[i] : T{0};
  return grad_in;
}

PoolingMode parse_pooling_mode(std::string_view name) {
  if (name == "max") return PoolingMode::max;
  if (name == "avg" || name == "average") return PoolingMode::average;
  throw NameError("unknown pooling mode '" + std::string(name) + "' (expected max or avg)");
}

std::string_view to_string(PoolingMode mode) { return mode == PoolingMode::max ? "max" : "avg"; }

template <typename T>
PoolResult<T> pool_forward(const Tensor3<T>& input, PoolingMode mode) {
  if (input.empty()) throw DimensionError("pool_forward: empty input " + input.shape_string());
  const std::size_t h = input.height();
  const std::size_t w = input.width();
  const std::size_t oh = (h + 1) / 2;
  const std::size_t ow = (w + 1) / 2;

  PoolResult<T> result{Tensor3<T>(input.channels(), oh, ow), {}};
  PoolRecord& rec = result.record;
  rec.mode = mode;
  rec.channels = input.channels();
  rec.in_height = h;
  rec.in_width = w;
  rec.out_height = oh;
  rec.out_width = ow;
  if (mode == PoolingMode::max) {
    rec.argmax.resize(input.channels() * oh * ow);
  } else {
    rec.window_counts.resize(oh * ow);
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        const std::size_t wy = std::min<std::size_t>(2, h - 2 * oy);
        const std::size_t wx = std::min<std::size_t>(2, w - 2 * ox);
        rec.window_counts[oy * ow + ox] = static_cast<std::uint8_t>(wy * wx);
      }
    }
  }

  for (std::size_t c = 0; c < input.channels(); ++c) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      const std::size_t y1 = std::min(2 * oy + 2, h);
      for (std::size_t ox = 0; ox < ow; ++ox) {
        const std::size_t x1 = std::min(2 * ox + 2, w);
        if (mode == PoolingMode::max) {
          std::size_t best = (c * h + 2 * oy) * w + 2 * ox;
          for (std::size_t y = 2 * oy; y < y1; ++y) {
            for (std::size_t x = 2 * ox; x < x1; ++x) {
              const std::size_t idx = (c * h + y) * w + x;
              if (input[idx] > input[best]) best = idx;
            }
          }
          result.output(c, oy, ox) = input[best];
          rec.argmax[(c * oh + oy) * ow + ox] = static_cast<std::uint32_t>(best);
        } else {
          double sum = 0.0;
          for (std::size_t y = 2 * oy; y < y1; ++y) {
            for (std::size_t x = 2 * ox; x < x1; ++x) sum += static_cast<double>(input(c, y, x));
          }
          result.output(c, oy, ox) = static_cast<T>(sum / rec.window_counts[oy * ow + ox]);
        }
      }
    }
  }
  return result;
}

template <typename T>
Tensor3<T> pool_backward(const Tensor3<T>& grad_out, const PoolRecord& rec) {
  if (grad_out.channels() != rec.channels || grad_out.height() != rec.out_height ||
      grad_out.width() != rec.out_width) {
    throw DimensionError("pool_backward: gradient " + grad_out.shape_string() + " does not match pooling record " +
                         std::to_string(rec.channels) + "x" + std::to_string(rec.out_height) + "x" +
                         std::to_string(rec.out_width));
  }
  Tensor3<T> grad_in(rec.channels, rec.in_height, rec.in_width);
  if (rec.mode == PoolingMode::max) {
    if (rec.argmax.size() != grad_out.size()) throw DimensionError("pool_backward: truncated max-pool record");
    for (std::size_t i = 0; i < grad_out.size(); ++i) grad_in[rec.argmax[i]] += grad_out[i];
    return grad_in;
  }
  if (rec.window_counts.size() != rec.out_height * rec.out_width) {
    throw DimensionError("pool_backward: truncated average-pool record");
  }
  for (std::size_t c = 0; c < rec.channels; ++c) {
    for (std::size_t oy = 0; oy < rec.out_height; ++oy) {
      const std::size_t y1 = std::min(2 * oy + 2, rec.in_height);
      for (std::size_t ox = 0; ox < rec.out_width; ++ox) {
        const std::size_t x1 = std::min(2 * ox + 2, rec.in_width);
        const T share = grad_out(c, oy, ox) / static_cast<T>(rec.window_counts[oy * rec.out_width + ox]);
        for (std::size_t y = 2 * oy; y < y1; ++y) {
          for (std::size_t x = 2 * ox; x < x1; ++x) grad_in(c, y, x) = share;
        }
      }
    }
  }
  return grad_in;
}

template <typename T>
double dot(const Tensor3<T>& a, const Tensor3<T>& b) {
  require_same_shape(a, b, "dot");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return sum;
}

template <typename T>
bool all_finite(const Tensor3<T>& t) {
  return std::all_of(t.values().begin(), t.values().end(), [](T v) { return std::isfinite(v); });
}

#define NST_INSTANTIATE_TENSOR_OPS(T)                                                 \
  template Tensor3<T> conv2d_forward<T>(const Tensor3<T>&, const ConvKernel&);        \
  template Tensor3<T> conv2d_backward_input<T>(const Tensor3<T>&, const ConvKernel&); \
  template Tensor3<T> relu_forward<T>(const Tensor3<T>&);                             \
  template Tensor3<T> relu_backward<T>(const Tensor3<T>&, const Tensor3<T>&);         \
  template PoolResult<T> pool_forward<T>(const Tensor3<T>&, PoolingMode);             \
  template Tensor3<T> pool_backward<T>(const Tensor3<T>&, const PoolRecord&);         \
  template double dot<T>(const Tensor3<T>&, const Tensor3<T>&);                       \
  template bool all_finite<T>(const Tensor3<T>&);

NST_INSTANTIATE_TENSOR_OPS(float)
NST_INSTANTIATE_TENSOR_OPS(double)

}  // namespace nst
