#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "nst/tensor.hpp"

namespace nst {

// Forward and adjoint kernels for the fixed VGG building blocks: 3x3 stride-1
// zero-padded convolution, rectifier, and 2x2 stride-2 pooling. Convolution and
// its adjoint accumulate in double regardless of the storage type T.

template <typename T>
Tensor3<T> conv2d_forward(const Tensor3<T>& input, const ConvKernel& kernel);

/// Gradient with respect to the convolution input; the bias does not contribute.
template <typename T>
Tensor3<T> conv2d_backward_input(const Tensor3<T>& grad_out, const ConvKernel& kernel);

template <typename T>
Tensor3<T> relu_forward(const Tensor3<T>& input);

/// `input` may be either the pre- or post-rectifier activation; only its sign is used.
template <typename T>
Tensor3<T> relu_backward(const Tensor3<T>& grad_out, const Tensor3<T>& input);

enum class PoolingMode { max, average };

PoolingMode parse_pooling_mode(std::string_view name);
std::string_view to_string(PoolingMode mode);

/// What pool_backward needs to route gradients: argmax positions for max
/// pooling, per-window pixel counts for average pooling. Trailing odd rows
/// and columns form truncated windows.
struct PoolRecord {
  PoolingMode mode = PoolingMode::average;
  std::size_t channels = 0;
  std::size_t in_height = 0;
  std::size_t in_width = 0;
  std::size_t out_height = 0;
  std::size_t out_width = 0;
  std::vector<std::uint32_t> argmax;         // max: flat input index per output element
  std::vector<std::uint8_t> window_counts;   // average: valid pixels per output position
};

template <typename T>
struct PoolResult {
  Tensor3<T> output;
  PoolRecord record;
};

template <typename T>
PoolResult<T> pool_forward(const Tensor3<T>& input, PoolingMode mode);

template <typename T>
Tensor3<T> pool_backward(const Tensor3<T>& grad_out, const PoolRecord& record);

/// Inner product over all elements, accumulated in double.
template <typename T>
double dot(const Tensor3<T>& a, const Tensor3<T>& b);

template <typename T>
bool all_finite(const Tensor3<T>& t);

}  // namespace nst
