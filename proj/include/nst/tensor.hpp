#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "nst/error.hpp"

namespace nst {

/// Dense channels x height x width array, row-major within each channel plane.
template <typename T>
class Tensor3 {
 public:
  using value_type = T;

  Tensor3() = default;
  Tensor3(std::size_t channels, std::size_t height, std::size_t width, T fill = T{0})
      : channels_(channels), height_(height), width_(width), data_(channels * height * width, fill) {}
  Tensor3(std::size_t channels, std::size_t height, std::size_t width, std::vector<T> data)
      : channels_(channels), height_(height), width_(width), data_(std::move(data)) {
    if (data_.size() != channels_ * height_ * width_) {
      throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                           " does not match shape " + shape_string());
    }
  }

  std::size_t channels() const { return channels_; }
  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t plane_size() const { return height_ * width_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(std::size_t c, std::size_t y, std::size_t x) { return data_[(c * height_ + y) * width_ + x]; }
  const T& operator()(std::size_t c, std::size_t y, std::size_t x) const {
    return data_[(c * height_ + y) * width_ + x];
  }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  std::span<T> plane(std::size_t c) { return std::span<T>(data_).subspan(c * plane_size(), plane_size()); }
  std::span<const T> plane(std::size_t c) const {
    return std::span<const T>(data_).subspan(c * plane_size(), plane_size());
  }

  bool same_shape(const Tensor3& other) const {
    return channels_ == other.channels_ && height_ == other.height_ && width_ == other.width_;
  }

  std::string shape_string() const {
    return std::to_string(channels_) + "x" + std::to_string(height_) + "x" + std::to_string(width_);
  }

  template <typename U>
  Tensor3<U> cast() const {
    return Tensor3<U>(channels_, height_, width_, std::vector<U>(data_.begin(), data_.end()));
  }

  bool operator==(const Tensor3&) const = default;

 private:
  std::size_t channels_ = 0;
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<T> data_;
};

using Tensor3f = Tensor3<float>;
using Tensor3d = Tensor3<double>;

template <typename T>
void require_same_shape(const Tensor3<T>& a, const Tensor3<T>& b, const char* what) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(what) + ": shape mismatch " + a.shape_string() + " vs " + b.shape_string());
  }
}

/// 3x3 convolution filter bank with bias; weights laid out [out, in, 3, 3].
struct ConvKernel {
  std::size_t out_channels = 0;
  std::size_t in_channels = 0;
  std::vector<float> weights;
  std::vector<float> bias;

  static constexpr std::size_t kSize = 3;

  ConvKernel() = default;
  ConvKernel(std::size_t out, std::size_t in)
      : out_channels(out), in_channels(in), weights(out * in * kSize * kSize, 0.0f), bias(out, 0.0f) {}

  float& at(std::size_t o, std::size_t i, std::size_t ky, std::size_t kx) {
    return weights[((o * in_channels + i) * kSize + ky) * kSize + kx];
  }
  float at(std::size_t o, std::size_t i, std::size_t ky, std::size_t kx) const {
    return weights[((o * in_channels + i) * kSize + ky) * kSize + kx];
  }

  /// Throws DimensionError if the buffers disagree with the declared channel counts.
  void validate() const;
};

}  // namespace nst
