#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "nst/tensor.hpp"

namespace nst {

/// Canonical input transform of the pretrained model.
struct PreprocessMeta {
  std::string channel_order = "RGB";  // order of tensor channels in terms of image channels
  std::array<float, 3> mean{123.68f, 116.779f, 103.939f};  // per tensor channel
  std::string pooling_hint = "max";
};

/// Immutable conv parameters for the VGG-19 feature chain, keyed by layer name.
struct WeightStore {
  std::uint32_t format_version = 1;
  PreprocessMeta meta;
  std::map<std::string, ConvKernel> kernels;

  const ConvKernel& kernel(const std::string& layer) const;
};

// Container layout: "VGWT", u32 version, u64 header length, UTF-8 JSON header,
// then little-endian f32 blobs in header order.
inline constexpr char kWeightMagic[4] = {'V', 'G', 'W', 'T'};
inline constexpr std::uint32_t kWeightFormatVersion = 1;

/// Reads and validates a container. Throws FormatError for bad magic, version,
/// or header; ValidationError naming the tensor for missing, misshapen, or
/// truncated data.
WeightStore load_weights(const std::filesystem::path& path);

void save_weights(const WeightStore& store, const std::filesystem::path& path);

/// Checks that the store holds exactly the 16 VGG-19 conv layers with their shapes.
void validate_store(const WeightStore& store);

/// Seeded He-initialised weights with VGG-19 shapes, for tests and desk runs.
WeightStore random_weight_store(std::uint64_t seed);

/// Parsed container header only; used by `inspect`.
struct WeightHeader {
  std::uint32_t version = 0;
  std::uint64_t header_length = 0;
  std::string json;
};
WeightHeader read_weight_header(const std::filesystem::path& path);

}  // namespace nst
