#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace nst {

enum class LayerKind { conv, pool };

struct LayerInfo {
  std::string_view name;
  LayerKind kind;
  std::size_t in_channels;
  std::size_t out_channels;
};

// VGG-19 convolutional feature chain in topological order. Conv entries name
// the post-rectifier activation.
inline constexpr std::array<LayerInfo, 21> kVgg19Layers{{
    {"conv1_1", LayerKind::conv, 3, 64},     {"conv1_2", LayerKind::conv, 64, 64},
    {"pool1", LayerKind::pool, 64, 64},      {"conv2_1", LayerKind::conv, 64, 128},
    {"conv2_2", LayerKind::conv, 128, 128},  {"pool2", LayerKind::pool, 128, 128},
    {"conv3_1", LayerKind::conv, 128, 256},  {"conv3_2", LayerKind::conv, 256, 256},
    {"conv3_3", LayerKind::conv, 256, 256},  {"conv3_4", LayerKind::conv, 256, 256},
    {"pool3", LayerKind::pool, 256, 256},    {"conv4_1", LayerKind::conv, 256, 512},
    {"conv4_2", LayerKind::conv, 512, 512},  {"conv4_3", LayerKind::conv, 512, 512},
    {"conv4_4", LayerKind::conv, 512, 512},  {"pool4", LayerKind::pool, 512, 512},
    {"conv5_1", LayerKind::conv, 512, 512},  {"conv5_2", LayerKind::conv, 512, 512},
    {"conv5_3", LayerKind::conv, 512, 512},  {"conv5_4", LayerKind::conv, 512, 512},
    {"pool5", LayerKind::pool, 512, 512},
}};

inline constexpr std::size_t kVgg19ConvCount = 16;

/// Position in the fixed layer table. Ordering follows network depth.
class LayerName {
 public:
  /// Accepts table names and the rectifier aliases relu1_1 ... relu5_4.
  static LayerName parse(std::string_view text);
  static LayerName at(std::size_t index);

  std::size_t index() const { return index_; }
  const LayerInfo& info() const { return kVgg19Layers[index_]; }
  std::string_view name() const { return info().name; }
  std::string str() const { return std::string(name()); }
  LayerKind kind() const { return info().kind; }

  auto operator<=>(const LayerName&) const = default;

 private:
  explicit LayerName(std::uint8_t index) : index_(index) {}
  std::uint8_t index_ = 0;
};

using LayerSet = std::set<LayerName>;

LayerSet parse_layer_set(const std::vector<std::string>& names);
std::vector<std::string> layer_names(const LayerSet& set);

/// Cumulative downsampling factor: product of the pooling kernel sizes up to and
/// including `layer`.
std::size_t feature_scale(LayerName layer);

/// Spatial size after the chain reaches `layer`, given the input size.
std::size_t spatial_extent(std::size_t input_extent, LayerName layer);

}  // namespace nst
