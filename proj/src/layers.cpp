#include "nst/layers.hpp"

#include "nst/error.hpp"

namespace nst {

LayerName LayerName::parse(std::string_view text) {
  std::string key(text);
  if (key.rfind("relu", 0) == 0) key = "conv" + key.substr(4);
  for (std::size_t i = 0; i < kVgg19Layers.size(); ++i) {
    if (kVgg19Layers[i].name == key) return LayerName(static_cast<std::uint8_t>(i));
  }
  throw NameError("unknown layer '" + std::string(text) + "'");
}

LayerName LayerName::at(std::size_t index) {
  if (index >= kVgg19Layers.size()) throw NameError("layer index " + std::to_string(index) + " out of range");
  return LayerName(static_cast<std::uint8_t>(index));
}

LayerSet parse_layer_set(const std::vector<std::string>& names) {
  LayerSet set;
  for (const auto& n : names) set.insert(LayerName::parse(n));
  return set;
}

std::vector<std::string> layer_names(const LayerSet& set) {
  std::vector<std::string> out;
  out.reserve(set.size());
  for (auto l : set) out.push_back(l.str());
  return out;
}

std::size_t feature_scale(LayerName layer) {
  std::size_t scale = 1;
  for (std::size_t i = 0; i <= layer.index(); ++i) {
    if (kVgg19Layers[i].kind == LayerKind::pool) scale *= 2;
  }
  return scale;
}

std::size_t spatial_extent(std::size_t input_extent, LayerName layer) {
  std::size_t extent = input_extent;
  for (std::size_t i = 0; i <= layer.index(); ++i) {
    if (kVgg19Layers[i].kind == LayerKind::pool) extent = (extent + 1) / 2;
  }
  return extent;
}

}  // namespace nst
