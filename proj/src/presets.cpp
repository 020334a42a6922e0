#include "nst/pipeline.hpp"

#include <array>

namespace nst {

InitMode parse_init_mode(std::string_view name) {
  if (name == "random") return InitMode::random;
  if (name == "content") return InitMode::content;
  throw NameError("unknown init mode '" + std::string(name) + "' (expected random or content)");
}

std::string_view to_string(InitMode mode) { return mode == InitMode::random ? "random" : "content"; }

const LayerSet& style_layer_set() {
  static const LayerSet set = parse_layer_set({"conv1_1", "conv2_1", "conv3_1", "conv4_1", "conv5_1"});
  return set;
}

const LayerSet& texture_layer_set() {
  static const LayerSet set =
      parse_layer_set({"conv1_1", "pool1", "conv2_1", "pool2", "conv3_1", "pool3", "conv4_1", "pool4"});
  return set;
}

namespace {

enum class StyleSet { style, texture, texture_conv5 };

struct PresetRow {
  std::string_view name;
  StyleSet style;
  std::string_view content_layer;
  double lambda;
  InitMode init;
  bool align;
};

// Rows I-V and VI-VIII of the two experiment tables.
constexpr std::array<PresetRow, 8> kPresetTable{{
    {"I", StyleSet::style, "conv4_2", 20.0, InitMode::random, false},
    {"II", StyleSet::texture, "conv4_2", 20.0, InitMode::random, false},
    {"III", StyleSet::texture, "conv4_2", 20.0, InitMode::random, true},
    {"IV", StyleSet::texture_conv5, "conv5_2", 200.0, InitMode::content, false},
    {"V", StyleSet::texture_conv5, "conv5_2", 200.0, InitMode::content, true},
    {"VI", StyleSet::texture, "conv4_2", 20.0, InitMode::content, true},
    {"VII", StyleSet::texture_conv5, "conv4_2", 20.0, InitMode::content, true},
    {"VIII", StyleSet::texture_conv5, "conv4_2", 200.0, InitMode::content, true},
}};

}  // namespace

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& row : kPresetTable) out.emplace_back(row.name);
    return out;
  }();
  return names;
}

TransferConfig preset(std::string_view name) {
  for (const auto& row : kPresetTable) {
    if (row.name != name) continue;
    TransferConfig cfg;
    cfg.preset = std::string(row.name);
    switch (row.style) {
      case StyleSet::style:
        cfg.loss.style_layers = style_layer_set();
        break;
      case StyleSet::texture:
        cfg.loss.style_layers = texture_layer_set();
        break;
      case StyleSet::texture_conv5:
        cfg.loss.style_layers = texture_layer_set();
        cfg.loss.style_layers.insert(LayerName::parse("conv5_1"));
        break;
    }
    cfg.loss.content_layers = {LayerName::parse(row.content_layer)};
    cfg.loss.lambda = row.lambda;
    cfg.init = row.init;
    cfg.align.enabled = row.align;
    return cfg;
  }
  std::string valid;
  for (const auto& n : preset_names()) valid += (valid.empty() ? "" : ", ") + n;
  throw NameError("unknown preset '" + std::string(name) + "' (valid presets: " + valid + ")");
}

}  // namespace nst
