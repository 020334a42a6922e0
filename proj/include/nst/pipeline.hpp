#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nst/image.hpp"
#include "nst/losses.hpp"
#include "nst/optimizer.hpp"
#include "nst/weights.hpp"

namespace nst {

// ---------------------------------------------------------------------------
// Configuration

enum class InitMode { random, content };

InitMode parse_init_mode(std::string_view name);
std::string_view to_string(InitMode mode);

/// User-supplied rotation and uniform scale applied to the content image
/// before synthesis and undone afterwards.
struct Alignment {
  bool enabled = false;
  double rotation_deg = 0.0;
  double scale = 1.0;
};

struct TransferConfig {
  std::string preset;  // name the config was expanded from, empty if custom
  LossConfig loss;
  InitMode init = InitMode::content;
  Alignment align;
  PoolingMode pooling = PoolingMode::average;
  OptimizerSettings optimizer;
  std::optional<Extent> output_size;  // texture mode only
  std::uint64_t seed = 0;
  /// Standard deviation (8-bit units) of the random initialisation around the channel means.
  double noise_sigma = 50.0;
};

/// conv1_1, conv2_1, conv3_1, conv4_1, conv5_1
const LayerSet& style_layer_set();
/// conv1_1, pool1, conv2_1, pool2, conv3_1, pool3, conv4_1, pool4
const LayerSet& texture_layer_set();

/// The eight experiment configurations, "I" through "VIII".
TransferConfig preset(std::string_view name);
const std::vector<std::string>& preset_names();

// ---------------------------------------------------------------------------
// Single-image synthesis

struct TransferResult {
  RgbImage image;
  Tensor3f tensor;  // preprocessed result before quantisation
  OptTrace trace;
};

struct RunHooks {
  IterationCallback on_iteration;
};

/// Solves the content + lambda * style objective. The output has the content
/// image's dimensions and frame (alignment is undone).
TransferResult synthesize(const RgbImage& content, const RgbImage& style, const TransferConfig& cfg,
                          const WeightStore& store, const RunHooks& hooks = {});

/// Preprocessed-tensor form of synthesize. Alignment is the caller's concern.
TransferResult synthesize_tensor(const Tensor3f& content, const Tensor3f& style, const TransferConfig& cfg,
                                 const WeightStore& store, const RunHooks& hooks = {});

/// Style-only objective from seeded noise. Output size is cfg.output_size, or
/// the style image's size when unset.
TransferResult synthesize_texture(const RgbImage& style, const TransferConfig& cfg, const WeightStore& store,
                                  const RunHooks& hooks = {});

/// Seeded Gaussian image around the channel means, already clamped to range.
Tensor3f random_init(std::size_t height, std::size_t width, const PreprocessMeta& meta, double sigma,
                     std::uint64_t seed);

// ---------------------------------------------------------------------------
// Alignment

RgbImage align_content(const RgbImage& image, double rotation_deg, double scale);
Tensor3f align_content(const Tensor3f& image, double rotation_deg, double scale);
/// Inverse of align_content with the same parameters.
Tensor3f unalign_content(const Tensor3f& image, double rotation_deg, double scale);

// ---------------------------------------------------------------------------
// Part manifests

struct Rect {
  std::size_t x = 0;
  std::size_t y = 0;
  std::size_t w = 0;
  std::size_t h = 0;

  bool contains(std::size_t px, std::size_t py) const { return px >= x && px < x + w && py >= y && py < y + h; }
  bool fits_in(std::size_t width, std::size_t height) const {
    return w > 0 && h > 0 && x + w <= width && y + h <= height;
  }
  bool operator==(const Rect&) const = default;
};

struct Part {
  std::string name;
  Rect content_rect;
  Rect style_rect;
  std::size_t overlap_margin = 0;
};

struct PartManifest {
  Extent canvas;
  std::vector<Part> parts;

  /// Throws ManifestError naming the part if a rect leaves the canvas (or the
  /// style image, when given) or overlapping parts share less than their margin.
  void validate(std::optional<Extent> style_extent = std::nullopt) const;
};

PartManifest parse_manifest(const std::string& json_text);
PartManifest load_manifest(const std::filesystem::path& path);
std::string manifest_to_json(const PartManifest& manifest);

enum class PartSide { content, style };
enum class FeatherProfile { linear, raised_cosine };

std::vector<RgbImage> split_parts(const RgbImage& image, const PartManifest& manifest, PartSide side);

/// Per-part blend weights over each part's content rect (row-major h x w).
/// At every covered canvas pixel the weights of the covering parts sum to 1.
std::vector<std::vector<double>> blend_weights(const PartManifest& manifest,
                                               FeatherProfile profile = FeatherProfile::linear);

/// Overlays parts (each sized like its content rect) onto `base`, feathering
/// overlaps over each part's margin.
Tensor3f merge_parts(const std::vector<Tensor3f>& parts, const PartManifest& manifest, const Tensor3f& base,
                     FeatherProfile profile = FeatherProfile::linear);
RgbImage merge_parts(const std::vector<RgbImage>& parts, const PartManifest& manifest, const RgbImage& base,
                     FeatherProfile profile = FeatherProfile::linear);

struct PartResult {
  std::string name;
  TransferResult result;
};

/// Synthesises every part independently, running up to `jobs` at once.
std::vector<PartResult> synthesize_parts(const RgbImage& content, const RgbImage& style,
                                         const PartManifest& manifest, const TransferConfig& cfg,
                                         const WeightStore& store, unsigned jobs = 1);

// ---------------------------------------------------------------------------
// Super-resolution

/// Strictly increasing long-edge sizes alpha_0 < ... < alpha_K.
class ScaleSchedule {
 public:
  explicit ScaleSchedule(std::vector<std::size_t> scales);
  /// alpha_K = `to`, each earlier scale half the next, down to no less than `from`.
  static ScaleSchedule geometric(std::size_t from, std::size_t to, double ratio = 2.0);
  static ScaleSchedule parse(std::string_view comma_separated);

  const std::vector<std::size_t>& scales() const { return scales_; }
  std::size_t stages() const { return scales_.size(); }
  std::size_t final_scale() const { return scales_.back(); }

 private:
  std::vector<std::size_t> scales_;
};

struct StageResult {
  std::size_t scale = 0;
  Extent extent;
  TransferResult result;
};

struct SuperResolveResult {
  RgbImage image;
  std::vector<StageResult> stages;
};

using StageCallback = std::function<void(const StageResult&)>;

/// Coarse-to-fine transfer: stage k synthesises at alpha_k against the style
/// downsized to alpha_k, starting from the previous stage's result resized to
/// the stage grid. cfg.init must be content.
SuperResolveResult super_resolve(const RgbImage& content, const RgbImage& style, const ScaleSchedule& schedule,
                                 const TransferConfig& cfg, const WeightStore& store, const RunHooks& hooks = {},
                                 const StageCallback& on_stage = {});

}  // namespace nst
