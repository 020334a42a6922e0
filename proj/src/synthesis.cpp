#include <random>

#include "nst/pipeline.hpp"
#include "nst/vgg.hpp"

namespace nst {

Tensor3f random_init(std::size_t height, std::size_t width, const PreprocessMeta& meta, double sigma,
                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  Tensor3f x(3, height, width);
  for (auto& v : x.values()) v = static_cast<float>(noise(rng));
  clamp_in_place(x, meta);
  return x;
}

TransferResult synthesize_tensor(const Tensor3f& content, const Tensor3f& style, const TransferConfig& cfg,
                                 const WeightStore& store, const RunHooks& hooks) {
  if (content.empty() || style.empty()) throw DimensionError("synthesize: empty content or style image");
  cfg.loss.validate();

  const auto content_target = build_content_target(content, store, cfg.loss.content_layers, cfg.pooling);
  const StyleTarget style_target =
      cfg.loss.lambda > 0.0 ? build_style_target(style, store, cfg.loss, cfg.pooling) : StyleTarget{};

  Tensor3f init = cfg.init == InitMode::content
                      ? content
                      : random_init(content.height(), content.width(), store.meta, cfg.noise_sigma, cfg.seed);

  const Objective objective = [&](const Tensor3f& x) {
    return total_loss(x, content_target, style_target, cfg.loss, store, cfg.pooling);
  };
  const Projection project = [&store](Tensor3f& x) { clamp_in_place(x, store.meta); };

  auto optimized = minimize(objective, std::move(init), cfg.optimizer, project, hooks.on_iteration);
  TransferResult result;
  result.image = deprocess(optimized.image, store.meta);
  result.tensor = std::move(optimized.image);
  result.trace = std::move(optimized.trace);
  return result;
}

TransferResult synthesize(const RgbImage& content, const RgbImage& style, const TransferConfig& cfg,
                          const WeightStore& store, const RunHooks& hooks) {
  if (content.empty() || style.empty()) throw DimensionError("synthesize: empty content or style image");
  Tensor3f content_t = preprocess(content, store.meta);
  const Tensor3f style_t = preprocess(style, store.meta);
  if (cfg.align.enabled) content_t = align_content(content_t, cfg.align.rotation_deg, cfg.align.scale);

  TransferResult result = synthesize_tensor(content_t, style_t, cfg, store, hooks);
  if (cfg.align.enabled) {
    result.tensor = unalign_content(result.tensor, cfg.align.rotation_deg, cfg.align.scale);
    result.image = deprocess(result.tensor, store.meta);
  }
  return result;
}

TransferResult synthesize_texture(const RgbImage& style, const TransferConfig& cfg, const WeightStore& store,
                                  const RunHooks& hooks) {
  if (style.empty()) throw DimensionError("synthesize_texture: empty style image");
  if (cfg.init != InitMode::random) throw ParameterError("texture synthesis requires random initialisation");
  if (cfg.loss.style_layers.empty()) throw ParameterError("texture synthesis needs at least one style layer");

  TransferConfig texture_cfg = cfg;
  texture_cfg.loss.content_layers.clear();
  texture_cfg.loss.lambda = 1.0;
  const Extent size = cfg.output_size.value_or(Extent{style.width, style.height});
  const Tensor3f placeholder(3, size.height, size.width);
  return synthesize_tensor(placeholder, preprocess(style, store.meta), texture_cfg, store, hooks);
}

Tensor3f align_content(const Tensor3f& image, double rotation_deg, double scale) {
  return rotate_scale(image, rotation_deg, scale);
}

RgbImage align_content(const RgbImage& image, double rotation_deg, double scale) {
  return from_planes(rotate_scale(to_planes(image), rotation_deg, scale));
}

Tensor3f unalign_content(const Tensor3f& image, double rotation_deg, double scale) {
  if (!(scale > 0.0)) throw ParameterError("alignment scale must be positive");
  return rotate_scale(image, -rotation_deg, 1.0 / scale);
}

}  // namespace nst
