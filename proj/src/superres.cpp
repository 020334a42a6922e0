#include <charconv>
#include <cmath>

#include "nst/pipeline.hpp"
#include "nst/vgg.hpp"

namespace nst {

ScaleSchedule::ScaleSchedule(std::vector<std::size_t> scales) : scales_(std::move(scales)) {
  if (scales_.empty()) throw ScheduleError("scale schedule is empty");
  if (scales_.front() == 0) throw ScheduleError("scale schedule entries must be positive");
  for (std::size_t k = 1; k < scales_.size(); ++k) {
    if (scales_[k] <= scales_[k - 1]) {
      throw ScheduleError("scale schedule must be strictly increasing: " + std::to_string(scales_[k - 1]) +
                          " then " + std::to_string(scales_[k]));
    }
  }
}

ScaleSchedule ScaleSchedule::geometric(std::size_t from, std::size_t to, double ratio) {
  if (!(ratio > 1.0)) throw ScheduleError("geometric schedule ratio must exceed 1");
  if (from == 0 || from > to) throw ScheduleError("geometric schedule needs 0 < from <= to");
  std::vector<std::size_t> scales{to};
  for (;;) {
    const auto next = static_cast<std::size_t>(std::lround(static_cast<double>(scales.back()) / ratio));
    if (next < from || next >= scales.back()) break;
    scales.push_back(next);
  }
  return ScaleSchedule(std::vector<std::size_t>(scales.rbegin(), scales.rend()));
}

ScaleSchedule ScaleSchedule::parse(std::string_view text) {
  std::vector<std::size_t> scales;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const std::string_view item = text.substr(0, comma);
    std::size_t value = 0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), value);
    if (ec != std::errc{} || ptr != item.data() + item.size()) {
      throw ScheduleError("bad schedule entry '" + std::string(item) + "'");
    }
    scales.push_back(value);
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return ScaleSchedule(std::move(scales));
}

SuperResolveResult super_resolve(const RgbImage& content, const RgbImage& style, const ScaleSchedule& schedule,
                                 const TransferConfig& cfg, const WeightStore& store, const RunHooks& hooks,
                                 const StageCallback& on_stage) {
  if (content.empty() || style.empty()) throw DimensionError("super_resolve: empty content or style image");
  if (schedule.final_scale() != style.long_edge()) {
    throw ScheduleError("final schedule scale " + std::to_string(schedule.final_scale()) +
                        " does not match the style image long edge " + std::to_string(style.long_edge()));
  }
  if (cfg.init != InitMode::content) throw ParameterError("super-resolution stages require content initialisation");

  Tensor3f current = preprocess(content, store.meta);
  if (cfg.align.enabled) current = align_content(current, cfg.align.rotation_deg, cfg.align.scale);
  const Tensor3f style_full = preprocess(style, store.meta);

  auto unalign = [&cfg](const Tensor3f& t) {
    return cfg.align.enabled ? unalign_content(t, cfg.align.rotation_deg, cfg.align.scale) : t;
  };

  TransferConfig stage_cfg = cfg;
  stage_cfg.align.enabled = false;

  SuperResolveResult out;
  for (const std::size_t scale : schedule.scales()) {
    const Extent grid = scale_to_long_edge(style.width, style.height, scale);
    const Tensor3f style_k = resize_bicubic(style_full, grid.height, grid.width);
    const Tensor3f content_k = resize_bicubic(current, grid.height, grid.width);

    StageResult stage;
    stage.scale = scale;
    stage.extent = grid;
    stage.result = synthesize_tensor(content_k, style_k, stage_cfg, store, hooks);
    if (cfg.align.enabled) stage.result.image = deprocess(unalign(stage.result.tensor), store.meta);
    current = stage.result.tensor;
    if (on_stage) on_stage(stage);
    out.stages.push_back(std::move(stage));
  }
  out.image = deprocess(unalign(current), store.meta);
  return out;
}

}  // namespace nst
