#include <doctest.h>

#include "nst/pipeline.hpp"
#include "nst/vgg.hpp"
#include "support/oracles.hpp"

using namespace nst;
using namespace nst::testing;

namespace {

RgbImage scene(std::size_t w, std::size_t h, double phase) {
  RgbImage img(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double u = static_cast<double>(x) / w;
      const double v = static_cast<double>(y) / h;
      for (std::size_t c = 0; c < 3; ++c) {
        img.at(x, y, c) = static_cast<std::uint8_t>(
            128 + 80 * std::sin(6.0 * u + 1.3 * c + phase) * std::cos(5.0 * v - 0.7 * c + phase));
      }
    }
  }
  return img;
}

}  // namespace

TEST_CASE("schedules: ordering, parsing, geometric default") {
  CHECK(ScaleSchedule({64, 128, 256}).final_scale() == 256);
  CHECK_THROWS_AS(ScaleSchedule({64, 64}), ScheduleError);
  CHECK_THROWS_AS(ScaleSchedule({128, 64}), ScheduleError);
  CHECK_THROWS_AS(ScaleSchedule(std::vector<std::size_t>{}), ScheduleError);
  CHECK_THROWS_AS(ScaleSchedule({0, 4}), ScheduleError);
  CHECK(ScaleSchedule::parse("64,128,256").scales() == std::vector<std::size_t>{64, 128, 256});
  CHECK(ScaleSchedule::parse("48").stages() == 1);
  CHECK_THROWS_AS(ScaleSchedule::parse("64,,128"), ScheduleError);
  CHECK_THROWS_AS(ScaleSchedule::parse("64,abc"), ScheduleError);
  CHECK_THROWS_AS(ScaleSchedule::parse("128,64"), ScheduleError);
  CHECK(ScaleSchedule::geometric(64, 256).scales() == std::vector<std::size_t>{64, 128, 256});
  CHECK(ScaleSchedule::geometric(50, 200).scales() == std::vector<std::size_t>{50, 100, 200});
  CHECK(ScaleSchedule::geometric(256, 256).scales() == std::vector<std::size_t>{256});
}

TEST_CASE("final scale must match the style image") {
  TransferConfig cfg = preset("V");
  CHECK_THROWS_AS(super_resolve(scene(16, 16, 0), scene(32, 32, 1), ScaleSchedule({16, 24}), cfg, desk_store()),
                  ScheduleError);
  cfg.init = InitMode::random;
  CHECK_THROWS_AS(super_resolve(scene(16, 16, 0), scene(32, 32, 1), ScaleSchedule({16, 32}), cfg, desk_store()),
                  ParameterError);
}

TEST_CASE("a single-scale schedule is plain synthesis") {
  const RgbImage content = scene(24, 20, 0.0);
  const RgbImage style = scene(24, 20, 1.0);
  TransferConfig cfg = preset("V");
  cfg.optimizer.max_iters = 10;
  cfg.align.rotation_deg = 90.0;
  const auto plain = synthesize(content, style, cfg, desk_store());
  const auto k0 = super_resolve(content, style, ScaleSchedule({24}), cfg, desk_store());
  CHECK(k0.image == plain.image);
  REQUIRE(k0.stages.size() == 1);
  CHECK(k0.stages[0].result.trace.entries.size() == plain.trace.entries.size());
}

TEST_CASE("style equal to content is a fixed point through the scales") {
  const RgbImage full = scene(32, 32, 0.5);
  const RgbImage low = resize_bicubic(full, 16, 16);
  TransferConfig cfg = preset("V");
  cfg.optimizer.max_iters = 20;
  std::vector<Extent> extents;
  const auto r = super_resolve(low, full, ScaleSchedule({16, 32}), cfg, desk_store(), {},
                               [&](const StageResult& s) { extents.push_back(s.extent); });
  CHECK(extents == std::vector<Extent>{{16, 16}, {32, 32}});
  const double start0 = r.stages[0].result.trace.entries.front().loss;
  MESSAGE("stage 0 starts at loss " << start0);
  CHECK(r.image.width == 32);
  const double quality = psnr(to_planes(r.image), to_planes(resize_bicubic(low, 32, 32)), 2);
  MESSAGE("final vs upscaled content: " << quality << " dB");
  CHECK(quality > 30.0);
}

TEST_CASE("warm starts begin below a cold content-initialised run") {
  const RgbImage content = scene(16, 16, 0.0);
  const RgbImage style = scene(64, 64, 2.0);
  TransferConfig cfg = preset("V");
  cfg.optimizer.max_iters = 30;
  cfg.align.enabled = false;
  const auto warm = super_resolve(content, style, ScaleSchedule({16, 32, 64}), cfg, desk_store());
  REQUIRE(warm.stages.size() == 3);
  for (std::size_t k = 1; k < 3; ++k) {
    const Extent e = warm.stages[k].extent;
    const auto cold = synthesize(resize_bicubic(content, e.width, e.height), resize_bicubic(style, e.width, e.height),
                                 cfg, desk_store());
    const double warm_start = warm.stages[k].result.trace.entries.front().loss;
    const double cold_start = cold.trace.entries.front().loss;
    MESSAGE("stage " << k << ": warm " << warm_start << " vs cold " << cold_start);
    CHECK(warm_start < cold_start);
  }
}
