#include <doctest.h>

#include "nst/pipeline.hpp"
#include "support/oracles.hpp"

using namespace nst;
using namespace nst::testing;

namespace {

PartManifest two_parts(std::size_t margin, std::size_t overlap) {
  PartManifest m;
  m.canvas = {100, 30};
  const std::size_t left_w = 50 + overlap / 2;
  m.parts.push_back({"left", {0, 0, left_w, 30}, {0, 0, left_w, 30}, margin});
  m.parts.push_back({"right", {left_w - overlap, 0, 100 - (left_w - overlap), 30}, {0, 0, 10, 10}, margin});
  return m;
}

RgbImage noise_image(std::size_t w, std::size_t h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> byte(0, 255);
  RgbImage img(w, h);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(byte(rng));
  return img;
}

// Sums per canvas pixel in part order; returns how many covered pixels were not exactly 1.
std::size_t unity_violations(const PartManifest& m, const std::vector<std::vector<double>>& w) {
  std::vector<double> sum(m.canvas.width * m.canvas.height, 0.0);
  std::vector<int> hits(sum.size(), 0);
  for (std::size_t k = 0; k < m.parts.size(); ++k) {
    const Rect& r = m.parts[k].content_rect;
    for (std::size_t y = 0; y < r.h; ++y) {
      for (std::size_t x = 0; x < r.w; ++x) {
        const std::size_t i = (r.y + y) * m.canvas.width + r.x + x;
        sum[i] += w[k][y * r.w + x];
        ++hits[i];
      }
    }
  }
  std::size_t bad = 0;
  for (std::size_t i = 0; i < sum.size(); ++i) bad += hits[i] > 0 && sum[i] != 1.0;
  return bad;
}

}  // namespace

TEST_CASE("manifest parsing and validation") {
  const PartManifest m = load_manifest(std::string(NST_TEST_DATA) + "/hummingbird_parts.json");
  CHECK(m.canvas == Extent{240, 200});
  REQUIRE(m.parts.size() == 6);
  CHECK_NOTHROW(m.validate(Extent{256, 224}));
  CHECK(parse_manifest(manifest_to_json(m)).parts[5].style_rect == m.parts[5].style_rect);

  PartManifest out = m;
  out.parts[3].content_rect.w = 300;
  try {
    out.validate();
    FAIL("out of bounds accepted");
  } catch (const ManifestError& e) {
    CHECK(std::string(e.what()).find("body") != std::string::npos);
  }
  try {
    m.validate(Extent{200, 200});
    FAIL("style out of bounds accepted");
  } catch (const ManifestError& e) {
    CHECK(std::string(e.what()).find("wing") != std::string::npos);
  }
  CHECK_THROWS_AS(two_parts(16, 8).validate(), ManifestError);
  CHECK_THROWS_AS(parse_manifest("{\"canvas\":[10,10],\"parts\":[{\"name\":\"a\",\"content_rect\":[0,0,5]}]}"),
                  ManifestError);
  CHECK_THROWS_AS(parse_manifest("not json"), ManifestError);
}

TEST_CASE("split: whole-image part, shared bands, six-part layout") {
  const RgbImage img = noise_image(100, 30, 51);
  PartManifest whole;
  whole.canvas = {100, 30};
  whole.parts.push_back({"all", {0, 0, 100, 30}, {0, 0, 100, 30}, 0});
  CHECK(split_parts(img, whole, PartSide::content).front() == img);

  const PartManifest m = two_parts(32, 32);
  const auto crops = split_parts(img, m, PartSide::content);
  const Rect& a = m.parts[0].content_rect;
  const Rect& b = m.parts[1].content_rect;
  for (std::size_t y = 0; y < 30; ++y) {
    for (std::size_t x = b.x; x < a.x + a.w; ++x) {
      for (std::size_t c = 0; c < 3; ++c) CHECK(crops[0].at(x - a.x, y, c) == crops[1].at(x - b.x, y, c));
    }
  }

  const PartManifest bird = load_manifest(std::string(NST_TEST_DATA) + "/hummingbird_parts.json");
  const auto content = split_parts(noise_image(240, 200, 52), bird, PartSide::content);
  const auto style = split_parts(noise_image(256, 224, 53), bird, PartSide::style);
  CHECK(content.size() == 6);
  CHECK(style.size() == 6);
  const Rect& wing = bird.parts[2].style_rect;
  const Rect& second = bird.parts[5].style_rect;
  CHECK(second.x >= wing.x);
  CHECK(second.y >= wing.y);
  CHECK(second.x + second.w <= wing.x + wing.w);
  CHECK(second.y + second.h <= wing.y + wing.h);
  for (std::size_t k = 0; k < 6; ++k) {
    CHECK(content[k].width == bird.parts[k].content_rect.w);
    CHECK(style[k].height == bird.parts[k].style_rect.h);
  }
  CHECK_THROWS_AS(split_parts(noise_image(200, 200, 54), bird, PartSide::content), ManifestError);
}

TEST_CASE("blend weights form an exact partition of unity") {
  const PartManifest bird = load_manifest(std::string(NST_TEST_DATA) + "/hummingbird_parts.json");
  for (auto profile : {FeatherProfile::linear, FeatherProfile::raised_cosine}) {
    CHECK(unity_violations(bird, blend_weights(bird, profile)) == 0);
    CHECK(unity_violations(two_parts(20, 20), blend_weights(two_parts(20, 20), profile)) == 0);
    CHECK(unity_violations(two_parts(10, 30), blend_weights(two_parts(10, 30), profile)) == 0);
  }
}

TEST_CASE("merge: paste, equal constants, analytic linear ramp") {
  PartManifest one;
  one.canvas = {20, 10};
  one.parts.push_back({"p", {5, 2, 8, 6}, {0, 0, 8, 6}, 4});
  const Tensor3f base(3, 10, 20, 7.0f);
  std::mt19937_64 rng(55);
  const Tensor3f part = random_tensor_f(3, 6, 8, 30.0, rng);
  const Tensor3f pasted = merge_parts({part}, one, base);
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t y = 0; y < 10; ++y) {
      for (std::size_t x = 0; x < 20; ++x) {
        const bool inside = x >= 5 && x < 13 && y >= 2 && y < 8;
        CHECK(pasted(c, y, x) == (inside ? part(c, y - 2, x - 5) : 7.0f));
      }
    }
  }

  const PartManifest m = two_parts(20, 20);
  const Rect& a = m.parts[0].content_rect;
  const Rect& b = m.parts[1].content_rect;
  const Tensor3f base2(3, 30, 100, 0.0f);
  const Tensor3f same = merge_parts({Tensor3f(3, a.h, a.w, 42.0f), Tensor3f(3, b.h, b.w, 42.0f)}, m, base2);
  for (auto v : same.values()) CHECK(v == doctest::Approx(42.0f).epsilon(1e-7));

  const Tensor3f ramp = merge_parts({Tensor3f(3, a.h, a.w, 10.0f), Tensor3f(3, b.h, b.w, 90.0f)}, m, base2);
  // Overlap [40, 60): weight of the right part rises by 1/20 per pixel from 0.5/20 at x = 40.
  for (std::size_t x = 0; x < 100; ++x) {
    double expected = x < 40 ? 10.0 : (x >= 60 ? 90.0 : 10.0 + 80.0 * ((x - 40.0) + 0.5) / 20.0);
    for (std::size_t y = 0; y < 30; ++y) CHECK(ramp(1, y, x) == doctest::Approx(expected).epsilon(1e-6));
  }

  const Tensor3f cosine =
      merge_parts({Tensor3f(3, a.h, a.w, 10.0f), Tensor3f(3, b.h, b.w, 90.0f)}, m, base2, FeatherProfile::raised_cosine);
  for (std::size_t x = 1; x < 100; ++x) CHECK(cosine(0, 5, x) >= cosine(0, 5, x - 1));
  for (std::size_t x = 40; x < 60; ++x) {
    const double t = ((x - 40.0) + 0.5) / 20.0;
    CHECK(cosine(0, 5, x) == doctest::Approx(10.0 + 80.0 * (0.5 - 0.5 * std::cos(M_PI * t))).epsilon(1e-6));
  }
  CHECK(cosine(0, 5, 49) + cosine(0, 5, 50) == doctest::Approx(100.0).epsilon(1e-6));

  CHECK_THROWS_AS(merge_parts({part}, m, base2), ManifestError);
  CHECK_THROWS_AS(merge_parts({Tensor3f(3, 5, 5), Tensor3f(3, b.h, b.w)}, m, base2), ManifestError);
}

TEST_CASE("split then merge of untouched parts reconstructs the source") {
  const PartManifest bird = load_manifest(std::string(NST_TEST_DATA) + "/hummingbird_parts.json");
  const RgbImage img = noise_image(240, 200, 56);
  const auto crops = split_parts(img, bird, PartSide::content);
  CHECK(merge_parts(crops, bird, img) == img);
}

TEST_CASE("part syntheses are independent of the job count") {
  PartManifest m;
  m.canvas = {24, 16};
  m.parts.push_back({"a", {0, 0, 14, 16}, {0, 0, 14, 16}, 4});
  m.parts.push_back({"b", {10, 0, 14, 16}, {10, 0, 14, 16}, 4});
  m.parts.push_back({"c", {4, 4, 12, 8}, {0, 0, 12, 8}, 4});
  const RgbImage content = noise_image(24, 16, 57);
  const RgbImage style = noise_image(24, 16, 58);
  TransferConfig cfg = preset("V");
  cfg.optimizer.max_iters = 5;
  const auto serial = synthesize_parts(content, style, m, cfg, desk_store(), 1);
  const auto parallel = synthesize_parts(content, style, m, cfg, desk_store(), 3);
  REQUIRE(serial.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(serial[k].name == m.parts[k].name);
    CHECK(serial[k].result.image == parallel[k].result.image);
  }
}
