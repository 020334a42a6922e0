#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "nst/pipeline.hpp"

namespace nst {

namespace {

using nlohmann::json;

Rect rect_from_json(const json& j, const std::string& part, const char* field) {
  if (!j.is_array() || j.size() != 4) throw ManifestError("part '" + part + "': " + field + " must be [x,y,w,h]");
  for (const auto& v : j) {
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      throw ManifestError("part '" + part + "': " + field + " entries must be non-negative integers");
    }
  }
  return {j[0].get<std::size_t>(), j[1].get<std::size_t>(), j[2].get<std::size_t>(), j[3].get<std::size_t>()};
}

std::string rect_string(const Rect& r) {
  return "[" + std::to_string(r.x) + "," + std::to_string(r.y) + "," + std::to_string(r.w) + "," +
         std::to_string(r.h) + "]";
}

Tensor3f crop(const Tensor3f& image, const Rect& r) {
  Tensor3f out(image.channels(), r.h, r.w);
  for (std::size_t c = 0; c < image.channels(); ++c) {
    for (std::size_t y = 0; y < r.h; ++y) {
      for (std::size_t x = 0; x < r.w; ++x) out(c, y, x) = image(c, r.y + y, r.x + x);
    }
  }
  return out;
}

RgbImage crop(const RgbImage& image, const Rect& r) {
  RgbImage out(r.w, r.h);
  for (std::size_t y = 0; y < r.h; ++y) {
    std::copy_n(&image.pixels[((r.y + y) * image.width + r.x) * 3], r.w * 3, &out.pixels[y * r.w * 3]);
  }
  return out;
}

// Fraction of the way in from one edge, 1 beyond the margin. Edges on the canvas border do not feather.
double ramp(std::size_t pos, std::size_t start, std::size_t extent, std::size_t canvas, std::size_t margin) {
  if (margin == 0) return 1.0;
  const double m = static_cast<double>(margin);
  double t = 1.0;
  if (start > 0) t = std::min(t, (static_cast<double>(pos - start) + 0.5) / m);
  if (start + extent < canvas) t = std::min(t, (static_cast<double>(start + extent - 1 - pos) + 0.5) / m);
  return t;
}

double shape(double t, FeatherProfile profile) {
  if (profile == FeatherProfile::raised_cosine) return 0.5 - 0.5 * std::cos(std::numbers::pi * t);
  return t;
}

}  // namespace

void PartManifest::validate(std::optional<Extent> style_extent) const {
  if (canvas.width == 0 || canvas.height == 0) throw ManifestError("manifest canvas must be non-empty");
  if (parts.empty()) throw ManifestError("manifest has no parts");
  for (const auto& p : parts) {
    if (!p.content_rect.fits_in(canvas.width, canvas.height)) {
      throw ManifestError("part '" + p.name + "': content_rect " + rect_string(p.content_rect) +
                          " out of bounds for canvas " + std::to_string(canvas.width) + "x" +
                          std::to_string(canvas.height));
    }
    if (style_extent && !p.style_rect.fits_in(style_extent->width, style_extent->height)) {
      throw ManifestError("part '" + p.name + "': style_rect " + rect_string(p.style_rect) +
                          " out of bounds for style image " + std::to_string(style_extent->width) + "x" +
                          std::to_string(style_extent->height));
    }
  }
  for (std::size_t i = 0; i < parts.size(); ++i) {
    for (std::size_t j = i + 1; j < parts.size(); ++j) {
      const Rect& a = parts[i].content_rect;
      const Rect& b = parts[j].content_rect;
      const std::size_t x0 = std::max(a.x, b.x);
      const std::size_t y0 = std::max(a.y, b.y);
      const std::size_t x1 = std::min(a.x + a.w, b.x + b.w);
      const std::size_t y1 = std::min(a.y + a.h, b.y + b.h);
      if (x0 >= x1 || y0 >= y1) continue;
      const std::size_t band = std::min(x1 - x0, y1 - y0);
      const std::size_t needed = std::max(parts[i].overlap_margin, parts[j].overlap_margin);
      if (band < needed) {
        throw ManifestError("parts '" + parts[i].name + "' and '" + parts[j].name + "' overlap by " +
                            std::to_string(band) + " px, less than the " + std::to_string(needed) + " px margin");
      }
    }
  }
}

PartManifest parse_manifest(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ManifestError(std::string("manifest is not valid JSON: ") + e.what());
  }
  PartManifest m;
  try {
    const auto canvas = doc.at("canvas").get<std::vector<std::size_t>>();
    if (canvas.size() != 2) throw ManifestError("manifest canvas must be [w,h]");
    m.canvas = {canvas[0], canvas[1]};
    for (const auto& jp : doc.at("parts")) {
      Part p;
      p.name = jp.at("name").get<std::string>();
      p.content_rect = rect_from_json(jp.at("content_rect"), p.name, "content_rect");
      p.style_rect = rect_from_json(jp.at("style_rect"), p.name, "style_rect");
      p.overlap_margin = jp.value("overlap_margin", std::size_t{0});
      m.parts.push_back(std::move(p));
    }
  } catch (const json::exception& e) {
    throw ManifestError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

PartManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ManifestError("cannot open manifest " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str());
}

std::string manifest_to_json(const PartManifest& manifest) {
  json parts = json::array();
  for (const auto& p : manifest.parts) {
    const auto& c = p.content_rect;
    const auto& s = p.style_rect;
    parts.push_back({{"name", p.name},
                     {"content_rect", {c.x, c.y, c.w, c.h}},
                     {"style_rect", {s.x, s.y, s.w, s.h}},
                     {"overlap_margin", p.overlap_margin}});
  }
  return json{{"canvas", {manifest.canvas.width, manifest.canvas.height}}, {"parts", parts}}.dump(2);
}

std::vector<RgbImage> split_parts(const RgbImage& image, const PartManifest& manifest, PartSide side) {
  std::vector<RgbImage> out;
  for (const auto& p : manifest.parts) {
    const Rect& r = side == PartSide::content ? p.content_rect : p.style_rect;
    if (!r.fits_in(image.width, image.height)) {
      throw ManifestError("part '" + p.name + "': rect " + rect_string(r) + " out of bounds for " +
                          std::to_string(image.width) + "x" + std::to_string(image.height) + " image");
    }
    out.push_back(crop(image, r));
  }
  return out;
}

std::vector<std::vector<double>> blend_weights(const PartManifest& manifest, FeatherProfile profile) {
  manifest.validate();
  const std::size_t n = manifest.parts.size();
  std::vector<std::vector<double>> raw(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Part& p = manifest.parts[k];
    const Rect& r = p.content_rect;
    raw[k].resize(r.w * r.h);
    for (std::size_t y = 0; y < r.h; ++y) {
      const double wy = shape(ramp(r.y + y, r.y, r.h, manifest.canvas.height, p.overlap_margin), profile);
      for (std::size_t x = 0; x < r.w; ++x) {
        const double wx = shape(ramp(r.x + x, r.x, r.w, manifest.canvas.width, p.overlap_margin), profile);
        raw[k][y * r.w + x] = std::max(wx * wy, 1e-12);
      }
    }
  }

  std::vector<std::vector<double>> weights(n);
  for (std::size_t k = 0; k < n; ++k) weights[k].assign(raw[k].size(), 0.0);
  std::vector<std::size_t> covering;
  for (std::size_t y = 0; y < manifest.canvas.height; ++y) {
    for (std::size_t x = 0; x < manifest.canvas.width; ++x) {
      covering.clear();
      double total = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const Rect& r = manifest.parts[k].content_rect;
        if (!r.contains(x, y)) continue;
        covering.push_back(k);
        total += raw[k][(y - r.y) * r.w + (x - r.x)];
      }
      // The last covering part takes the remainder so the sum is exactly 1.
      double assigned = 0.0;
      for (std::size_t i = 0; i < covering.size(); ++i) {
        const std::size_t k = covering[i];
        const Rect& r = manifest.parts[k].content_rect;
        const std::size_t idx = (y - r.y) * r.w + (x - r.x);
        const double w = i + 1 == covering.size() ? 1.0 - assigned : raw[k][idx] / total;
        weights[k][idx] = w;
        assigned += w;
      }
    }
  }
  return weights;
}

Tensor3f merge_parts(const std::vector<Tensor3f>& parts, const PartManifest& manifest, const Tensor3f& base,
                     FeatherProfile profile) {
  if (parts.size() != manifest.parts.size()) {
    throw ManifestError("merge: got " + std::to_string(parts.size()) + " part images for " +
                        std::to_string(manifest.parts.size()) + " manifest parts");
  }
  if (base.width() != manifest.canvas.width || base.height() != manifest.canvas.height) {
    throw ManifestError("merge: base image " + base.shape_string() + " does not match manifest canvas");
  }
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Rect& r = manifest.parts[k].content_rect;
    if (parts[k].width() != r.w || parts[k].height() != r.h || parts[k].channels() != base.channels()) {
      throw ManifestError("merge: part '" + manifest.parts[k].name + "' image " + parts[k].shape_string() +
                          " does not match its rect " + rect_string(r));
    }
  }
  const auto weights = blend_weights(manifest, profile);

  std::vector<double> acc(base.size(), 0.0);
  std::vector<bool> covered(base.plane_size(), false);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Rect& r = manifest.parts[k].content_rect;
    for (std::size_t c = 0; c < base.channels(); ++c) {
      for (std::size_t y = 0; y < r.h; ++y) {
        for (std::size_t x = 0; x < r.w; ++x) {
          const std::size_t canvas_idx = (r.y + y) * base.width() + (r.x + x);
          acc[c * base.plane_size() + canvas_idx] += weights[k][y * r.w + x] * parts[k](c, y, x);
          covered[canvas_idx] = true;
        }
      }
    }
  }
  Tensor3f out = base;
  for (std::size_t c = 0; c < base.channels(); ++c) {
    for (std::size_t i = 0; i < base.plane_size(); ++i) {
      if (covered[i]) out[c * base.plane_size() + i] = static_cast<float>(acc[c * base.plane_size() + i]);
    }
  }
  return out;
}

RgbImage merge_parts(const std::vector<RgbImage>& parts, const PartManifest& manifest, const RgbImage& base,
                     FeatherProfile profile) {
  std::vector<Tensor3f> planes;
  planes.reserve(parts.size());
  for (const auto& p : parts) planes.push_back(to_planes(p));
  return from_planes(merge_parts(planes, manifest, to_planes(base), profile));
}

std::vector<PartResult> synthesize_parts(const RgbImage& content, const RgbImage& style,
                                         const PartManifest& manifest, const TransferConfig& cfg,
                                         const WeightStore& store, unsigned jobs) {
  manifest.validate(Extent{style.width, style.height});
  const auto content_parts = split_parts(content, manifest, PartSide::content);
  const auto style_parts = split_parts(style, manifest, PartSide::style);

  std::vector<PartResult> results(manifest.parts.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t k = next++; k < results.size(); k = next++) {
      try {
        results[k] = {manifest.parts[k].name, synthesize(content_parts[k], style_parts[k], cfg, store)};
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const unsigned threads = std::clamp<unsigned>(jobs, 1, static_cast<unsigned>(results.size()));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

}  // namespace nst
