#include "nst/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "nst/config.hpp"
#include "nst/gradcheck.hpp"
#include "nst/pipeline.hpp"
#include "nst/vgg.hpp"

namespace nst::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

/// Bad arguments discovered after parsing; maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CommonOptions {
  std::string weights;
  std::string out;
  std::string config;
  std::string preset;
  std::string pooling;
  std::string optimizer;
  std::optional<std::uint64_t> seed;
  std::optional<int> iters;
  std::optional<double> lambda;
  std::optional<double> rotate;
  std::optional<double> scale;
};

void add_common(CLI::App& cmd, CommonOptions& o, bool with_config = true) {
  cmd.add_option("--weights", o.weights, "VGWT weight container")->required();
  cmd.add_option("--seed", o.seed, "random seed");
  cmd.add_option("--iters", o.iters, "maximum optimizer iterations")->check(CLI::PositiveNumber);
  cmd.add_option("--pooling", o.pooling, "pooling mode")->check(CLI::IsMember({"max", "avg", "average"}));
  if (with_config) {
    cmd.add_option("--config", o.config, "TransferConfig JSON file");
    cmd.add_option("--preset", o.preset, "configuration preset I..VIII");
    cmd.add_option("--lambda", o.lambda, "style weight lambda")->check(CLI::NonNegativeNumber);
    cmd.add_option("--rotate", o.rotate, "content alignment rotation in degrees (enables alignment)");
    cmd.add_option("--scale", o.scale, "content alignment scale (enables alignment)")->check(CLI::PositiveNumber);
    cmd.add_option("--optimizer", o.optimizer, "lbfgs or adam")->check(CLI::IsMember({"lbfgs", "adam"}));
  }
}

std::string valid_presets() {
  std::string s;
  for (const auto& n : preset_names()) s += (s.empty() ? "" : ", ") + n;
  return s;
}

/// Expands preset or config file, then applies flag overrides (flag > config > preset).
TransferConfig resolve_config(const CommonOptions& o, const std::string& default_preset) {
  if (!o.preset.empty() && !o.config.empty()) throw UsageError("give either --preset or --config, not both");
  TransferConfig cfg;
  if (!o.config.empty()) {
    if (!fs::exists(o.config)) throw Error("config file not found: " + o.config);
    cfg = load_config(o.config);
  } else {
    const std::string name = o.preset.empty() ? default_preset : o.preset;
    try {
      cfg = preset(name);
    } catch (const NameError&) {
      throw UsageError("unknown preset '" + name + "'; valid presets: " + valid_presets());
    }
  }
  if (o.seed) cfg.seed = *o.seed;
  if (o.iters) cfg.optimizer.max_iters = *o.iters;
  if (!o.pooling.empty()) cfg.pooling = parse_pooling_mode(o.pooling);
  if (o.lambda) cfg.loss.lambda = *o.lambda;
  if (!o.optimizer.empty()) cfg.optimizer.method = parse_optimizer_method(o.optimizer);
  if (o.rotate || o.scale) {
    cfg.align.enabled = true;
    if (o.rotate) cfg.align.rotation_deg = *o.rotate;
    if (o.scale) cfg.align.scale = *o.scale;
  }
  cfg.optimizer.seed = cfg.seed;
  return cfg;
}

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw UsageError(std::string("missing ") + what);
  if (!fs::exists(path)) throw Error(std::string(what) + " not found: " + path);
}

WeightStore load_store(const std::string& path) {
  require_file(path, "weights file");
  return load_weights(path);
}

fs::path trace_path_for(const fs::path& image_path) {
  fs::path p = image_path;
  p.replace_extension(".trace.csv");
  return p;
}

std::vector<std::string> stanza(const std::string& command, const TransferConfig& cfg, const std::string& weights) {
  return {"engine=" + std::string(kEngineVersion), "command=" + command, "seed=" + std::to_string(cfg.seed),
          "preset=" + (cfg.preset.empty() ? std::string("custom") : cfg.preset),
          "config_hash=" + fnv1a_hex(config_to_json(cfg, -1)), "weights_hash=" + file_hash_hex(weights)};
}

void write_trace(const fs::path& path, const OptTrace& trace, const std::vector<std::string>& header) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write trace " + path.string());
  auto lines = header;
  lines.push_back("stop_reason=" + trace.stop_reason);
  write_trace_csv(out, trace, lines);
}

RunHooks progress_hooks(std::ostream& err) {
  RunHooks hooks;
  hooks.on_iteration = [&err](const TraceEntry& e) {
    if (e.iter % 10 != 0) return;
    err << "iter " << e.iter << "  loss " << e.loss << "  content " << e.content_loss << "  style " << e.style_loss
        << "  |g| " << e.grad_norm << '\n';
  };
  return hooks;
}

RgbImage load_image(const std::string& path, const char* what) {
  require_file(path, what);
  return read_png(path);
}

RgbImage resize_long_edge(const RgbImage& image, std::size_t long_edge) {
  const Extent e = scale_to_long_edge(image.width, image.height, long_edge);
  if (e.width == image.width && e.height == image.height) return image;
  return resize_bicubic(image, e.width, e.height);
}

void summary(std::ostream& out, const json& j) { out << j.dump() << '\n'; }

// --- subcommands -----------------------------------------------------------

struct TransferArgs {
  CommonOptions common;
  std::string content;
  std::string style;
  std::optional<std::size_t> size;
};

int cmd_transfer(const TransferArgs& a, std::ostream& out, std::ostream& err) {
  if (a.common.out.empty()) throw UsageError("missing --out");
  TransferConfig cfg = resolve_config(a.common, "V");
  RgbImage content = load_image(a.content, "content image");
  RgbImage style = load_image(a.style, "style image");
  const WeightStore store = load_store(a.common.weights);
  if (a.size) {
    content = resize_long_edge(content, *a.size);
    style = resize_long_edge(style, *a.size);
  }
  const auto result = synthesize(content, style, cfg, store, progress_hooks(err));
  write_png(result.image, a.common.out);
  const fs::path trace = trace_path_for(a.common.out);
  write_trace(trace, result.trace, stanza("transfer", cfg, a.common.weights));
  summary(out, {{"output", a.common.out},
                {"trace", trace.string()},
                {"final_loss", result.trace.final_loss},
                {"iterations", result.trace.entries.size() - 1},
                {"config", json::parse(config_to_json(cfg, -1))}});
  return 0;
}

struct TextureArgs {
  CommonOptions common;
  std::string style;
  std::optional<std::size_t> size;
};

int cmd_texture(const TextureArgs& a, std::ostream& out, std::ostream& err) {
  if (a.common.out.empty()) throw UsageError("missing --out");
  TransferConfig cfg = resolve_config(a.common, "II");
  cfg.init = InitMode::random;
  const RgbImage style = load_image(a.style, "style image");
  const WeightStore store = load_store(a.common.weights);
  if (a.size) cfg.output_size = scale_to_long_edge(style.width, style.height, *a.size);
  const auto result = synthesize_texture(style, cfg, store, progress_hooks(err));
  write_png(result.image, a.common.out);
  const fs::path trace = trace_path_for(a.common.out);
  write_trace(trace, result.trace, stanza("texture", cfg, a.common.weights));
  summary(out, {{"output", a.common.out},
                {"trace", trace.string()},
                {"width", result.image.width},
                {"height", result.image.height},
                {"final_loss", result.trace.final_loss},
                {"config", json::parse(config_to_json(cfg, -1))}});
  return 0;
}

struct SuperresArgs {
  CommonOptions common;
  std::string content;
  std::string style;
  std::string schedule;
  std::string stage_dir;
};

int cmd_superres(const SuperresArgs& a, std::ostream& out, std::ostream& err) {
  if (a.common.out.empty()) throw UsageError("missing --out");
  std::optional<ScaleSchedule> schedule;
  try {
    schedule.emplace(ScaleSchedule::parse(a.schedule));
  } catch (const ScheduleError& e) {
    throw UsageError(e.what());
  }
  TransferConfig cfg = resolve_config(a.common, "V");
  const RgbImage content = load_image(a.content, "content image");
  const RgbImage style = load_image(a.style, "style image");
  if (schedule->final_scale() != style.long_edge()) {
    throw UsageError("last schedule entry " + std::to_string(schedule->final_scale()) +
                     " must equal the style image long edge " + std::to_string(style.long_edge()));
  }
  const WeightStore store = load_store(a.common.weights);
  const fs::path stage_dir = a.stage_dir.empty() ? fs::path(a.common.out).parent_path() : fs::path(a.stage_dir);
  if (!stage_dir.empty()) fs::create_directories(stage_dir);
  const auto header = stanza("superres", cfg, a.common.weights);

  std::size_t k = 0;
  json stages = json::array();
  auto on_stage = [&](const StageResult& stage) {
    const fs::path png = stage_dir / ("stage_" + std::to_string(k) + ".png");
    write_png(stage.result.image, png);
    auto stage_header = header;
    stage_header.push_back("stage=" + std::to_string(k) + " scale=" + std::to_string(stage.scale));
    write_trace(trace_path_for(png), stage.result.trace, stage_header);
    err << "stage " << k << " at " << stage.extent.width << "x" << stage.extent.height << " done, loss "
        << stage.result.trace.final_loss << '\n';
    stages.push_back({{"stage", k}, {"scale", stage.scale}, {"image", png.string()},
                      {"final_loss", stage.result.trace.final_loss}});
    ++k;
  };
  const auto result = super_resolve(content, style, *schedule, cfg, store, progress_hooks(err), on_stage);
  write_png(result.image, a.common.out);
  write_trace(trace_path_for(a.common.out), result.stages.back().result.trace, header);
  summary(out, {{"output", a.common.out}, {"stages", stages}});
  return 0;
}

struct PartsArgs {
  std::string mode;
  std::string manifest;
  std::string content;
  std::string style;
  std::string base;
  std::string dir;
  std::string suffix = ".result.png";
  std::string feather = "linear";
  unsigned jobs = 1;
  CommonOptions common;
};

int cmd_parts(const PartsArgs& a, std::ostream& out, std::ostream& err) {
  require_file(a.manifest, "manifest");
  const PartManifest manifest = load_manifest(a.manifest);
  const fs::path dir = a.dir.empty() ? fs::path(".") : fs::path(a.dir);

  if (a.mode == "split") {
    const RgbImage content = load_image(a.content, "content image");
    if (content.width != manifest.canvas.width || content.height != manifest.canvas.height) {
      throw ManifestError("content image size does not match the manifest canvas");
    }
    manifest.validate();
    fs::create_directories(dir);
    const auto crops = split_parts(content, manifest, PartSide::content);
    std::vector<RgbImage> style_crops;
    if (!a.style.empty()) style_crops = split_parts(load_image(a.style, "style image"), manifest, PartSide::style);
    json files = json::array();
    for (std::size_t k = 0; k < crops.size(); ++k) {
      const fs::path p = dir / (manifest.parts[k].name + ".content.png");
      write_png(crops[k], p);
      files.push_back(p.string());
      if (!style_crops.empty()) {
        const fs::path s = dir / (manifest.parts[k].name + ".style.png");
        write_png(style_crops[k], s);
        files.push_back(s.string());
      }
    }
    summary(out, {{"written", files}});
    return 0;
  }

  if (a.mode == "merge") {
    if (a.common.out.empty()) throw UsageError("missing --out");
    const RgbImage base = load_image(a.base.empty() ? a.content : a.base, "base image");
    std::vector<RgbImage> parts;
    for (const auto& p : manifest.parts) {
      const fs::path file = dir / (p.name + a.suffix);
      if (!fs::exists(file)) throw Error("part '" + p.name + "': missing part image " + file.string());
      parts.push_back(read_png(file));
    }
    const FeatherProfile profile = a.feather == "cosine" ? FeatherProfile::raised_cosine : FeatherProfile::linear;
    write_png(merge_parts(parts, manifest, base, profile), a.common.out);
    summary(out, {{"output", a.common.out}, {"parts", parts.size()}});
    return 0;
  }

  // synth: one independent synthesis per part, then an optional merge.
  TransferConfig cfg = resolve_config(a.common, "V");
  const RgbImage content = load_image(a.content, "content image");
  const RgbImage style = load_image(a.style, "style image");
  const WeightStore store = load_store(a.common.weights);
  fs::create_directories(dir);
  err << "synthesizing " << manifest.parts.size() << " parts with " << a.jobs << " job(s)\n";
  const auto results = synthesize_parts(content, style, manifest, cfg, store, a.jobs);
  const auto header = stanza("parts", cfg, a.common.weights);
  std::vector<RgbImage> images;
  json files = json::array();
  for (const auto& r : results) {
    const fs::path p = dir / (r.name + ".result.png");
    write_png(r.result.image, p);
    write_trace(trace_path_for(p), r.result.trace, header);
    images.push_back(r.result.image);
    files.push_back(p.string());
  }
  json j = {{"parts", files}};
  if (!a.common.out.empty()) {
    write_png(merge_parts(images, manifest, content), a.common.out);
    j["output"] = a.common.out;
  }
  summary(out, j);
  return 0;
}

struct GradcheckArgs {
  GradcheckSettings settings;
};

int cmd_gradcheck(const GradcheckArgs& a, std::ostream& out) {
  const auto report = run_gradcheck(a.settings);
  json cases = json::array();
  for (const auto& c : report.cases) {
    char line[160];
    std::snprintf(line, sizeof line, "%-26s probes %4zu  max rel err %.3e  %s\n", c.name.c_str(), c.probes,
                  c.max_rel_error, c.passed ? "ok" : "FAIL");
    out << line;
  }
  out << (report.passed() ? "all checks within " : "checks exceed ") << a.settings.tolerance << '\n';
  return report.passed() ? 0 : 1;
}

int cmd_inspect(const std::string& weights, bool as_json, std::ostream& out) {
  require_file(weights, "weights file");
  const WeightHeader header = read_weight_header(weights);
  const WeightStore store = load_weights(weights);
  json layers = json::array();
  for (const auto& info : kVgg19Layers) {
    const LayerName l = LayerName::parse(info.name);
    json entry = {{"name", info.name},
                  {"kind", info.kind == LayerKind::conv ? "conv" : "pool"},
                  {"feature_scale", feature_scale(l)}};
    if (info.kind == LayerKind::conv) {
      const auto& k = store.kernel(std::string(info.name));
      entry["shape"] = {k.out_channels, k.in_channels, 3, 3};
    }
    layers.push_back(entry);
  }
  if (as_json) {
    out << json{{"version", header.version},
                {"header_length", header.header_length},
                {"meta",
                 {{"channel_order", store.meta.channel_order},
                  {"mean", store.meta.mean},
                  {"pooling_hint", store.meta.pooling_hint}}},
                {"conv_layers", store.kernels.size()},
                {"layers", layers}}
               .dump(2)
        << '\n';
    return 0;
  }
  out << "VGWT version " << header.version << ", header " << header.header_length << " bytes\n";
  out << "channel order " << store.meta.channel_order << ", mean [" << store.meta.mean[0] << ", "
      << store.meta.mean[1] << ", " << store.meta.mean[2] << "], pooling hint " << store.meta.pooling_hint << '\n';
  out << store.kernels.size() << " conv layers\n";
  for (const auto& l : layers) {
    out << "  " << l["name"].get<std::string>() << "  scale " << l["feature_scale"].get<std::size_t>();
    if (l.contains("shape")) out << "  " << l["shape"].dump();
    out << '\n';
  }
  return 0;
}

int cmd_fixture(const std::string& out_path, std::uint64_t seed, std::ostream& out) {
  if (out_path.empty()) throw UsageError("missing --out");
  save_weights(random_weight_store(seed), out_path);
  summary(out, {{"output", out_path}, {"seed", seed}});
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Content-aware neural style transfer over a VGG-19 feature chain", "nst"};
  app.require_subcommand(1);

  TransferArgs transfer;
  auto* t = app.add_subcommand("transfer", "style transfer of one content/style pair");
  t->add_option("--content", transfer.content, "content PNG")->required();
  t->add_option("--style", transfer.style, "style PNG")->required();
  t->add_option("--out", transfer.common.out, "output PNG")->required();
  t->add_option("--size", transfer.size, "resize both inputs to this long edge")->check(CLI::PositiveNumber);
  add_common(*t, transfer.common);

  TextureArgs texture;
  auto* x = app.add_subcommand("texture", "style-only texture synthesis from noise");
  x->add_option("--style", texture.style, "style PNG")->required();
  x->add_option("--out", texture.common.out, "output PNG")->required();
  x->add_option("--size", texture.size, "output long edge")->check(CLI::PositiveNumber);
  add_common(*x, texture.common);

  SuperresArgs superres;
  auto* s = app.add_subcommand("superres", "coarse-to-fine super-resolution transfer");
  s->add_option("--content", superres.content, "content PNG")->required();
  s->add_option("--style", superres.style, "style PNG (final resolution)")->required();
  s->add_option("--schedule", superres.schedule, "comma-separated long-edge sizes, e.g. 64,128,256")->required();
  s->add_option("--out", superres.common.out, "final output PNG")->required();
  s->add_option("--stage-dir", superres.stage_dir, "directory for stage_k.png (default: next to --out)");
  add_common(*s, superres.common);

  PartsArgs parts;
  auto* p = app.add_subcommand("parts", "split, synthesize, and merge manifest parts");
  p->add_option("mode", parts.mode, "split | synth | merge")->required()->check(CLI::IsMember({"split", "synth", "merge"}));
  p->add_option("--manifest", parts.manifest, "part manifest JSON")->required();
  p->add_option("--content", parts.content, "content PNG");
  p->add_option("--style", parts.style, "style PNG");
  p->add_option("--base", parts.base, "merge base image (default: --content)");
  p->add_option("--dir", parts.dir, "directory for part images");
  p->add_option("--suffix", parts.suffix, "merge: part file suffix");
  p->add_option("--feather", parts.feather, "merge profile")->check(CLI::IsMember({"linear", "cosine"}));
  p->add_option("--jobs", parts.jobs, "concurrent part syntheses")->check(CLI::PositiveNumber);
  p->add_option("--out", parts.common.out, "merged output PNG");
  p->add_option("--weights", parts.common.weights, "VGWT weight container (synth)");
  p->add_option("--seed", parts.common.seed, "random seed");
  p->add_option("--iters", parts.common.iters, "maximum optimizer iterations")->check(CLI::PositiveNumber);
  p->add_option("--pooling", parts.common.pooling, "pooling mode")->check(CLI::IsMember({"max", "avg", "average"}));
  p->add_option("--config", parts.common.config, "TransferConfig JSON file");
  p->add_option("--preset", parts.common.preset, "configuration preset I..VIII");

  GradcheckArgs gradcheck;
  auto* g = app.add_subcommand("gradcheck", "finite-difference checks of every backward path");
  g->add_option("--seed", gradcheck.settings.seed, "random seed");
  g->add_option("--perturb", gradcheck.settings.step, "finite-difference step")->check(CLI::PositiveNumber);
  g->add_option("--pixels", gradcheck.settings.pixels, "probed pixels for the full objective");
  g->add_option("--size", gradcheck.settings.size, "full-objective input size")->check(CLI::Range(2, 256));
  g->add_option("--tolerance", gradcheck.settings.tolerance, "maximum relative error");

  std::string inspect_weights;
  bool inspect_json = false;
  auto* i = app.add_subcommand("inspect", "print weight container header, shapes, and feature scales");
  i->add_option("--weights", inspect_weights, "VGWT weight container")->required();
  i->add_flag("--json", inspect_json, "machine-readable output");

  std::string fixture_out;
  std::uint64_t fixture_seed = 0;
  auto* f = app.add_subcommand("fixture", "write a seeded random-weight container with VGG-19 shapes");
  f->add_option("--out", fixture_out, "output VGWT file")->required();
  f->add_option("--seed", fixture_seed, "random seed");

  std::vector<const char*> argv{"nst"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*t) return cmd_transfer(transfer, out, err);
    if (*x) return cmd_texture(texture, out, err);
    if (*s) return cmd_superres(superres, out, err);
    if (*p) return cmd_parts(parts, out, err);
    if (*g) return cmd_gradcheck(gradcheck, out);
    if (*i) return cmd_inspect(inspect_weights, inspect_json, out);
    if (*f) return cmd_fixture(fixture_out, fixture_seed, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace nst::cli
