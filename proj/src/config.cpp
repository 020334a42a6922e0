#include "nst/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace nst {

namespace {

using nlohmann::json;

void apply_fields(TransferConfig& cfg, const json& doc) {
  if (doc.contains("content_layers")) cfg.loss.content_layers = parse_layer_set(doc["content_layers"].get<std::vector<std::string>>());
  if (doc.contains("style_layers")) {
    cfg.loss.style_layers = parse_layer_set(doc["style_layers"].get<std::vector<std::string>>());
    cfg.loss.style_weights.clear();
  }
  if (doc.contains("style_weights")) {
    cfg.loss.style_weights.clear();
    for (const auto& [name, w] : doc["style_weights"].items()) {
      cfg.loss.style_weights[LayerName::parse(name)] = w.get<double>();
    }
  }
  if (doc.contains("lambda")) cfg.loss.lambda = doc["lambda"].get<double>();
  if (doc.contains("normalization")) {
    cfg.loss.normalization = parse_style_normalization(doc["normalization"].get<std::string>());
  }
  if (doc.contains("init")) cfg.init = parse_init_mode(doc["init"].get<std::string>());
  if (doc.contains("align")) {
    const json& a = doc["align"];
    cfg.align.enabled = a.value("enabled", cfg.align.enabled);
    cfg.align.rotation_deg = a.value("rotation_deg", cfg.align.rotation_deg);
    cfg.align.scale = a.value("scale", cfg.align.scale);
  }
  if (doc.contains("pooling")) cfg.pooling = parse_pooling_mode(doc["pooling"].get<std::string>());
  if (doc.contains("optimizer")) {
    const json& o = doc["optimizer"];
    auto& s = cfg.optimizer;
    if (o.contains("method")) s.method = parse_optimizer_method(o["method"].get<std::string>());
    s.max_iters = o.value("max_iters", s.max_iters);
    s.history_size = o.value("history_size", s.history_size);
    s.armijo_c1 = o.value("armijo_c1", s.armijo_c1);
    s.backtrack_shrink = o.value("backtrack_shrink", s.backtrack_shrink);
    s.max_backtracks = o.value("max_backtracks", s.max_backtracks);
    s.initial_step = o.value("initial_step", s.initial_step);
    s.adam_rate = o.value("adam_rate", s.adam_rate);
    s.adam_beta1 = o.value("adam_beta1", s.adam_beta1);
    s.adam_beta2 = o.value("adam_beta2", s.adam_beta2);
    s.adam_epsilon = o.value("adam_epsilon", s.adam_epsilon);
    s.grad_tol = o.value("grad_tol", s.grad_tol);
    s.loss_rel_tol = o.value("loss_rel_tol", s.loss_rel_tol);
    s.loss_window = o.value("loss_window", s.loss_window);
    s.clamp_interval = o.value("clamp_interval", s.clamp_interval);
  }
  if (doc.contains("output_size")) {
    if (doc["output_size"].is_null()) {
      cfg.output_size.reset();
    } else {
      const auto size = doc["output_size"].get<std::vector<std::size_t>>();
      if (size.size() != 2) throw ParameterError("output_size must be [w,h]");
      cfg.output_size = Extent{size[0], size[1]};
    }
  }
  if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
  if (doc.contains("noise_sigma")) cfg.noise_sigma = doc["noise_sigma"].get<double>();
  cfg.optimizer.seed = cfg.seed;
  cfg.loss.validate();
  cfg.optimizer.validate();
}

json parse_or_throw(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParameterError(std::string("config is not valid JSON: ") + e.what());
  }
}

}  // namespace

std::string config_to_json(const TransferConfig& cfg, int indent) {
  json weights = json::object();
  for (auto l : cfg.loss.style_layers) weights[l.str()] = cfg.loss.style_weight(l);
  const auto& s = cfg.optimizer;
  json doc = {
      {"preset", cfg.preset},
      {"content_layers", layer_names(cfg.loss.content_layers)},
      {"style_layers", layer_names(cfg.loss.style_layers)},
      {"style_weights", weights},
      {"lambda", cfg.loss.lambda},
      {"normalization", to_string(cfg.loss.normalization)},
      {"init", std::string(to_string(cfg.init))},
      {"align", {{"enabled", cfg.align.enabled}, {"rotation_deg", cfg.align.rotation_deg}, {"scale", cfg.align.scale}}},
      {"pooling", std::string(to_string(cfg.pooling))},
      {"optimizer",
       {{"method", to_string(s.method)},
        {"max_iters", s.max_iters},
        {"history_size", s.history_size},
        {"armijo_c1", s.armijo_c1},
        {"backtrack_shrink", s.backtrack_shrink},
        {"max_backtracks", s.max_backtracks},
        {"initial_step", s.initial_step},
        {"adam_rate", s.adam_rate},
        {"adam_beta1", s.adam_beta1},
        {"adam_beta2", s.adam_beta2},
        {"adam_epsilon", s.adam_epsilon},
        {"grad_tol", s.grad_tol},
        {"loss_rel_tol", s.loss_rel_tol},
        {"loss_window", s.loss_window},
        {"clamp_interval", s.clamp_interval}}},
      {"output_size", cfg.output_size ? json{cfg.output_size->width, cfg.output_size->height} : json(nullptr)},
      {"seed", cfg.seed},
      {"noise_sigma", cfg.noise_sigma},
  };
  return doc.dump(indent);
}

TransferConfig config_from_json(const std::string& text) {
  const json doc = parse_or_throw(text);
  TransferConfig cfg;
  if (doc.contains("preset") && doc["preset"].is_string() && !doc["preset"].get<std::string>().empty()) {
    cfg = preset(doc["preset"].get<std::string>());
  }
  try {
    apply_fields(cfg, doc);
  } catch (const json::exception& e) {
    throw ParameterError(std::string("malformed config: ") + e.what());
  }
  return cfg;
}

TransferConfig apply_config_overrides(TransferConfig base, const std::string& overrides_json) {
  try {
    apply_fields(base, parse_or_throw(overrides_json));
  } catch (const json::exception& e) {
    throw ParameterError(std::string("malformed config: ") + e.what());
  }
  return base;
}

TransferConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string file_hash_hex(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return fnv1a_hex(ss.str());
}

}  // namespace nst
