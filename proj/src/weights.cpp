#include "nst/weights.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include <json.hpp>

#include "nst/layers.hpp"

namespace nst {

static_assert(std::endian::native == std::endian::little, "container I/O assumes a little-endian host");

namespace {

using nlohmann::json;

template <typename U>
U read_pod(std::istream& in, const std::filesystem::path& path, const char* what) {
  U value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(U));
  if (!in) throw FormatError(path.string() + ": truncated " + what);
  return value;
}

std::vector<std::size_t> expected_shape(const std::string& tensor) {
  const auto dot = tensor.rfind('.');
  if (dot == std::string::npos) return {};
  const std::string layer = tensor.substr(0, dot);
  const std::string part = tensor.substr(dot + 1);
  for (const auto& info : kVgg19Layers) {
    if (info.kind != LayerKind::conv || info.name != layer) continue;
    if (part == "weight") return {info.out_channels, info.in_channels, 3, 3};
    if (part == "bias") return {info.out_channels};
  }
  return {};
}

}  // namespace

const ConvKernel& WeightStore::kernel(const std::string& layer) const {
  auto it = kernels.find(layer);
  if (it == kernels.end()) throw ValidationError("weight store has no kernel for '" + layer + "'");
  return it->second;
}

void validate_store(const WeightStore& store) {
  std::size_t conv_layers = 0;
  for (const auto& info : kVgg19Layers) {
    if (info.kind != LayerKind::conv) continue;
    ++conv_layers;
    const std::string name(info.name);
    auto it = store.kernels.find(name);
    if (it == store.kernels.end()) throw ValidationError("missing tensor " + name + ".weight");
    const ConvKernel& k = it->second;
    if (k.out_channels != info.out_channels || k.in_channels != info.in_channels) {
      throw ValidationError("wrong shape for " + name + ".weight: got " + std::to_string(k.out_channels) + "x" +
                            std::to_string(k.in_channels) + "x3x3");
    }
    try {
      k.validate();
    } catch (const DimensionError& e) {
      throw ValidationError(name + ": " + e.what());
    }
  }
  if (store.kernels.size() != conv_layers) {
    throw ValidationError("weight store has " + std::to_string(store.kernels.size()) + " kernels, expected " +
                          std::to_string(conv_layers));
  }
}

WeightHeader read_weight_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open weight file " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kWeightMagic, 4) != 0) throw FormatError(path.string() + ": bad magic (expected VGWT)");
  WeightHeader header;
  header.version = read_pod<std::uint32_t>(in, path, "version");
  if (header.version != kWeightFormatVersion) {
    throw FormatError(path.string() + ": unsupported format version " + std::to_string(header.version));
  }
  header.header_length = read_pod<std::uint64_t>(in, path, "header length");
  if (header.header_length > (std::uint64_t{1} << 30)) throw FormatError(path.string() + ": implausible header length");
  header.json.resize(header.header_length);
  in.read(header.json.data(), static_cast<std::streamsize>(header.header_length));
  if (!in) throw FormatError(path.string() + ": truncated header");
  return header;
}

WeightStore load_weights(const std::filesystem::path& path) {
  const WeightHeader header = read_weight_header(path);
  json doc;
  try {
    doc = json::parse(header.json);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": header is not valid JSON: " + e.what());
  }
  if (!doc.contains("tensors") || !doc["tensors"].is_array()) throw FormatError(path.string() + ": header lacks tensors");

  WeightStore store;
  store.format_version = header.version;
  if (doc.contains("meta")) {
    const json& meta = doc["meta"];
    store.meta.channel_order = meta.value("channel_order", store.meta.channel_order);
    store.meta.pooling_hint = meta.value("pooling_hint", store.meta.pooling_hint);
    if (meta.contains("mean")) {
      const auto mean = meta["mean"].get<std::vector<float>>();
      if (mean.size() != 3) throw FormatError(path.string() + ": meta.mean must have 3 entries");
      std::copy(mean.begin(), mean.end(), store.meta.mean.begin());
    }
  }
  if (store.meta.channel_order != "RGB" && store.meta.channel_order != "BGR") {
    throw FormatError(path.string() + ": unsupported channel_order " + store.meta.channel_order);
  }

  std::ifstream in(path, std::ios::binary);
  in.seekg(static_cast<std::streamoff>(4 + 4 + 8 + header.header_length));
  for (const json& entry : doc["tensors"]) {
    const auto name = entry.at("name").get<std::string>();
    const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
    if (entry.value("dtype", "f32") != "f32") throw FormatError("tensor " + name + ": unsupported dtype");
    const auto expected = expected_shape(name);
    if (expected.empty()) throw ValidationError("unexpected tensor " + name);
    if (shape != expected) throw ValidationError("wrong shape for tensor " + name);
    std::size_t count = 1;
    for (auto d : shape) count *= d;
    std::vector<float> blob(count);
    in.read(reinterpret_cast<char*>(blob.data()), static_cast<std::streamsize>(count * sizeof(float)));
    if (!in) throw ValidationError("truncated blob for tensor " + name);

    const std::string layer = name.substr(0, name.rfind('.'));
    auto& kernel = store.kernels[layer];
    const auto& info = kVgg19Layers[LayerName::parse(layer).index()];
    kernel.out_channels = info.out_channels;
    kernel.in_channels = info.in_channels;
    if (name.ends_with(".weight")) {
      kernel.weights = std::move(blob);
    } else {
      kernel.bias = std::move(blob);
    }
  }
  for (const auto& [layer, kernel] : store.kernels) {
    if (kernel.weights.empty()) throw ValidationError("missing tensor " + layer + ".weight");
    if (kernel.bias.empty()) throw ValidationError("missing tensor " + layer + ".bias");
  }
  validate_store(store);
  return store;
}

void save_weights(const WeightStore& store, const std::filesystem::path& path) {
  validate_store(store);
  json tensors = json::array();
  std::vector<const std::vector<float>*> blobs;
  for (const auto& info : kVgg19Layers) {
    if (info.kind != LayerKind::conv) continue;
    const std::string layer(info.name);
    const ConvKernel& k = store.kernels.at(layer);
    tensors.push_back({{"name", layer + ".weight"},
                       {"shape", {k.out_channels, k.in_channels, 3, 3}},
                       {"dtype", "f32"}});
    blobs.push_back(&k.weights);
    tensors.push_back({{"name", layer + ".bias"}, {"shape", {k.out_channels}}, {"dtype", "f32"}});
    blobs.push_back(&k.bias);
  }
  json doc = {{"tensors", tensors},
              {"meta",
               {{"channel_order", store.meta.channel_order},
                {"mean", store.meta.mean},
                {"pooling_hint", store.meta.pooling_hint}}}};
  const std::string header = doc.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write weight file " + path.string());
  out.write(kWeightMagic, 4);
  const std::uint32_t version = kWeightFormatVersion;
  const std::uint64_t length = header.size();
  out.write(reinterpret_cast<const char*>(&version), sizeof version);
  out.write(reinterpret_cast<const char*>(&length), sizeof length);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (const auto* blob : blobs) {
    out.write(reinterpret_cast<const char*>(blob->data()), static_cast<std::streamsize>(blob->size() * sizeof(float)));
  }
  if (!out) throw Error("failed writing weight file " + path.string());
}

WeightStore random_weight_store(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  WeightStore store;
  store.meta.pooling_hint = "avg";
  for (const auto& info : kVgg19Layers) {
    if (info.kind != LayerKind::conv) continue;
    ConvKernel k(info.out_channels, info.in_channels);
    std::normal_distribution<float> dist(0.0f, std::sqrt(2.0f / static_cast<float>(9 * info.in_channels)));
    for (auto& w : k.weights) w = dist(rng);
    store.kernels.emplace(std::string(info.name), std::move(k));
  }
  return store;
}

}  // namespace nst
