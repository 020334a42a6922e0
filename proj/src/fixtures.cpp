#include "nst/fixtures.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace nst {

using nlohmann::json;

std::size_t FixtureEntry::element_count() const {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::vector<const FixtureEntry*> FixtureIndex::find(const std::string& image, const std::string& layer,
                                                    const std::string& kind) const {
  std::vector<const FixtureEntry*> out;
  for (const auto& e : entries) {
    if ((image.empty() || e.image == image) && (layer.empty() || e.layer == layer) && (kind.empty() || e.kind == kind)) {
      out.push_back(&e);
    }
  }
  return out;
}

FixtureIndex load_fixture_index(const std::filesystem::path& index_path) {
  std::ifstream in(index_path);
  if (!in) throw FormatError("cannot open fixture index " + index_path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  FixtureIndex index;
  index.root = index_path.parent_path();
  try {
    const json doc = json::parse(ss.str());
    index.model_hash = doc.value("model_hash", "");
    for (const auto& j : doc.at("entries")) {
      FixtureEntry e;
      e.image = j.at("image").get<std::string>();
      e.layer = j.value("layer", "");
      e.kind = j.at("kind").get<std::string>();
      e.file = j.at("file").get<std::string>();
      e.shape = j.at("shape").get<std::vector<std::size_t>>();
      if (e.kind != "activation" && e.kind != "gram" && e.kind != "grad" && e.kind != "loss") {
        throw FormatError("fixture entry " + e.file + ": unknown kind " + e.kind);
      }
      index.entries.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw FormatError("malformed fixture index " + index_path.string() + ": " + e.what());
  }
  return index;
}

void save_fixture_index(const FixtureIndex& index, const std::filesystem::path& index_path) {
  json entries = json::array();
  for (const auto& e : index.entries) {
    entries.push_back(
        {{"image", e.image}, {"layer", e.layer}, {"kind", e.kind}, {"file", e.file}, {"shape", e.shape}});
  }
  std::ofstream out(index_path);
  if (!out) throw Error("cannot write fixture index " + index_path.string());
  out << json{{"model_hash", index.model_hash}, {"entries", entries}}.dump(2) << '\n';
}

std::vector<float> read_fixture_blob(const FixtureIndex& index, const FixtureEntry& entry) {
  const auto path = index.root / entry.file;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open fixture blob " + path.string());
  std::vector<float> values(entry.element_count());
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(float)));
  if (!in) throw ValidationError("fixture blob " + path.string() + " is shorter than its declared shape");
  return values;
}

void write_fixture_blob(const std::filesystem::path& path, const std::vector<float>& values) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(float)));
  if (!out) throw Error("cannot write fixture blob " + path.string());
}

Tensor3f fixture_tensor(const FixtureIndex& index, const FixtureEntry& entry) {
  if (entry.shape.size() != 3) throw DimensionError("fixture " + entry.file + " is not a C x H x W tensor");
  return Tensor3f(entry.shape[0], entry.shape[1], entry.shape[2], read_fixture_blob(index, entry));
}

}  // namespace nst
