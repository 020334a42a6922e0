#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "nst/tensor.hpp"

namespace nst {

// Reference dumps produced by an external exporter: a JSON index plus raw
// little-endian f32 blobs, one per (image, layer, kind).

struct FixtureEntry {
  std::string image;
  std::string layer;
  std::string kind;  // activation | gram | grad | loss
  std::string file;  // relative to the index directory
  std::vector<std::size_t> shape;

  std::size_t element_count() const;
};

struct FixtureIndex {
  std::string model_hash;
  std::vector<FixtureEntry> entries;
  std::filesystem::path root;

  /// Entries matching all non-empty selectors.
  std::vector<const FixtureEntry*> find(const std::string& image, const std::string& layer,
                                        const std::string& kind) const;
};

FixtureIndex load_fixture_index(const std::filesystem::path& index_path);
void save_fixture_index(const FixtureIndex& index, const std::filesystem::path& index_path);

std::vector<float> read_fixture_blob(const FixtureIndex& index, const FixtureEntry& entry);
void write_fixture_blob(const std::filesystem::path& path, const std::vector<float>& values);

/// Activation entries are C x H x W; anything else is rejected.
Tensor3f fixture_tensor(const FixtureIndex& index, const FixtureEntry& entry);

}  // namespace nst
