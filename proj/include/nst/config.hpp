#pragma once

#include <filesystem>
#include <string>

#include "nst/pipeline.hpp"

namespace nst {

/// Full JSON form of a TransferConfig; every field is written.
std::string config_to_json(const TransferConfig& cfg, int indent = 2);

/// Reads a config document. If it names a "preset", that preset is the base and
/// the remaining fields override it; otherwise defaults are the base.
TransferConfig config_from_json(const std::string& text);
TransferConfig load_config(const std::filesystem::path& path);

/// Applies the fields present in `overrides_json` on top of `base`.
TransferConfig apply_config_overrides(TransferConfig base, const std::string& overrides_json);

/// 64-bit FNV-1a, hex-encoded; used for reproducibility stanzas.
std::string fnv1a_hex(std::string_view bytes);
std::string file_hash_hex(const std::filesystem::path& path);

}  // namespace nst
