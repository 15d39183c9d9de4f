#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "ega/dataset.hpp"
#include "ega/mlp.hpp"

namespace ega {

inline constexpr int kSchemaVersion = 1;

using Json = nlohmann::ordered_json;

/// Throws SchemaError when the document is missing a schema_version or was
/// written by a newer build.
void check_schema(const Json& doc, const std::string& what);

/// Writes `doc` (with schema_version added) as indented JSON.
void write_json(const std::filesystem::path& path, Json doc);
Json read_json(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);

/// Dataset as little-endian float64: for each sample the anchor, the n
/// targets, then the offline target when present. Sidecar manifest at
/// path with extension .json; `extra` fields are merged into it.
void write_dataset(const std::filesystem::path& path, const Dataset& data, const Json& extra = Json::object());
Dataset read_dataset(const std::filesystem::path& path);
/// One row per sample: anchor, targets, offline target.
void write_dataset_csv(const std::filesystem::path& path, const Dataset& data);

/// Flat float64 parameter vector plus a .json layout descriptor.
void write_params(const std::filesystem::path& path, const MlpSubmodel& m);
MlpSubmodel read_params(const std::filesystem::path& path);

std::filesystem::path manifest_path(const std::filesystem::path& data_path);

}  // namespace ega
