#pragma once

#include <filesystem>
#include <vector>

#include <json.hpp>

#include "cssi/nn/tape.hpp"

namespace cssi::nn {

/// Writes the parameter values as consecutive little-endian 64-bit floats
/// (column-major per parameter) and a JSON manifest listing name, shape and
/// offset of each one. `extra` is merged into the manifest.
void save_parameters(const std::vector<const Parameter*>& params, const std::filesystem::path& bin_path,
                     const std::filesystem::path& manifest_path,
                     const nlohmann::json& extra = nlohmann::json::object());

/// Restores values into `params`, matched by name and shape.
/// Throws MissingCheckpoint if a file is absent, ShapeMismatch on layout drift.
void load_parameters(const std::vector<Parameter*>& params, const std::filesystem::path& bin_path,
                     const std::filesystem::path& manifest_path);

nlohmann::json read_manifest(const std::filesystem::path& manifest_path);

}  // namespace cssi::nn
