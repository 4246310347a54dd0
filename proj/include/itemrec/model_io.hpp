#pragma once

#include <filesystem>
#include <string>

#include "itemrec/data_model.hpp"
#include "itemrec/featurization.hpp"
#include "itemrec/sampling.hpp"
#include "json.hpp"

namespace itemrec {

/// Version stamped on every file this library writes. Readers reject others.
inline constexpr int kSchemaVersion = 1;

nlohmann::json to_json(const FeatureConfig& config);
FeatureConfig feature_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SamplerConfig& config);
SamplerConfig sampler_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ItemCatalog& catalog);
ItemCatalog catalog_from_json(const nlohmann::json& j);

/// Throws MismatchError unless j["schema_version"] == kSchemaVersion and,
/// when `kind` is non-empty, j["kind"] == kind.
void check_header(const nlohmann::json& j, const std::string& kind, const std::string& what);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j, int indent = -1);

}  // namespace itemrec
