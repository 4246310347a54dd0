#include "itemrec/model_io.hpp"

#include <fstream>

#include "itemrec/error.hpp"

namespace itemrec {

using nlohmann::json;

json to_json(const FeatureConfig& config) {
  return {{"channels", config.channels},
          {"edge_window", config.edge_window},
          {"include_scalars", config.include_scalars}};
}

FeatureConfig feature_config_from_json(const json& j) {
  FeatureConfig c;
  c.channels = j.at("channels").get<std::vector<std::string>>();
  c.edge_window = j.at("edge_window").get<int>();
  c.include_scalars = j.at("include_scalars").get<bool>();
  return c;
}

json to_json(const SamplerConfig& config) {
  return {{"max_samples_per_player", config.max_samples_per_player},
          {"seed", config.seed},
          {"cutoff_pool", config.cutoff_pool == CutoffPool::LoginDays ? "login_days" : "all_days"},
          {"label_mode", config.label_mode == LabelMode::NextPurchaseDay ? "next_purchase_day" : "single_item"}};
}

SamplerConfig sampler_config_from_json(const json& j) {
  SamplerConfig c;
  c.max_samples_per_player = j.at("max_samples_per_player").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  const auto pool = j.at("cutoff_pool").get<std::string>();
  if (pool == "login_days") {
    c.cutoff_pool = CutoffPool::LoginDays;
  } else if (pool == "all_days") {
    c.cutoff_pool = CutoffPool::AllDays;
  } else {
    throw FormatError("unknown cutoff pool '" + pool + "'");
  }
  const auto mode = j.at("label_mode").get<std::string>();
  if (mode == "next_purchase_day") {
    c.label_mode = LabelMode::NextPurchaseDay;
  } else if (mode == "single_item") {
    c.label_mode = LabelMode::SingleItem;
  } else {
    throw FormatError("unknown label mode '" + mode + "'");
  }
  return c;
}

json to_json(const ItemCatalog& catalog) { return catalog.items(); }

ItemCatalog catalog_from_json(const json& j) { return ItemCatalog(j.get<std::vector<std::string>>()); }

void check_header(const json& j, const std::string& kind, const std::string& what) {
  if (!j.is_object() || !j.contains("schema_version")) {
    throw MismatchError(what + ": missing schema_version");
  }
  const auto version = j.at("schema_version");
  if (!version.is_number_integer() || version.get<int>() != kSchemaVersion) {
    throw MismatchError(what + ": unsupported schema_version " + version.dump() + " (expected " +
                        std::to_string(kSchemaVersion) + ")");
  }
  if (!kind.empty()) {
    const auto actual = j.value("kind", std::string{});
    if (actual != kind) throw MismatchError(what + ": expected a '" + kind + "' file, found '" + actual + "'");
  }
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& j, int indent) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(indent) << '\n';
}

}  // namespace itemrec
