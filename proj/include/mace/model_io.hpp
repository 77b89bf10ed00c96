#pragma once

#include <string>

#include <json.hpp>

#include "mace/model.hpp"

namespace mace {

// "model" and "radial" sections of a run configuration or model manifest.
// Elements are written as symbols. Reading is strict (ConfigError).
nlohmann::json model_config_to_json(const MaceConfig& cfg);
nlohmann::json radial_config_to_json(const RadialConfig& cfg);
void model_config_from_json(const nlohmann::json& model, const nlohmann::json& radial, MaceConfig& cfg,
                            const std::string& path_prefix = "");

struct LoadedModel {
  MaceConfig config;
  ModelScaling scaling;
  ModelParams params;

  MaceModel model() const { return MaceModel(config, scaling); }
};

// Container: 8-byte magic, u64 manifest length, JSON manifest, then every
// tensor's values as little-endian float64 in manifest order.
void save_model(const std::string& path, const MaceModel& model, const ModelParams& params);
std::string serialize_model(const MaceModel& model, const ModelParams& params);

// Throws DataError for unreadable or inconsistent files.
LoadedModel load_model(const std::string& path);
LoadedModel deserialize_model(const std::string& bytes);

}  // namespace mace
