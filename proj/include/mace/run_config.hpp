#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "mace/gradients.hpp"
#include "mace/model.hpp"
#include "mace/training.hpp"

namespace mace {

struct DataConfig {
  std::string train_path;
  std::optional<double> valid_fraction;  // exclusive with valid_path; 0.1 when neither is set
  std::string valid_path;
  std::string test_path;
};

struct OutputConfig {
  std::string directory = ".";
  int checkpoint_every = 0;  // epochs; 0 disables
};

// JSON run configuration:
//   { "schema": 1, "seed": 0, "model": {...}, "radial": {...},
//     "optimizer": {lr, beta1, beta2, eps, amsgrad, weight_decay, batch_size,
//                   max_epochs, lambda_e, lambda_f, patience, decay_factor, ema_decay},
//     "data": {train_path, valid_fraction | valid_path, test_path},
//     "output": {directory, checkpoint_every} }
// model.elements may be omitted and is then taken from the training data.
struct RunConfig {
  std::uint64_t seed = 0;
  MaceConfig model;
  TrainOptions train;  // optimizer, loss and schedule settings
  DataConfig data;
  OutputConfig output;
};

// Validates the whole document (ConfigError naming the offending path).
// Relative paths are resolved against base_dir.
RunConfig parse_run_config(const nlohmann::json& doc, const std::string& base_dir = "");
RunConfig load_run_config(const std::string& path);

nlohmann::json run_config_to_json(const RunConfig& cfg);

}  // namespace mace
