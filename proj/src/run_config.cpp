#include "mace/run_config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mace/errors.hpp"
#include "mace/json_reader.hpp"
#include "mace/model_io.hpp"

namespace mace {

namespace {

constexpr int kSchema = 1;

std::string resolve(const std::string& base, const std::string& p) {
  if (p.empty() || base.empty() || std::filesystem::path(p).is_absolute()) return p;
  auto r = (std::filesystem::path(base) / p).lexically_normal();
  if (!r.has_filename() && r.has_parent_path() && r != r.root_path()) r = r.parent_path();
  return r.string();
}

}  // namespace

RunConfig parse_run_config(const nlohmann::json& doc, const std::string& base_dir) {
  RunConfig cfg;
  JsonReader top(doc, "");
  int schema = 0;
  top.require("schema", schema);
  if (schema != kSchema) throw ConfigError("schema: unsupported version " + std::to_string(schema));
  top.get("seed", cfg.seed);

  const nlohmann::json empty = nlohmann::json::object();
  model_config_from_json(top.has("model") ? top.raw("model") : empty, top.has("radial") ? top.raw("radial") : empty,
                         cfg.model);

  JsonReader opt = top.child("optimizer");
  OptimizerConfig& o = cfg.train.optimizer;
  opt.get("lr", o.lr);
  opt.get("beta1", o.beta1);
  opt.get("beta2", o.beta2);
  opt.get("eps", o.eps);
  opt.get("amsgrad", o.amsgrad);
  opt.get("weight_decay", o.weight_decay);
  opt.get("batch_size", o.batch_size);
  opt.get("max_epochs", o.max_epochs);
  opt.get("lambda_e", cfg.train.loss.lambda_e);
  opt.get("lambda_f", cfg.train.loss.lambda_f);
  opt.get("patience", cfg.train.patience);
  opt.get("decay_factor", cfg.train.decay_factor);
  opt.get("ema_decay", cfg.train.ema_decay);
  opt.finish();
  o.seed = cfg.seed;

  JsonReader data = top.child("data");
  data.require("train_path", cfg.data.train_path);
  if (data.has("valid_fraction")) {
    double f = 0.0;
    data.get("valid_fraction", f);
    cfg.data.valid_fraction = f;
  }
  data.get("valid_path", cfg.data.valid_path);
  data.get("test_path", cfg.data.test_path);
  data.finish();
  if (cfg.data.valid_fraction && !cfg.data.valid_path.empty())
    throw ConfigError("data: valid_fraction and valid_path are mutually exclusive");
  if (!cfg.data.valid_fraction && cfg.data.valid_path.empty()) cfg.data.valid_fraction = 0.1;
  if (cfg.data.valid_fraction && !(*cfg.data.valid_fraction > 0.0 && *cfg.data.valid_fraction < 1.0))
    throw ConfigError("data.valid_fraction must lie in (0, 1)");
  cfg.data.train_path = resolve(base_dir, cfg.data.train_path);
  cfg.data.valid_path = resolve(base_dir, cfg.data.valid_path);
  cfg.data.test_path = resolve(base_dir, cfg.data.test_path);

  JsonReader out = top.child("output");
  out.get("directory", cfg.output.directory);
  out.get("checkpoint_every", cfg.output.checkpoint_every);
  out.finish();
  if (cfg.output.checkpoint_every < 0) throw ConfigError("output.checkpoint_every must be >= 0");
  cfg.output.directory = resolve(base_dir, cfg.output.directory);
  top.finish();

  // Everything but the element list can be checked before data is read.
  MaceConfig probe = cfg.model;
  if (probe.elements.empty()) probe.elements = {1};
  probe.validate();
  cfg.train.optimizer.validate();
  if (cfg.train.loss.lambda_e < 0.0 || cfg.train.loss.lambda_f < 0.0)
    throw ConfigError("optimizer.lambda_e and optimizer.lambda_f must be >= 0");
  if (cfg.train.patience < 0) throw ConfigError("optimizer.patience must be >= 0");
  if (!(cfg.train.decay_factor > 0.0 && cfg.train.decay_factor <= 1.0))
    throw ConfigError("optimizer.decay_factor must lie in (0, 1]");
  if (!(cfg.train.ema_decay >= 0.0 && cfg.train.ema_decay < 1.0))
    throw ConfigError("optimizer.ema_decay must lie in [0, 1)");
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_run_config(doc, std::filesystem::path(path).parent_path().string());
}

nlohmann::json run_config_to_json(const RunConfig& cfg) {
  const auto& o = cfg.train.optimizer;
  nlohmann::json data = {{"train_path", cfg.data.train_path}};
  if (cfg.data.valid_fraction) data["valid_fraction"] = *cfg.data.valid_fraction;
  if (!cfg.data.valid_path.empty()) data["valid_path"] = cfg.data.valid_path;
  if (!cfg.data.test_path.empty()) data["test_path"] = cfg.data.test_path;
  return {{"schema", kSchema},
          {"seed", cfg.seed},
          {"model", model_config_to_json(cfg.model)},
          {"radial", radial_config_to_json(cfg.model.radial)},
          {"optimizer",
           {{"lr", o.lr},
            {"beta1", o.beta1},
            {"beta2", o.beta2},
            {"eps", o.eps},
            {"amsgrad", o.amsgrad},
            {"weight_decay", o.weight_decay},
            {"batch_size", o.batch_size},
            {"max_epochs", o.max_epochs},
            {"lambda_e", cfg.train.loss.lambda_e},
            {"lambda_f", cfg.train.loss.lambda_f},
            {"patience", cfg.train.patience},
            {"decay_factor", cfg.train.decay_factor},
            {"ema_decay", cfg.train.ema_decay}}},
          {"data", data},
          {"output", {{"directory", cfg.output.directory}, {"checkpoint_every", cfg.output.checkpoint_every}}}};
}

}  // namespace mace
