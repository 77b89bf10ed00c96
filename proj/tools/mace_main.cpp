// mace: train | eval | predict | selfcheck
// Exit codes: 0 ok, 1 property failure, 2 config, 3 data, 4 numeric.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "mace/errors.hpp"
#include "mace/extxyz.hpp"
#include "mace/model_io.hpp"
#include "mace/parallel.hpp"
#include "mace/run_config.hpp"
#include "mace/selfcheck.hpp"
#include "mace/training.hpp"

namespace {

using namespace mace;

enum Exit { kOk = 0, kPropertyFailure = 1, kConfig = 2, kData = 3, kNumeric = 4 };

std::vector<Configuration> read_data(const std::string& path) {
  if (!std::filesystem::exists(path)) throw DataError("data file '" + path + "' does not exist");
  try {
    return read_extxyz_file(path);
  } catch (const ParseError& e) {
    throw DataError("'" + path + "': " + e.what());
  }
}

void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw DataError("cannot open '" + path + "' for writing");
  f << j.dump(2) << "\n";
}

int cmd_train(const std::string& config_path) {
  const RunConfig cfg = load_run_config(config_path);
  std::vector<Configuration> train_set, valid_set, test_set;
  if (cfg.data.valid_path.empty()) {
    std::tie(train_set, valid_set) = split_dataset(read_data(cfg.data.train_path), *cfg.data.valid_fraction, cfg.seed);
  } else {
    train_set = read_data(cfg.data.train_path);
    valid_set = read_data(cfg.data.valid_path);
  }
  if (!cfg.data.test_path.empty()) test_set = read_data(cfg.data.test_path);

  MaceConfig model_cfg = cfg.model;
  if (model_cfg.elements.empty()) {
    std::set<int> zs;
    for (const auto* set : {&train_set, &valid_set})
      for (const auto& c : *set) zs.insert(c.species.begin(), c.species.end());
    model_cfg.elements.assign(zs.begin(), zs.end());
  }
  model_cfg.validate();
  if (train_set.empty()) throw DataError("training set is empty");

  const MaceModel model(model_cfg, scaling_from_data(train_set, model_cfg.r_cut()));
  for (const auto& c : test_set) model.element_indices(c);
  const ModelParams init = model.init_params(cfg.seed);

  const std::filesystem::path out_dir(cfg.output.directory);
  std::filesystem::create_directories(out_dir);
  TrainOptions opt = cfg.train;
  opt.threads = kernel_threads();
  opt.on_epoch = [&](const EpochRecord& r, const ModelParams& ema) {
    std::cerr << fmt::format("epoch {:4d}  lr {:.3e}  train {:.6e}  valid {:.6e}  E_mae {:.3f} meV  F_mae {:.3f} meV/A\n",
                             r.epoch, r.lr, r.train_loss, r.val_loss, r.e_mae, r.f_mae);
    if (cfg.output.checkpoint_every > 0 && r.epoch % cfg.output.checkpoint_every == 0)
      save_model((out_dir / "checkpoint.mace").string(), model, ema);
  };
  const TrainResult result = train(model, init, train_set, valid_set, opt);

  save_model((out_dir / "model.mace").string(), model, result.params);
  save_model((out_dir / "best.mace").string(), model, result.best_params);
  write_history_csv((out_dir / "history.csv").string(), result.history);
  nlohmann::json summary = history_summary(result);
  summary["train_metrics"] = metrics_to_json(evaluate(model, result.params, train_set, opt.threads));
  summary["valid_metrics"] = metrics_to_json(evaluate(model, result.params, valid_set, opt.threads));
  if (!test_set.empty()) summary["test_metrics"] = metrics_to_json(evaluate(model, result.params, test_set, opt.threads));
  RunConfig resolved = cfg;
  resolved.model = model_cfg;
  summary["config"] = run_config_to_json(resolved);
  write_json((out_dir / "summary.json").string(), summary);
  std::cout << summary.dump(2) << "\n";
  return kOk;
}

int cmd_eval(const std::string& model_path, const std::string& data_path) {
  const LoadedModel lm = load_model(model_path);
  const auto data = read_data(data_path);
  const Metrics m = evaluate(lm.model(), lm.params, data, kernel_threads());
  std::cout << metrics_to_json(m).dump(2) << "\n";
  return kOk;
}

int cmd_predict(const std::string& model_path, const std::string& data_path, const std::string& out_path) {
  const LoadedModel lm = load_model(model_path);
  auto data = read_data(data_path);
  const auto pred = predict_all(lm.model(), lm.params, data, kernel_threads());
  for (std::size_t b = 0; b < data.size(); ++b) {
    data[b].energy_pred = pred[b].energy;
    data[b].forces_pred = pred[b].forces;
  }
  write_extxyz_file(out_path, data, true);
  return kOk;
}

int cmd_selfcheck(std::uint64_t seed, const std::string& fault) {
  BuildHooks hooks;
  if (fault == "cg-sign-flip") {
    hooks.flip_cg_sign = true;
  } else if (!fault.empty()) {
    throw ConfigError("unknown fault '" + fault + "' (known: cg-sign-flip)");
  }
  const auto results = run_selfcheck(seed, hooks);
  std::cout << format_check_table(results);
  int status = kOk;
  for (const auto& r : results)
    if (!r.passed) {
      std::cerr << fmt::format("property '{}' failed (seed {}): {:.3e} > {:.0e}\n", r.name, r.seed, r.value, r.tolerance);
      status = kPropertyFailure;
    }
  return status;
}

template <class F>
int guarded(F&& f) {
  try {
    return f();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const ParseError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const ContractViolation& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MACE interatomic potential: training, evaluation and self-checks"};
  app.require_subcommand(1);

  std::string config_path, model_path, data_path, out_path, fault;
  std::uint64_t seed = 0;

  auto* train = app.add_subcommand("train", "Train a model from a JSON run configuration");
  train->add_option("--config", config_path, "Run configuration (JSON)")->required();

  auto* eval = app.add_subcommand("eval", "Print error metrics of a model on a labelled dataset");
  eval->add_option("--model", model_path)->required();
  eval->add_option("--data", data_path, "Labelled extended XYZ")->required();

  auto* predict = app.add_subcommand("predict", "Write predicted energies and forces as extended XYZ");
  predict->add_option("--model", model_path)->required();
  predict->add_option("--data", data_path)->required();
  predict->add_option("--out", out_path)->required();

  auto* selfcheck = app.add_subcommand("selfcheck", "Run the embedded property suite");
  selfcheck->add_option("--seed", seed);
  selfcheck->add_option("--inject-fault", fault, "Test-only fault: cg-sign-flip");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  if (*train) return guarded([&] { return cmd_train(config_path); });
  if (*eval) return guarded([&] { return cmd_eval(model_path, data_path); });
  if (*predict) return guarded([&] { return cmd_predict(model_path, data_path, out_path); });
  return guarded([&] { return cmd_selfcheck(seed, fault); });
}
