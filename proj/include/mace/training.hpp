#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mace/configuration.hpp"
#include "mace/gradients.hpp"
#include "mace/model.hpp"

namespace mace {

struct OptimizerConfig {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  bool amsgrad = true;
  double weight_decay = 5e-7;  // on tensors tagged `decay` only
  std::size_t batch_size = 5;
  int max_epochs = 100;
  std::uint64_t seed = 0;

  // Throws ConfigError.
  void validate() const;
};

struct AdamState {
  std::size_t step = 0;
  std::vector<double> m, v, v_max;  // flat, in parameter order
};

// grads += weight_decay * params on decay-tagged tensors (L2 folded into the gradient).
void add_weight_decay(ModelParams& grads, const ModelParams& params, double weight_decay);

// One Adam/AMSGrad step at learning rate lr, weight decay included. Throws
// ContractViolation on shape mismatch between params, grads and state.
void amsgrad_step(ModelParams& params, const ModelParams& grads, AdamState& state, const OptimizerConfig& cfg,
                  double lr);

struct SchedulerState {
  double best_validation_loss = std::numeric_limits<double>::infinity();
  int epochs_since_improvement = 0;
  int patience = 50;
  double decay_factor = 0.8;
};

// Returns the new learning rate. Throws NumericError on a non-finite loss.
double scheduler_step(SchedulerState& state, double validation_loss, double current_lr);

struct EMAState {
  double decay = 0.99;
  ModelParams shadow;
};

EMAState ema_init(const ModelParams& params, double decay);
void ema_update(EMAState& state, const ModelParams& params);

// Energies in meV and meV/atom, forces in meV/Å.
struct Metrics {
  std::size_t configs = 0;
  std::size_t force_components = 0;
  double e_mae = 0.0, e_rmse = 0.0;
  double e_mae_per_atom = 0.0, e_rmse_per_atom = 0.0;
  double f_mae = 0.0, f_rmse = 0.0;
};

nlohmann::json metrics_to_json(const Metrics& m);

// Labels from `labelled`, predictions from `predictions` (same order and sizes).
// Throws DataError on missing labels.
Metrics compute_metrics(const std::vector<Configuration>& labelled, const std::vector<Prediction>& predictions);

std::vector<Prediction> predict_all(const MaceModel& model, const ModelParams& params,
                                    const std::vector<Configuration>& configs, std::size_t threads);
Metrics evaluate(const MaceModel& model, const ModelParams& params, const std::vector<Configuration>& configs,
                 std::size_t threads);

// Shift from the mean per-atom energy, scale from the force RMS and pooling
// normalization from the mean neighbor count, all over `train`.
ModelScaling scaling_from_data(const std::vector<Configuration>& train, double r_cut);

// Seeded shuffle, then the last round(fraction * n) configurations form the validation set.
std::pair<std::vector<Configuration>, std::vector<Configuration>> split_dataset(std::vector<Configuration> configs,
                                                                               double valid_fraction,
                                                                               std::uint64_t seed);

struct EpochRecord {
  int epoch = 0;  // 1-based
  double lr = 0.0;
  double train_loss = 0.0;  // mean batch loss during the epoch
  double val_loss = 0.0;    // on EMA weights
  double e_mae = 0.0;       // validation, meV
  double f_mae = 0.0;       // validation, meV/Å
  double f_rmse = 0.0;
};

struct TrainOptions {
  OptimizerConfig optimizer;
  LossConfig loss;
  int patience = 50;
  double decay_factor = 0.8;
  double ema_decay = 0.99;
  std::size_t threads = 1;
  // Called after each epoch with the record and the current EMA weights.
  std::function<void(const EpochRecord&, const ModelParams&)> on_epoch;
};

struct TrainResult {
  ModelParams params;       // EMA weights after the last epoch
  ModelParams best_params;  // EMA weights at the lowest validation loss
  int best_epoch = 0;
  double best_val_loss = std::numeric_limits<double>::infinity();
  std::vector<EpochRecord> history;
};

// Throws DataError on an empty split.
TrainResult train(const MaceModel& model, const ModelParams& init, const std::vector<Configuration>& train_set,
                  const std::vector<Configuration>& valid_set, const TrainOptions& options);

void write_history_csv(const std::string& path, const std::vector<EpochRecord>& history);
nlohmann::json history_summary(const TrainResult& result);

}  // namespace mace
