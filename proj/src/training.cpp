#include "mace/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "mace/dataset_stats.hpp"
#include "mace/errors.hpp"
#include "mace/parallel.hpp"

namespace mace {

void OptimizerConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("optimizer.lr must be > 0");
  if (!(beta1 > 0.0 && beta1 < 1.0)) throw ConfigError("optimizer.beta1 must lie in (0, 1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw ConfigError("optimizer.beta2 must lie in (0, 1)");
  if (!(eps > 0.0)) throw ConfigError("optimizer.eps must be > 0");
  if (!(weight_decay >= 0.0)) throw ConfigError("optimizer.weight_decay must be >= 0");
  if (batch_size < 1) throw ConfigError("optimizer.batch_size must be >= 1");
  if (max_epochs < 0) throw ConfigError("optimizer.max_epochs must be >= 0");
}

void add_weight_decay(ModelParams& grads, const ModelParams& params, double weight_decay) {
  if (weight_decay == 0.0) return;
  for (std::size_t t = 0; t < params.tensors.size(); ++t) {
    if (!params.tensors[t].decay) continue;
    auto& g = grads.tensors[t].values;
    const auto& p = params.tensors[t].values;
    for (std::size_t j = 0; j < g.size(); ++j) g[j] += weight_decay * p[j];
  }
}

void amsgrad_step(ModelParams& params, const ModelParams& grads, AdamState& state, const OptimizerConfig& cfg,
                  double lr) {
  if (grads.tensors.size() != params.tensors.size())
    throw ContractViolation("amsgrad_step: gradient has a different tensor count");
  for (std::size_t t = 0; t < params.tensors.size(); ++t)
    if (grads.tensors[t].values.size() != params.tensors[t].values.size())
      throw ContractViolation("amsgrad_step: gradient shape differs for '" + params.tensors[t].name + "'");
  const std::size_t n = params.total_size();
  if (state.step == 0 && state.m.empty()) {
    state.m.assign(n, 0.0);
    state.v.assign(n, 0.0);
    state.v_max.assign(n, 0.0);
  }
  if (state.m.size() != n || state.v.size() != n || state.v_max.size() != n)
    throw ContractViolation("amsgrad_step: optimizer state does not match the parameters");

  ModelParams g = grads;
  add_weight_decay(g, params, cfg.weight_decay);

  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  const double step_size = lr / bc1;
  const double sqrt_bc2 = std::sqrt(bc2);
  std::size_t i = 0;
  for (std::size_t t = 0; t < params.tensors.size(); ++t) {
    auto& p = params.tensors[t].values;
    const auto& gt = g.tensors[t].values;
    for (std::size_t j = 0; j < p.size(); ++j, ++i) {
      state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * gt[j];
      state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * gt[j] * gt[j];
      double second = state.v[i];
      if (cfg.amsgrad) {
        state.v_max[i] = std::max(state.v_max[i], state.v[i]);
        second = state.v_max[i];
      }
      p[j] -= step_size * state.m[i] / (std::sqrt(second) / sqrt_bc2 + cfg.eps);
    }
  }
}

double scheduler_step(SchedulerState& state, double validation_loss, double current_lr) {
  if (!std::isfinite(validation_loss)) throw NumericError("validation loss is not finite");
  if (validation_loss < state.best_validation_loss) {
    state.best_validation_loss = validation_loss;
    state.epochs_since_improvement = 0;
    return current_lr;
  }
  if (++state.epochs_since_improvement > state.patience) {
    state.epochs_since_improvement = 0;
    return current_lr * state.decay_factor;
  }
  return current_lr;
}

EMAState ema_init(const ModelParams& params, double decay) { return EMAState{decay, params}; }

void ema_update(EMAState& state, const ModelParams& params) {
  if (state.shadow.tensors.size() != params.tensors.size()) throw ContractViolation("ema_update: shape mismatch");
  for (std::size_t t = 0; t < params.tensors.size(); ++t) {
    auto& s = state.shadow.tensors[t].values;
    const auto& p = params.tensors[t].values;
    if (s.size() != p.size()) throw ContractViolation("ema_update: shape mismatch");
    for (std::size_t j = 0; j < s.size(); ++j) s[j] = state.decay * s[j] + (1.0 - state.decay) * p[j];
  }
}

nlohmann::json metrics_to_json(const Metrics& m) {
  return {{"configs", m.configs},
          {"force_components", m.force_components},
          {"energy_mae_meV", m.e_mae},
          {"energy_rmse_meV", m.e_rmse},
          {"energy_mae_meV_per_atom", m.e_mae_per_atom},
          {"energy_rmse_meV_per_atom", m.e_rmse_per_atom},
          {"force_mae_meV_per_A", m.f_mae},
          {"force_rmse_meV_per_A", m.f_rmse}};
}

Metrics compute_metrics(const std::vector<Configuration>& labelled, const std::vector<Prediction>& predictions) {
  if (labelled.size() != predictions.size()) throw ContractViolation("compute_metrics: size mismatch");
  Metrics m;
  m.configs = labelled.size();
  double e_abs = 0, e_sq = 0, ea_abs = 0, ea_sq = 0, f_abs = 0, f_sq = 0;
  for (std::size_t b = 0; b < labelled.size(); ++b) {
    const Configuration& c = labelled[b];
    if (!c.energy) throw DataError("configuration " + std::to_string(b) + " has no energy label");
    if (!c.forces) throw DataError("configuration " + std::to_string(b) + " has no force labels");
    const double de = 1000.0 * (predictions[b].energy - *c.energy);
    const double n = static_cast<double>(std::max<std::size_t>(c.size(), 1));
    e_abs += std::fabs(de);
    e_sq += de * de;
    ea_abs += std::fabs(de) / n;
    ea_sq += (de / n) * (de / n);
    for (std::size_t i = 0; i < c.size(); ++i)
      for (std::size_t a = 0; a < 3; ++a) {
        const double df = 1000.0 * (predictions[b].forces[i][a] - (*c.forces)[i][a]);
        f_abs += std::fabs(df);
        f_sq += df * df;
        ++m.force_components;
      }
  }
  if (m.configs) {
    const double B = static_cast<double>(m.configs);
    m.e_mae = e_abs / B;
    m.e_rmse = std::sqrt(e_sq / B);
    m.e_mae_per_atom = ea_abs / B;
    m.e_rmse_per_atom = std::sqrt(ea_sq / B);
  }
  if (m.force_components) {
    const double F = static_cast<double>(m.force_components);
    m.f_mae = f_abs / F;
    m.f_rmse = std::sqrt(f_sq / F);
  }
  return m;
}

std::vector<Prediction> predict_all(const MaceModel& model, const ModelParams& params,
                                    const std::vector<Configuration>& configs, std::size_t threads) {
  std::vector<Prediction> out(configs.size());
  parallel_for(configs.size(), threads, [&](std::size_t b) { out[b] = predict(model, params, configs[b]); });
  return out;
}

Metrics evaluate(const MaceModel& model, const ModelParams& params, const std::vector<Configuration>& configs,
                 std::size_t threads) {
  for (std::size_t b = 0; b < configs.size(); ++b) {
    if (!configs[b].energy) throw DataError("configuration " + std::to_string(b) + " has no energy label");
    if (!configs[b].forces) throw DataError("configuration " + std::to_string(b) + " has no force labels");
  }
  return compute_metrics(configs, predict_all(model, params, configs, threads));
}

ModelScaling scaling_from_data(const std::vector<Configuration>& train, double r_cut) {
  const DatasetStats stats = compute_dataset_stats(train);
  ModelScaling s;
  s.shift = stats.per_atom_shift;
  s.scale = stats.force_scale;
  // Sparse graphs (isolated atoms, dimers) are not amplified.
  s.neighbor_norm = std::max(1.0, average_neighbor_count(train, r_cut));
  return s;
}

std::pair<std::vector<Configuration>, std::vector<Configuration>> split_dataset(std::vector<Configuration> configs,
                                                                               double valid_fraction,
                                                                               std::uint64_t seed) {
  if (!(valid_fraction >= 0.0 && valid_fraction < 1.0))
    throw ConfigError("data.valid_fraction must lie in [0, 1)");
  std::vector<std::size_t> idx(configs.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::size_t n_valid = static_cast<std::size_t>(std::llround(valid_fraction * static_cast<double>(configs.size())));
  if (valid_fraction > 0.0 && n_valid == 0 && configs.size() > 1) n_valid = 1;
  const std::size_t n_train = configs.size() - n_valid;
  std::pair<std::vector<Configuration>, std::vector<Configuration>> out;
  for (std::size_t i = 0; i < idx.size(); ++i) (i < n_train ? out.first : out.second).push_back(std::move(configs[idx[i]]));
  return out;
}

namespace {

// Same formula as grad_loss with the whole set as one batch.
double loss_from_predictions(const std::vector<Configuration>& set, const std::vector<Prediction>& pred,
                             const LossConfig& loss) {
  double se = 0.0, sf = 0.0;
  std::size_t n_atoms = 0;
  for (std::size_t b = 0; b < set.size(); ++b) {
    const double de = pred[b].energy - *set[b].energy;
    se += de * de;
    for (std::size_t i = 0; i < set[b].size(); ++i)
      for (std::size_t a = 0; a < 3; ++a) {
        const double df = pred[b].forces[i][a] - (*set[b].forces)[i][a];
        sf += df * df;
      }
    n_atoms += set[b].size();
  }
  const double B = static_cast<double>(set.size());
  double out = loss.lambda_e / B * se;
  if (n_atoms) out += loss.lambda_f / (3.0 * B * static_cast<double>(n_atoms)) * sf;
  return out;
}

}  // namespace

TrainResult train(const MaceModel& model, const ModelParams& init, const std::vector<Configuration>& train_set,
                  const std::vector<Configuration>& valid_set, const TrainOptions& options) {
  if (train_set.empty()) throw DataError("training set is empty");
  if (valid_set.empty()) throw DataError("validation set is empty");
  const OptimizerConfig& opt = options.optimizer;
  opt.validate();
  model.check_params(init);
  for (const auto* set : {&train_set, &valid_set})
    for (std::size_t b = 0; b < set->size(); ++b) {
      if (!(*set)[b].energy || !(*set)[b].forces)
        throw DataError("configuration " + std::to_string(b) + " is missing energy or force labels");
      model.element_indices((*set)[b]);
    }

  TrainResult result;
  ModelParams params = init;
  AdamState adam;
  EMAState ema = ema_init(params, options.ema_decay);
  SchedulerState sched;
  sched.patience = options.patience;
  sched.decay_factor = options.decay_factor;
  result.params = ema.shadow;
  result.best_params = ema.shadow;

  std::mt19937_64 rng(opt.seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  double lr = opt.lr;

  for (int epoch = 1; epoch <= opt.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += opt.batch_size) {
      std::vector<const Configuration*> batch;
      for (std::size_t j = start; j < std::min(order.size(), start + opt.batch_size); ++j)
        batch.push_back(&train_set[order[j]]);
      const LossResult lr_out = grad_loss(model, params, batch, options.loss, options.threads);
      if (!std::isfinite(lr_out.loss)) throw NumericError(fmt::format("training loss became non-finite in epoch {}", epoch));
      loss_sum += lr_out.loss;
      ++batches;
      amsgrad_step(params, lr_out.d_params, adam, opt, lr);
      ema_update(ema, params);
    }

    const auto pred = predict_all(model, ema.shadow, valid_set, options.threads);
    const Metrics m = compute_metrics(valid_set, pred);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    rec.train_loss = loss_sum / static_cast<double>(batches);
    rec.val_loss = loss_from_predictions(valid_set, pred, options.loss);
    rec.e_mae = m.e_mae;
    rec.f_mae = m.f_mae;
    rec.f_rmse = m.f_rmse;
    if (rec.val_loss < result.best_val_loss) {
      result.best_val_loss = rec.val_loss;
      result.best_epoch = epoch;
      result.best_params = ema.shadow;
    }
    lr = scheduler_step(sched, rec.val_loss, lr);
    result.history.push_back(rec);
    if (options.on_epoch) options.on_epoch(rec, ema.shadow);
  }
  result.params = ema.shadow;
  return result;
}

void write_history_csv(const std::string& path, const std::vector<EpochRecord>& history) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw DataError("cannot open '" + path + "' for writing");
  f << "epoch,lr,train_loss,val_loss,e_mae,f_mae,f_rmse\n";
  for (const auto& r : history)
    f << fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", r.epoch, r.lr, r.train_loss, r.val_loss,
                     r.e_mae, r.f_mae, r.f_rmse);
  if (!f) throw DataError("write to '" + path + "' failed");
}

nlohmann::json history_summary(const TrainResult& result) {
  nlohmann::json j;
  j["epochs"] = result.history.size();
  j["best_epoch"] = result.best_epoch;
  j["best_val_loss"] = result.history.empty() ? nlohmann::json(nullptr) : nlohmann::json(result.best_val_loss);
  if (!result.history.empty()) {
    const auto& r = result.history.back();
    j["final"] = {{"epoch", r.epoch},       {"lr", r.lr},       {"train_loss", r.train_loss},
                  {"val_loss", r.val_loss}, {"e_mae", r.e_mae}, {"f_mae", r.f_mae},
                  {"f_rmse", r.f_rmse}};
  }
  return j;
}

}  // namespace mace
