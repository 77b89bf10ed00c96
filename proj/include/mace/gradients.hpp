#pragma once

#include <cstddef>
#include <vector>

#include "mace/configuration.hpp"
#include "mace/model.hpp"

namespace mace {

struct LossConfig {
  double lambda_e = 1.0;
  double lambda_f = 1000.0;
};

struct LossResult {
  double loss = 0.0;
  double energy_term = 0.0;  // λ_E/B Σ (Ê - E)²
  double force_term = 0.0;   // λ_F/(3 B N) Σ (F̂ - F)²
  ModelParams d_params;
};

// E and -∂E/∂r for one configuration (convenience over MaceModel::grad_energy).
struct Prediction {
  double energy = 0.0;
  std::vector<Vec3> forces;
};
Prediction predict(const MaceModel& model, const ModelParams& params, const Configuration& config);

// Loss over a batch of B labelled configurations with N atoms in total:
//   L = λ_E/B Σ_b (Ê_b - E_b)² + λ_F/(3BN) Σ_{b,i,α} (F̂_{b,iα} - F_{b,iα})²,  F̂ = -∂Ê/∂r.
// The parameter gradient of the force term is Σ v·∂²Ê/∂r∂θ with v = F̂ - F,
// taken as the tangent of ∂Ê/∂θ under a dual-number displacement r + εv.
// Per-configuration work may run on `threads` workers; the reduction is in
// batch order. Throws DataError when a configuration lacks labels.
LossResult grad_loss(const MaceModel& model, const ModelParams& params, const std::vector<const Configuration*>& batch,
                     const LossConfig& loss, std::size_t threads = 1);

// Loss value only (no parameter gradient).
double loss_value(const MaceModel& model, const ModelParams& params, const std::vector<const Configuration*>& batch,
                  const LossConfig& loss, std::size_t threads = 1);

}  // namespace mace
