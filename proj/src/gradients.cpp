#include "mace/gradients.hpp"

#include <string>

#include "mace/dual.hpp"
#include "mace/errors.hpp"
#include "mace/parallel.hpp"

namespace mace {

namespace {

using D = Dual<double>;

struct Contribution {
  double energy_residual = 0.0;  // Ê - E
  double force_sq = 0.0;         // Σ (F̂ - F)²
  std::vector<std::vector<double>> d_energy;   // ∂Ê/∂θ per tensor
  std::vector<std::vector<double>> d_force;    // Σ v·∂²Ê/∂r∂θ per tensor
};

void check_labels(const Configuration& c, std::size_t b, const LossConfig& loss) {
  if (loss.lambda_e != 0.0 && !c.energy)
    throw DataError("configuration " + std::to_string(b) + " has no energy label");
  if (loss.lambda_f != 0.0 && !c.forces)
    throw DataError("configuration " + std::to_string(b) + " has no force labels");
}

std::vector<double> flat_positions(const Configuration& c) {
  std::vector<double> x;
  x.reserve(3 * c.size());
  for (const auto& p : c.positions) x.insert(x.end(), p.begin(), p.end());
  return x;
}

std::vector<std::vector<double>> param_values(const ModelParams& p) {
  std::vector<std::vector<double>> v;
  v.reserve(p.tensors.size());
  for (const auto& t : p.tensors) v.push_back(t.values);
  return v;
}

Contribution contribute(const MaceModel& model, const ModelParams& params, const Configuration& c,
                        const LossConfig& loss, bool want_grad) {
  const NeighborList nl = build_neighbor_list(c, model.config().r_cut());
  const std::vector<double> x = flat_positions(c);
  auto pv = param_values(params);

  Recording<double> rec = model.record<double>(c, nl, x, pv);
  rec.tape.backward(rec.energy);
  Contribution out;
  const double e_hat = rec.tape.value(rec.energy)[0];
  if (c.energy) out.energy_residual = e_hat - *c.energy;

  std::vector<double> v(x.size(), 0.0);
  if (c.forces) {
    const auto dx = rec.tape.adjoint(rec.positions);
    for (std::size_t i = 0; i < c.size(); ++i)
      for (std::size_t a = 0; a < 3; ++a) {
        const double r = -dx[3 * i + a] - (*c.forces)[i][a];
        v[3 * i + a] = r;
        out.force_sq += r * r;
      }
  }
  if (!want_grad) return out;

  out.d_energy.resize(pv.size());
  for (std::size_t t = 0; t < pv.size(); ++t) {
    const auto a = rec.tape.adjoint(rec.params[t]);
    out.d_energy[t].assign(a.begin(), a.end());
  }
  if (loss.lambda_f == 0.0) return out;

  // Second pass: positions carry tangent v, so the tangent part of the
  // parameter adjoints is the directional derivative of ∂Ê/∂θ along v.
  std::vector<D> xd(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) xd[i] = D(x[i], v[i]);
  std::vector<std::vector<D>> pd(pv.size());
  for (std::size_t t = 0; t < pv.size(); ++t) pd[t].assign(pv[t].begin(), pv[t].end());
  Recording<D> drec = model.record<D>(c, nl, std::move(xd), std::move(pd));
  drec.tape.backward(drec.energy);
  out.d_force.resize(pv.size());
  for (std::size_t t = 0; t < pv.size(); ++t) {
    const auto a = drec.tape.adjoint(drec.params[t]);
    out.d_force[t].resize(a.size());
    for (std::size_t j = 0; j < a.size(); ++j) out.d_force[t][j] = a[j].d;
  }
  return out;
}

LossResult evaluate(const MaceModel& model, const ModelParams& params, const std::vector<const Configuration*>& batch,
                    const LossConfig& loss, std::size_t threads, bool want_grad) {
  if (batch.empty()) throw ContractViolation("loss over an empty batch");
  model.check_params(params);
  std::size_t n_atoms = 0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    batch[b]->validate();
    check_labels(*batch[b], b, loss);
    n_atoms += batch[b]->size();
  }
  std::vector<Contribution> parts(batch.size());
  parallel_for(batch.size(), threads,
               [&](std::size_t b) { parts[b] = contribute(model, params, *batch[b], loss, want_grad); });

  const double B = static_cast<double>(batch.size());
  const double ce = loss.lambda_e / B;
  const double cf = n_atoms ? loss.lambda_f / (3.0 * B * static_cast<double>(n_atoms)) : 0.0;
  LossResult r;
  if (want_grad) r.d_params = params.zeros_like();
  for (const auto& p : parts) {
    r.energy_term += ce * p.energy_residual * p.energy_residual;
    r.force_term += cf * p.force_sq;
    if (!want_grad) continue;
    const double ge = 2.0 * ce * p.energy_residual;
    for (std::size_t t = 0; t < r.d_params.tensors.size(); ++t) {
      auto& g = r.d_params.tensors[t].values;
      for (std::size_t j = 0; j < g.size(); ++j) {
        g[j] += ge * p.d_energy[t][j];
        // ∂/∂θ Σ (F̂ - F)² = -2 Σ v·∂²Ê/∂r∂θ
        if (!p.d_force.empty()) g[j] -= 2.0 * cf * p.d_force[t][j];
      }
    }
  }
  r.loss = r.energy_term + r.force_term;
  return r;
}

}  // namespace

Prediction predict(const MaceModel& model, const ModelParams& params, const Configuration& config) {
  auto [e, g] = model.grad_energy(config, params);
  Prediction p;
  p.energy = e;
  p.forces.resize(config.size());
  for (std::size_t i = 0; i < config.size(); ++i)
    for (std::size_t a = 0; a < 3; ++a) p.forces[i][a] = -g.d_positions[i][a];
  return p;
}

LossResult grad_loss(const MaceModel& model, const ModelParams& params, const std::vector<const Configuration*>& batch,
                     const LossConfig& loss, std::size_t threads) {
  return evaluate(model, params, batch, loss, threads, true);
}

double loss_value(const MaceModel& model, const ModelParams& params, const std::vector<const Configuration*>& batch,
                  const LossConfig& loss, std::size_t threads) {
  return evaluate(model, params, batch, loss, threads, false).loss;
}

}  // namespace mace
