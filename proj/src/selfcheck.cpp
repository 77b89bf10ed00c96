#include "mace/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "mace/clebsch_gordan.hpp"
#include "mace/contraction.hpp"
#include "mace/gradients.hpp"
#include "mace/sph_harm.hpp"
#include "mace/wigner.hpp"

namespace mace {

namespace {

Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::Quaterniond q(g(rng), g(rng), g(rng), g(rng));
  q.normalize();
  return q.toRotationMatrix();
}

Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vec3 v{g(rng), g(rng), g(rng)};
  const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  for (double& x : v) x /= n;
  return v;
}

double legendre(int l, double x) {
  double p0 = 1.0, p1 = x;
  if (l == 0) return p0;
  for (int k = 2; k <= l; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

Configuration random_molecule(std::size_t n, const std::vector<int>& elements, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.6, 1.6);
  Configuration c;
  while (c.size() < n) {
    const Vec3 p{u(rng), u(rng), u(rng)};
    bool ok = true;
    for (const auto& q : c.positions)
      if (std::hypot(p[0] - q[0], p[1] - q[1], p[2] - q[2]) < 0.8) ok = false;
    if (!ok) continue;
    c.positions.push_back(p);
    c.species.push_back(elements[rng() % elements.size()]);
  }
  return c;
}

Configuration transformed(const Configuration& c, const Eigen::Matrix3d& Q, const Vec3& shift) {
  Configuration out = c;
  for (auto& p : out.positions) {
    const Eigen::Vector3d v = Q * Eigen::Vector3d(p[0], p[1], p[2]);
    p = {v[0] + shift[0], v[1] + shift[1], v[2] + shift[2]};
  }
  return out;
}

MaceConfig check_config() {
  MaceConfig cfg;
  cfg.num_layers = 2;
  cfg.correlation = 3;
  cfg.l_max = 3;
  cfg.L_max = 2;
  cfg.channels = 4;
  cfg.elements = {1, 6, 8};
  cfg.radial.r_cut = 3.0;
  cfg.radial.n_basis = 6;
  cfg.radial.mlp_widths = {8, 8};
  return cfg;
}

double cg_orthogonality(int lmax) {
  double worst = 0.0;
  for (int l1 = 0; l1 <= lmax; ++l1)
    for (int l2 = 0; l2 <= lmax; ++l2)
      for (int l3 = std::abs(l1 - l2); l3 <= l1 + l2; ++l3)
        for (int l3p = std::abs(l1 - l2); l3p <= l1 + l2; ++l3p) {
          const CGTable& a = cg_real_cached(l1, l2, l3);
          const CGTable& b = cg_real_cached(l1, l2, l3p);
          for (int m3 = -l3; m3 <= l3; ++m3)
            for (int m3p = -l3p; m3p <= l3p; ++m3p) {
              double s = 0.0;
              for (int m1 = -l1; m1 <= l1; ++m1)
                for (int m2 = -l2; m2 <= l2; ++m2) s += a.at(m1, m2, m3) * b.at(m1, m2, m3p);
              worst = std::max(worst, std::fabs(s - (l3 == l3p && m3 == m3p ? 1.0 : 0.0)));
            }
        }
  return worst;
}

double sh_addition(std::mt19937_64& rng) {
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Vec3 u = random_unit(rng), v = random_unit(rng);
    const auto yu = real_sph_harm(6, u), yv = real_sph_harm(6, v);
    const double c = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
    for (int l = 0; l <= 6; ++l) {
      double s = 0.0;
      for (int m = -l; m <= l; ++m) s += yu[lm_index(l, m)] * yv[lm_index(l, m)];
      worst = std::max(worst, std::fabs(s - (2 * l + 1) / (4 * std::numbers::pi) * legendre(l, c)));
    }
  }
  return worst;
}

double wigner_composition(std::mt19937_64& rng) {
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::Matrix3d a = random_rotation(rng), b = random_rotation(rng);
    for (int L = 0; L <= 4; ++L)
      worst = std::max(worst, (wigner_d_real(L, a * b) - wigner_d_real(L, a) * wigner_d_real(L, b)).cwiseAbs().maxCoeff());
  }
  return worst;
}

double contraction_oracle(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  double worst = 0.0;
  for (int nu = 1; nu <= 3; ++nu) {
    const int lmax = 2, Lmax = 2;
    const auto blocks = enumerate_product_blocks(nu, lmax, Lmax);
    const ContractionPlan plan = build_contraction_plan(blocks, nu, lmax, Lmax);
    const std::size_t N = 3, K = 3, S = 2;
    IrrepTensor A(N, K, lmax);
    for (double& x : A.data) x = g(rng);
    std::vector<std::vector<double>> w;
    for (const auto& b : plan.blocks) {
      w.emplace_back(S * K * b.num_paths);
      for (double& x : w.back()) x = g(rng);
    }
    const std::vector<std::size_t> elem{0, 1, 1};
    const IrrepTensor a = looped_contraction(A, plan, w, elem, S);
    const IrrepTensor b = brute_force_message(A, blocks, w, elem, nu, Lmax);
    for (std::size_t j = 0; j < a.data.size(); ++j) worst = std::max(worst, std::fabs(a.data[j] - b.data[j]));
  }
  return worst;
}

struct ModelDeviations {
  double energy = 0.0, features = 0.0, forces = 0.0, inversion = 0.0, translation = 0.0;
  bool permutation_exact = true;
};

ModelDeviations model_checks(const MaceModel& model, std::mt19937_64& rng) {
  ModelDeviations d;
  for (int trial = 0; trial < 4; ++trial) {
    const ModelParams p = model.init_params(rng());
    const Configuration c = random_molecule(5, model.config().elements, rng);
    const Eigen::Matrix3d Q = random_rotation(rng);
    const ForwardResult base = model.forward(c, p);
    const Configuration rc = transformed(c, Q, {0, 0, 0});
    const ForwardResult rot = model.forward(rc, p);
    d.energy = std::max(d.energy, std::fabs(rot.energy - base.energy));
    d.inversion = std::max(
        d.inversion, std::fabs(model.forward(transformed(c, -Eigen::Matrix3d::Identity(), {0, 0, 0}), p).energy - base.energy));
    d.translation = std::max(
        d.translation,
        std::fabs(model.forward(transformed(c, Eigen::Matrix3d::Identity(), {1.7, -0.4, 2.2}), p).energy - base.energy));

    for (std::size_t t = 0; t < base.features.size(); ++t) {
      const IrrepTensor& a = base.features[t];
      const IrrepTensor& b = rot.features[t];
      for (int L = 0; L <= a.lmax; ++L) {
        const Eigen::MatrixXd D = wigner_d_real(L, Q);
        for (std::size_t i = 0; i < a.nodes; ++i)
          for (std::size_t k = 0; k < a.channels; ++k) {
            Eigen::VectorXd va(2 * L + 1), vb(2 * L + 1);
            for (int M = -L; M <= L; ++M) {
              va[M + L] = a(i, k, L, M);
              vb[M + L] = b(i, k, L, M);
            }
            d.features = std::max(d.features, (vb - D * va).cwiseAbs().maxCoeff());
          }
      }
    }

    const Prediction f0 = predict(model, p, c), f1 = predict(model, p, rc);
    for (std::size_t i = 0; i < c.size(); ++i) {
      const Eigen::Vector3d want = Q * Eigen::Vector3d(f0.forces[i][0], f0.forces[i][1], f0.forces[i][2]);
      for (int a = 0; a < 3; ++a) d.forces = std::max(d.forces, std::fabs(f1.forces[i][a] - want[a]));
    }

    std::vector<std::size_t> perm(c.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Configuration pc = c;
    for (std::size_t i = 0; i < c.size(); ++i) {
      pc.positions[i] = c.positions[perm[i]];
      pc.species[i] = c.species[perm[i]];
    }
    const double pe = model.forward(pc, p).energy;
    if (std::memcmp(&pe, &base.energy, sizeof pe) != 0) d.permutation_exact = false;
  }
  return d;
}

double force_fd(const MaceModel& model, std::mt19937_64& rng) {
  double worst = 0.0;
  for (int trial = 0; trial < 2; ++trial) {
    const ModelParams p = model.init_params(rng());
    const Configuration c = random_molecule(3, model.config().elements, rng);
    const Prediction pr = predict(model, p, c);
    double err = 0.0, ref = 0.0;
    const double h = 1e-4;
    for (std::size_t i = 0; i < c.size(); ++i)
      for (int a = 0; a < 3; ++a) {
        Configuration cp = c, cm = c;
        cp.positions[i][a] += h;
        cm.positions[i][a] -= h;
        const double fd = -(model.forward(cp, p).energy - model.forward(cm, p).energy) / (2 * h);
        err = std::max(err, std::fabs(fd - pr.forces[i][a]));
        ref = std::max(ref, std::fabs(fd));
      }
    worst = std::max(worst, err / ref);
  }
  return worst;
}

double loss_gradient_fd(const BuildHooks& hooks, std::mt19937_64& rng) {
  MaceConfig cfg;
  cfg.num_layers = 2;
  cfg.correlation = 2;
  cfg.l_max = 1;
  cfg.L_max = 1;
  cfg.channels = 2;
  cfg.elements = {1, 8};
  cfg.radial.r_cut = 3.0;
  cfg.radial.n_basis = 3;
  cfg.radial.mlp_widths = {3};
  cfg.readout_mlp_width = 3;
  const MaceModel model(cfg, {-0.2, 1.3, 2.0}, hooks);
  ModelParams p = model.init_params(rng());
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Configuration> configs;
  for (std::size_t n : {3u, 4u}) {
    Configuration c = random_molecule(n, cfg.elements, rng);
    c.energy = g(rng);
    std::vector<Vec3> f(n);
    for (auto& v : f) v = {g(rng), g(rng), g(rng)};
    c.forces = f;
    configs.push_back(std::move(c));
  }
  const std::vector<const Configuration*> batch{&configs[0], &configs[1]};
  const LossConfig loss{1.0, 1000.0};
  const auto grad = grad_loss(model, p, batch, loss).d_params.flatten();
  std::vector<double> flat = p.flatten();
  double err = 0.0, ref = 0.0;
  const double h = 1e-6;
  for (std::size_t j = 0; j < flat.size(); ++j) {
    const double x = flat[j];
    flat[j] = x + h;
    p.assign_flat(flat);
    const double up = loss_value(model, p, batch, loss);
    flat[j] = x - h;
    p.assign_flat(flat);
    const double down = loss_value(model, p, batch, loss);
    flat[j] = x;
    const double fd = (up - down) / (2 * h);
    err = std::max(err, std::fabs(fd - grad[j]));
    ref = std::max(ref, std::fabs(fd));
  }
  return err / ref;
}

}  // namespace

std::vector<CheckResult> run_selfcheck(std::uint64_t seed, const BuildHooks& hooks) {
  std::vector<CheckResult> out;
  auto add = [&](const std::string& name, std::uint64_t s, double value, double tol) {
    out.push_back({name, s, value, tol, std::isfinite(value) && value <= tol});
  };
  std::uint64_t s = seed;
  {
    add("cg_orthogonality", s, cg_orthogonality(3), 1e-12);
  }
  {
    std::mt19937_64 rng(++s);
    add("sh_addition_theorem", s, sh_addition(rng), 1e-12);
  }
  {
    std::mt19937_64 rng(++s);
    add("wigner_composition", s, wigner_composition(rng), 1e-10);
  }
  {
    std::mt19937_64 rng(++s);
    add("contraction_vs_dense_oracle", s, contraction_oracle(rng), 1e-10);
  }
  {
    std::mt19937_64 rng(++s);
    const MaceModel model(check_config(), {-1.0, 1.3, 2.0}, hooks);
    const ModelDeviations d = model_checks(model, rng);
    add("energy_rotation_invariance", s, d.energy, 1e-9);
    add("feature_equivariance", s, d.features, 1e-8);
    add("force_equivariance", s, d.forces, 1e-8);
    add("inversion_invariance", s, d.inversion, 1e-9);
    add("translation_invariance", s, d.translation, 1e-9);
    add("permutation_invariance_exact", s, d.permutation_exact ? 0.0 : 1.0, 0.0);
  }
  {
    std::mt19937_64 rng(++s);
    const MaceModel model(check_config(), {-1.0, 1.0, 1.5}, hooks);
    add("forces_vs_finite_differences", s, force_fd(model, rng), 1e-6);
  }
  {
    std::mt19937_64 rng(++s);
    add("loss_gradient_vs_finite_differences", s, loss_gradient_fd(hooks, rng), 1e-4);
  }
  return out;
}

std::string format_check_table(const std::vector<CheckResult>& results) {
  std::string s = fmt::format("{:<38} {:>20} {:>12} {:>10}  {}\n", "property", "seed", "value", "tolerance", "result");
  for (const auto& r : results)
    s += fmt::format("{:<38} {:>20} {:>12.3e} {:>10.0e}  {}\n", r.name, r.seed, r.value, r.tolerance,
                     r.passed ? "pass" : "FAIL");
  return s;
}

}  // namespace mace
