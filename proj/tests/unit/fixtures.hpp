#pragma once

#include <cmath>
#include <cstring>
#include <random>

#include <Eigen/Dense>

#include "mace/configuration.hpp"
#include "mace/model.hpp"

namespace mace::testing {

inline MaceConfig small_config(int T = 2, int nu = 3, int lmax = 3, int Lmax = 2, std::size_t K = 4) {
  MaceConfig cfg;
  cfg.num_layers = T;
  cfg.correlation = nu;
  cfg.l_max = lmax;
  cfg.L_max = Lmax;
  cfg.channels = K;
  cfg.elements = {1, 6, 8};
  cfg.radial.r_cut = 3.0;
  cfg.radial.n_basis = 6;
  cfg.radial.mlp_widths = {8, 8};
  return cfg;
}

inline Configuration random_molecule(std::size_t n, std::mt19937_64& rng, double box = 1.8) {
  std::uniform_real_distribution<double> u(-box, box);
  std::uniform_int_distribution<int> pick(0, 2);
  const int Z[3] = {1, 6, 8};
  Configuration c;
  while (c.size() < n) {
    Vec3 p{u(rng), u(rng), u(rng)};
    bool ok = true;
    for (const auto& q : c.positions)
      if (std::hypot(p[0] - q[0], p[1] - q[1], p[2] - q[2]) < 0.8) ok = false;
    if (!ok) continue;
    c.positions.push_back(p);
    c.species.push_back(Z[pick(rng)]);
  }
  return c;
}

inline Configuration transformed(const Configuration& c, const Eigen::Matrix3d& Q, const Vec3& shift = {0, 0, 0}) {
  Configuration out = c;
  for (auto& p : out.positions) {
    const Eigen::Vector3d v = Q * Eigen::Vector3d(p[0], p[1], p[2]);
    p = {v[0] + shift[0], v[1] + shift[1], v[2] + shift[2]};
  }
  return out;
}

inline bool bit_equal(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

// Random but fixed labels so every loss term is non-trivial.
inline Configuration with_random_labels(Configuration c, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  c.energy = g(rng);
  std::vector<Vec3> f(c.size());
  for (auto& v : f) v = {g(rng), g(rng), g(rng)};
  c.forces = f;
  return c;
}

}  // namespace mace::testing
