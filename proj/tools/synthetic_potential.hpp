#pragma once

// Smooth analytic pair + angle potential used to label the synthetic dataset.
// Header-only so tests can regenerate labels independently of the data file.

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "mace/configuration.hpp"
#include "mace/dual.hpp"

namespace mace::synthetic {

inline constexpr double kCutoff = 4.0;  // Å

struct ElementParams {
  int z;
  double well;    // eV
  double r0;      // Å
  double offset;  // eV per atom
};

inline const std::vector<ElementParams>& element_table() {
  static const std::vector<ElementParams> t{{1, 0.20, 1.00, -0.5}, {6, 0.40, 1.40, -1.5}, {8, 0.30, 1.20, -2.0}};
  return t;
}

inline const ElementParams& params_of(int z) {
  for (const auto& e : element_table())
    if (e.z == z) return e;
  throw std::invalid_argument("synthetic potential: unsupported element");
}

// (1 - (r/rc)^2)^3, twice continuously differentiable at rc.
template <class T>
T smooth_cutoff(const T& r) {
  if (primal(r) >= kCutoff) return T(0.0);
  const T x = r / kCutoff;
  const T u = 1.0 - x * x;
  return u * u * u;
}

template <class T>
T energy(const std::vector<T>& x, const std::vector<int>& species) {
  using std::exp;
  using std::sqrt;
  const std::size_t n = species.size();
  auto dist = [&](std::size_t i, std::size_t j) {
    const T dx = x[3 * j] - x[3 * i], dy = x[3 * j + 1] - x[3 * i + 1], dz = x[3 * j + 2] - x[3 * i + 2];
    return sqrt(dx * dx + dy * dy + dz * dz);
  };
  T e(0.0);
  for (std::size_t i = 0; i < n; ++i) e = e + params_of(species[i]).offset;

  constexpr double a = 1.5;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto &pi = params_of(species[i]), &pj = params_of(species[j]);
      const double well = std::sqrt(pi.well * pj.well), r0 = 0.5 * (pi.r0 + pj.r0);
      const T r = dist(i, j);
      const T q = exp(-a * (r - r0));
      e = e + well * (q * q - 2.0 * q) * smooth_cutoff(r);
    }

  constexpr double k_angle = 0.3, cos0 = -1.0 / 3.0;
  for (std::size_t c = 0; c < n; ++c)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = i + 1; k < n; ++k) {
        if (i == c || k == c) continue;
        const T ri = dist(c, i), rk = dist(c, k);
        T dot(0.0);
        for (int d = 0; d < 3; ++d) dot = dot + (x[3 * i + d] - x[3 * c + d]) * (x[3 * k + d] - x[3 * c + d]);
        const T cos_t = dot / (ri * rk);
        e = e + k_angle * (cos_t - cos0) * (cos_t - cos0) * smooth_cutoff(ri) * smooth_cutoff(rk);
      }
  return e;
}

// Energy and forces (one dual-number pass per coordinate).
inline void label(Configuration& c) {
  std::vector<double> x;
  for (const auto& p : c.positions) x.insert(x.end(), p.begin(), p.end());
  c.energy = energy(x, c.species);
  std::vector<Dual<double>> xd(x.begin(), x.end());
  std::vector<Vec3> f(c.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    xd[j].d = 1.0;
    f[j / 3][j % 3] = -energy(xd, c.species).d;
    xd[j].d = 0.0;
  }
  c.forces = f;
}

// Connected cluster: each new atom sits 0.9-1.6 Å from a random earlier atom
// and at least 0.85 Å from all others.
inline Configuration random_cluster(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  const auto& table = element_table();
  Configuration c;
  c.positions.push_back({0.0, 0.0, 0.0});
  c.species.push_back(table[static_cast<std::size_t>(u(rng) * table.size()) % table.size()].z);
  while (c.size() < n) {
    const Vec3& base = c.positions[static_cast<std::size_t>(u(rng) * c.size()) % c.size()];
    Vec3 d{g(rng), g(rng), g(rng)};
    const double norm = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
    const double r = 0.9 + 0.7 * u(rng);
    const Vec3 p{base[0] + r * d[0] / norm, base[1] + r * d[1] / norm, base[2] + r * d[2] / norm};
    bool ok = true;
    for (const auto& q : c.positions)
      if (std::hypot(p[0] - q[0], p[1] - q[1], p[2] - q[2]) < 0.85) ok = false;
    if (!ok) continue;
    c.positions.push_back(p);
    c.species.push_back(table[static_cast<std::size_t>(u(rng) * table.size()) % table.size()].z);
  }
  return c;
}

}  // namespace mace::synthetic
