#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "mace/dual.hpp"
#include "mace/irreps.hpp"

namespace mace {

// Real orthonormal spherical harmonics, m = -l..l, built from the complex
// Condon-Shortley harmonics by the usual real combination, so that
//   Y_{1,-1} ∝ y,  Y_{1,0} ∝ z,  Y_{1,1} ∝ x.
//
// Values are polynomials in the Cartesian components of the unit vector:
//   Y_{l,m}  = sqrt(2) N_lm Q_l^|m|(z) C_m(x, y)   (m > 0)
//   Y_{l,0}  =         N_l0 Q_l^0(z)
//   Y_{l,-m} = sqrt(2) N_lm Q_l^m(z) S_m(x, y)
// with C_m + i S_m = (x + i y)^m and Q the associated Legendre polynomial
// with the (1 - z^2)^{m/2} factor removed.

inline constexpr int kMaxShOrder = 12;

namespace detail {

inline double sh_norm(int l, int m) {
  // sqrt((2l+1)/(4π) (l-m)!/(l+m)!), times sqrt(2) for m != 0
  double ratio = 1.0;
  for (int k = l - m + 1; k <= l + m; ++k) ratio /= k;
  double n = std::sqrt((2.0 * l + 1.0) / (4.0 * std::numbers::pi) * ratio);
  return m == 0 ? n : n * std::numbers::sqrt2;
}

struct ShNormTable {
  std::array<double, (kMaxShOrder + 1) * (kMaxShOrder + 1)> k{};
  ShNormTable() {
    for (int l = 0; l <= kMaxShOrder; ++l)
      for (int m = 0; m <= l; ++m) k[l * (kMaxShOrder + 1) + m] = sh_norm(l, m);
  }
  double operator()(int l, int m) const { return k[l * (kMaxShOrder + 1) + m]; }
};

inline const ShNormTable& sh_norms() {
  static const ShNormTable table;
  return table;
}

// Evaluates the polynomial extension of Y at (x, y, z). When grad is non-null
// it receives dY/dx, dY/dy, dY/dz (three entries per component).
template <class T>
void sh_polynomial(int lmax, const T& x, const T& y, const T& z, T* out, T* grad) {
  constexpr int S = kMaxShOrder + 1;
  std::array<T, S> C, Sn;
  std::array<T, S * S> Q, dQ;
  C[0] = T(1.0);
  Sn[0] = T(0.0);
  for (int m = 1; m <= lmax; ++m) {
    C[m] = x * C[m - 1] - y * Sn[m - 1];
    Sn[m] = x * Sn[m - 1] + y * C[m - 1];
  }
  double dfact = 1.0;  // (2m-1)!!
  for (int m = 0; m <= lmax; ++m) {
    if (m > 0) dfact *= (2.0 * m - 1.0);
    Q[m * S + m] = T(dfact);
    dQ[m * S + m] = T(0.0);
    if (m + 1 <= lmax) {
      Q[(m + 1) * S + m] = (2.0 * m + 1.0) * z * Q[m * S + m];
      dQ[(m + 1) * S + m] = T((2.0 * m + 1.0) * dfact);
    }
    for (int l = m + 2; l <= lmax; ++l) {
      const double a = 2.0 * l - 1.0;
      const double b = static_cast<double>(l + m - 1);
      const double inv = 1.0 / static_cast<double>(l - m);
      Q[l * S + m] = (a * z * Q[(l - 1) * S + m] - b * Q[(l - 2) * S + m]) * inv;
      dQ[l * S + m] = (a * (Q[(l - 1) * S + m] + z * dQ[(l - 1) * S + m]) - b * dQ[(l - 2) * S + m]) * inv;
    }
  }
  const auto& norms = sh_norms();
  for (int l = 0; l <= lmax; ++l) {
    for (int m = 0; m <= l; ++m) {
      const double k = norms(l, m);
      const T& q = Q[l * S + m];
      if (m == 0) {
        const int idx = lm_index(l, 0);
        out[idx] = k * q;
        if (grad) {
          grad[3 * idx] = T(0.0);
          grad[3 * idx + 1] = T(0.0);
          grad[3 * idx + 2] = k * dQ[l * S];
        }
        continue;
      }
      const int ip = lm_index(l, m);
      const int in = lm_index(l, -m);
      out[ip] = k * q * C[m];
      out[in] = k * q * Sn[m];
      if (grad) {
        const double md = static_cast<double>(m);
        // d/dx (x+iy)^m = m (x+iy)^{m-1}, d/dy = i m (x+iy)^{m-1}
        grad[3 * ip] = k * q * md * C[m - 1];
        grad[3 * ip + 1] = -k * q * md * Sn[m - 1];
        grad[3 * ip + 2] = k * dQ[l * S + m] * C[m];
        grad[3 * in] = k * q * md * Sn[m - 1];
        grad[3 * in + 1] = k * q * md * C[m - 1];
        grad[3 * in + 2] = k * dQ[l * S + m] * Sn[m];
      }
    }
  }
}

}  // namespace detail

// Y(d/|d|) for an arbitrary non-zero vector d. Writes lm_dim(lmax) values.
template <class T>
void sph_harm_of_vector(int lmax, const T* d, T* out) {
  const T r = sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
  detail::sh_polynomial<T>(lmax, d[0] / r, d[1] / r, d[2] / r, out, nullptr);
}

// Accumulates d_bar += (dY/dd)^T y_bar, using the tangential projection of the
// polynomial gradient: dY/dd = (I - u u^T)/r · ∇Y(u).
template <class T>
void sph_harm_of_vector_vjp(int lmax, const T* d, const T* y_bar, T* d_bar) {
  const T r = sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
  const T u[3] = {d[0] / r, d[1] / r, d[2] / r};
  const int n = lm_dim(lmax);
  std::array<T, lm_dim(kMaxShOrder)> y;
  std::array<T, 3 * lm_dim(kMaxShOrder)> g;
  detail::sh_polynomial<T>(lmax, u[0], u[1], u[2], y.data(), g.data());
  T gu[3] = {T(0.0), T(0.0), T(0.0)};
  for (int i = 0; i < n; ++i) {
    gu[0] += y_bar[i] * g[3 * i];
    gu[1] += y_bar[i] * g[3 * i + 1];
    gu[2] += y_bar[i] * g[3 * i + 2];
  }
  const T radial = gu[0] * u[0] + gu[1] * u[1] + gu[2] * u[2];
  for (int a = 0; a < 3; ++a) d_bar[a] += (gu[a] - radial * u[a]) / r;
}

// Real spherical harmonics up to lmax at a unit vector; component order
// lm_index(l, m). Throws ContractViolation when |unit_vec| deviates from 1 by
// more than 1e-12 or lmax is out of range.
std::vector<double> real_sph_harm(int lmax, const std::array<double, 3>& unit_vec);

}  // namespace mace
