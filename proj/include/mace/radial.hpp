#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "mace/dual.hpp"
#include "mace/errors.hpp"

namespace mace {

struct RadialConfig {
  int n_basis = 8;
  double r_cut = 5.0;  // Å
  int envelope_p = 5;
  std::vector<std::size_t> mlp_widths{64, 64, 64};

  void validate() const;
};

// Dense layer stored row-major as [out][in]. An empty bias means no bias.
struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weight;
  std::vector<double> bias;
};

// Hidden layers are affine + SiLU, the final layer is affine only.
struct RadialMLPParams {
  std::vector<DenseLayer> layers;
};

namespace detail {

// Coefficient of t^k in f(1 - t). Zero for k < 3; integers or half-integers,
// so exact in double.
inline double cutoff_t_coeff(int p, int k) {
  auto binom = [](int n, int j) {
    if (j < 0 || j > n) return 0.0;
    double v = 1.0;
    for (int i = 1; i <= j; ++i) v = v * (n - j + i) / i;
    return v;
  };
  const double a = (p + 1.0) * (p + 2.0) / 2.0;
  const double b = p * (p + 2.0);
  const double c = p * (p + 1.0) / 2.0;
  const double sign = k % 2 == 0 ? 1.0 : -1.0;
  return (k == 0 ? 1.0 : 0.0) + sign * (-a * binom(p, k) + b * binom(p + 1, k) - c * binom(p + 2, k));
}

}  // namespace detail

// Polynomial cutoff f(u) = 1 - (p+1)(p+2)/2 u^p + p(p+2) u^{p+1} - p(p+1)/2 u^{p+2}
// for u = r / r_cut < 1, zero beyond. Value, first and second derivatives vanish at u = 1.
// For u > 1/2 the expansion in t = 1 - u is used: it starts at t^3, so values
// near the cutoff keep full relative precision instead of cancelling against 1.
template <class T>
T poly_cutoff(const T& r, double r_cut, int p) {
  if (primal(r) >= r_cut) return T(0.0);
  const T u = r / r_cut;
  if (primal(u) > 0.5) {
    const T t = 1.0 - u;
    T acc = T(detail::cutoff_t_coeff(p, p + 2));
    for (int k = p + 1; k >= 3; --k) acc = acc * t + detail::cutoff_t_coeff(p, k);
    return acc * t * t * t;
  }
  T up = T(1.0);
  for (int i = 0; i < p; ++i) up = up * u;
  const double a = (p + 1.0) * (p + 2.0) / 2.0;
  const double b = p * (p + 2.0);
  const double c = p * (p + 1.0) / 2.0;
  return 1.0 - a * up + b * up * u - c * up * u * u;
}

// d f / d r
template <class T>
T poly_cutoff_derivative(const T& r, double r_cut, int p) {
  if (primal(r) >= r_cut) return T(0.0);
  const T u = r / r_cut;
  if (primal(u) > 0.5) {
    const T t = 1.0 - u;
    T acc = T((p + 2.0) * detail::cutoff_t_coeff(p, p + 2));
    for (int k = p + 1; k >= 3; --k) acc = acc * t + k * detail::cutoff_t_coeff(p, k);
    return -acc * t * t / r_cut;
  }
  T um1 = T(1.0);
  for (int i = 0; i < p - 1; ++i) um1 = um1 * u;
  const double a = (p + 1.0) * (p + 2.0) / 2.0;
  const double b = p * (p + 2.0);
  const double c = p * (p + 1.0) / 2.0;
  return (-a * p * um1 + b * (p + 1.0) * um1 * u - c * (p + 2.0) * um1 * u * u) / r_cut;
}

// Enveloped Bessel basis e_n(r) = sqrt(2/r_cut) sin(nπ r/r_cut)/r · f(r), n = 1..n_basis.
// Writes n_basis values; zero for r >= r_cut. At r = 0 the raw basis takes its
// analytic limit nπ sqrt(2)/r_cut^{3/2}.
template <class T>
void bessel_basis_into(const T& r, const RadialConfig& cfg, T* out) {
  const double pref = std::sqrt(2.0 / cfg.r_cut);
  if (primal(r) >= cfg.r_cut) {
    for (int n = 0; n < cfg.n_basis; ++n) out[n] = T(0.0);
    return;
  }
  const T env = poly_cutoff(r, cfg.r_cut, cfg.envelope_p);
  for (int n = 1; n <= cfg.n_basis; ++n) {
    const double w = n * std::numbers::pi / cfg.r_cut;
    if (primal(r) == 0.0) {
      out[n - 1] = T(pref * w) * env;
    } else {
      out[n - 1] = pref * sin(w * r) / r * env;
    }
  }
}

// d e_n / d r for r in (0, r_cut); zero beyond.
template <class T>
void bessel_basis_derivative_into(const T& r, const RadialConfig& cfg, T* out) {
  const double pref = std::sqrt(2.0 / cfg.r_cut);
  if (primal(r) >= cfg.r_cut) {
    for (int n = 0; n < cfg.n_basis; ++n) out[n] = T(0.0);
    return;
  }
  const T env = poly_cutoff(r, cfg.r_cut, cfg.envelope_p);
  const T denv = poly_cutoff_derivative(r, cfg.r_cut, cfg.envelope_p);
  for (int n = 1; n <= cfg.n_basis; ++n) {
    const double w = n * std::numbers::pi / cfg.r_cut;
    const T s = sin(w * r);
    const T raw = pref * s / r;
    const T draw = pref * (w * cos(w * r) * r - s) / (r * r);
    out[n - 1] = draw * env + raw * denv;
  }
}

template <class T>
T silu(const T& x) {
  return x / (1.0 + exp(-x));
}

template <class T>
T silu_derivative(const T& x) {
  const T s = 1.0 / (1.0 + exp(-x));
  return s * (1.0 + x * (1.0 - s));
}

// Throws ContractViolation when r <= 0.
std::vector<double> bessel_basis(double r, const RadialConfig& cfg);

// Raw (un-enveloped) basis value limit at r -> 0+.
double bessel_basis_origin_limit(int n, double r_cut);

std::vector<double> radial_mlp(const std::vector<double>& basis_values, const RadialMLPParams& params);

// Bias-free shape chain n_basis -> widths... -> out_width.
RadialMLPParams make_radial_mlp(const RadialConfig& cfg, std::size_t out_width, bool with_bias);

}  // namespace mace
