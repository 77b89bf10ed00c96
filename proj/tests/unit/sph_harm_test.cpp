#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "mace/errors.hpp"
#include "mace/sph_harm.hpp"
#include "test_util.hpp"

using namespace mace;
using mace::testing::random_unit;

namespace {

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

}  // namespace

TEST(SphHarm, ClosedFormsThroughL2) {
  std::mt19937_64 rng(1);
  const double pi = std::numbers::pi;
  for (int trial = 0; trial < 20; ++trial) {
    const auto u = random_unit(rng);
    const double x = u[0], y = u[1], z = u[2];
    const auto Y = real_sph_harm(2, u);
    EXPECT_NEAR(Y[0], 0.5 / std::sqrt(pi), 1e-14);
    const double c1 = std::sqrt(3.0 / (4.0 * pi));
    EXPECT_NEAR(Y[lm_index(1, -1)], c1 * y, 1e-14);
    EXPECT_NEAR(Y[lm_index(1, 0)], c1 * z, 1e-14);
    EXPECT_NEAR(Y[lm_index(1, 1)], c1 * x, 1e-14);
    const double c2 = std::sqrt(15.0 / (4.0 * pi));
    EXPECT_NEAR(Y[lm_index(2, -2)], c2 * x * y, 1e-14);
    EXPECT_NEAR(Y[lm_index(2, -1)], c2 * y * z, 1e-14);
    EXPECT_NEAR(Y[lm_index(2, 0)], std::sqrt(5.0 / (16.0 * pi)) * (3 * z * z - 1), 1e-14);
    EXPECT_NEAR(Y[lm_index(2, 1)], c2 * x * z, 1e-14);
    EXPECT_NEAR(Y[lm_index(2, 2)], 0.5 * c2 * (x * x - y * y), 1e-14);
  }
}

TEST(SphHarm, OrthonormalUnderQuadrature) {
  const int lmax = 6;
  mace::testing::SphereQuadrature quad(lmax + 2);
  const int n = lm_dim(lmax);
  std::vector<double> gram(static_cast<std::size_t>(n * n), 0.0);
  for (std::size_t s = 0; s < quad.points.size(); ++s) {
    const auto Y = real_sph_harm(lmax, quad.points[s]);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) gram[static_cast<std::size_t>(a * n + b)] += quad.weights[s] * Y[a] * Y[b];
  }
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) EXPECT_NEAR(gram[static_cast<std::size_t>(a * n + b)], a == b ? 1.0 : 0.0, 1e-6);
}

TEST(SphHarm, AdditionTheorem) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const auto u = random_unit(rng), v = random_unit(rng);
    const auto Yu = real_sph_harm(kMaxShOrder, u), Yv = real_sph_harm(kMaxShOrder, v);
    const double c = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
    for (int l = 0; l <= kMaxShOrder; ++l) {
      double s = 0.0;
      for (int m = -l; m <= l; ++m) s += Yu[lm_index(l, m)] * Yv[lm_index(l, m)];
      EXPECT_NEAR(s, (2 * l + 1) / (4 * std::numbers::pi) * legendre(l, c), 1e-11) << "l=" << l;
    }
  }
}

TEST(SphHarm, Parity) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto u = random_unit(rng);
    const std::array<double, 3> mu{-u[0], -u[1], -u[2]};
    const auto a = real_sph_harm(6, u), b = real_sph_harm(6, mu);
    for (int l = 0; l <= 6; ++l)
      for (int m = -l; m <= l; ++m) EXPECT_NEAR(b[lm_index(l, m)], (l % 2 ? -1 : 1) * a[lm_index(l, m)], 1e-14);
  }
}

TEST(SphHarm, RejectsNonUnitInput) {
  EXPECT_THROW(real_sph_harm(2, {1.0, 1e-5, 0.0}), ContractViolation);
  EXPECT_THROW(real_sph_harm(2, {0.0, 0.0, 0.0}), ContractViolation);
  EXPECT_THROW(real_sph_harm(kMaxShOrder + 1, {0.0, 0.0, 1.0}), ContractViolation);
  EXPECT_NO_THROW(real_sph_harm(0, {0.0, 0.0, 1.0}));
}

TEST(SphHarm, VectorGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 1.0);
  const int lmax = 5;
  const int n = lm_dim(lmax);
  for (int trial = 0; trial < 20; ++trial) {
    double d[3] = {g(rng), g(rng), g(rng)};
    std::vector<double> ybar(static_cast<std::size_t>(n));
    for (double& x : ybar) x = g(rng);
    double dbar[3] = {0, 0, 0};
    sph_harm_of_vector_vjp<double>(lmax, d, ybar.data(), dbar);
    for (int a = 0; a < 3; ++a) {
      const double h = 1e-6;
      std::vector<double> yp(static_cast<std::size_t>(n)), ym(static_cast<std::size_t>(n));
      double dp[3] = {d[0], d[1], d[2]}, dm[3] = {d[0], d[1], d[2]};
      dp[a] += h;
      dm[a] -= h;
      sph_harm_of_vector<double>(lmax, dp, yp.data());
      sph_harm_of_vector<double>(lmax, dm, ym.data());
      double fd = 0.0;
      for (int i = 0; i < n; ++i) fd += ybar[static_cast<std::size_t>(i)] * (yp[static_cast<std::size_t>(i)] - ym[static_cast<std::size_t>(i)]) / (2 * h);
      EXPECT_NEAR(dbar[a], fd, 1e-7 * (1.0 + std::fabs(fd)));
    }
  }
}

TEST(SphHarm, DualTangentMatchesVjp) {
  // Forward-mode tangent along e must equal ⟨ȳ, J e⟩ from the reverse product.
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  const int lmax = 4, n = lm_dim(lmax);
  for (int trial = 0; trial < 10; ++trial) {
    double d[3] = {g(rng), g(rng), g(rng)}, e[3] = {g(rng), g(rng), g(rng)};
    Dual<double> dd[3] = {{d[0], e[0]}, {d[1], e[1]}, {d[2], e[2]}};
    std::vector<Dual<double>> y(static_cast<std::size_t>(n));
    sph_harm_of_vector<Dual<double>>(lmax, dd, y.data());
    std::vector<double> ybar(static_cast<std::size_t>(n));
    for (double& x : ybar) x = g(rng);
    double dbar[3] = {0, 0, 0};
    sph_harm_of_vector_vjp<double>(lmax, d, ybar.data(), dbar);
    double fwd = 0.0;
    for (int i = 0; i < n; ++i) fwd += ybar[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(i)].d;
    EXPECT_NEAR(fwd, dbar[0] * e[0] + dbar[1] * e[1] + dbar[2] * e[2], 1e-11);
  }
}
