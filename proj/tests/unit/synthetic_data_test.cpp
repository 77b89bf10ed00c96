#include <gtest/gtest.h>

#include <cmath>

#include "mace/extxyz.hpp"
#include "synthetic_potential.hpp"

using namespace mace;

namespace {

std::vector<Configuration> committed() { return read_extxyz_file(MACE_TEST_DATA_DIR "/synthetic.xyz"); }

}  // namespace

TEST(SyntheticData, LabelsMatchReferencePotential) {
  const auto configs = committed();
  ASSERT_EQ(configs.size(), 200u);
  for (const auto& c : configs) {
    Configuration fresh = c;
    synthetic::label(fresh);
    EXPECT_NEAR(*fresh.energy, *c.energy, 1e-12);
    for (std::size_t i = 0; i < c.size(); ++i)
      for (int a = 0; a < 3; ++a) EXPECT_NEAR((*fresh.forces)[i][a], (*c.forces)[i][a], 1e-12);
  }
}

TEST(SyntheticData, ForcesAreNegativeEnergyGradient) {
  const auto configs = committed();
  const double h = 1e-5;
  for (std::size_t b = 0; b < configs.size(); b += 10) {
    const auto& c = configs[b];
    std::vector<double> x;
    for (const auto& p : c.positions) x.insert(x.end(), p.begin(), p.end());
    for (std::size_t j = 0; j < x.size(); ++j) {
      auto up = x, down = x;
      up[j] += h;
      down[j] -= h;
      const double fd = -(synthetic::energy(up, c.species) - synthetic::energy(down, c.species)) / (2 * h);
      EXPECT_NEAR((*c.forces)[j / 3][j % 3], fd, 1e-7);
    }
  }
}

TEST(SyntheticData, NetForceVanishes) {
  for (const auto& c : committed()) {
    Vec3 net{0, 0, 0};
    for (const auto& f : *c.forces)
      for (int a = 0; a < 3; ++a) net[a] += f[a];
    for (int a = 0; a < 3; ++a) EXPECT_NEAR(net[a], 0.0, 1e-10);
  }
}
