#include <gtest/gtest.h>

#include <cstring>
#include <numeric>
#include <random>

#include "mace/clebsch_gordan.hpp"
#include "mace/model.hpp"
#include "mace/wigner.hpp"
#include "fixtures.hpp"
#include "test_util.hpp"

using namespace mace;
using namespace mace::testing;

TEST(Model, ParameterLayout) {
  const MaceModel model(small_config());
  const ModelParams p = model.init_params(1);
  EXPECT_NO_THROW(model.check_params(p));
  EXPECT_TRUE(p.contains("embedding"));
  EXPECT_TRUE(p.contains("layer0.a_mix"));
  EXPECT_FALSE(p.contains("layer0.up_mix"));
  EXPECT_TRUE(p.contains("layer1.up_mix"));
  EXPECT_TRUE(p.contains("layer0.readout.linear"));
  EXPECT_TRUE(p.contains("layer1.readout.hidden"));
  EXPECT_EQ(p.at("layer0.update.residual").shape, (std::vector<std::size_t>{3, 1, 4, 4}));
  EXPECT_EQ(p.at("layer1.update.residual").shape, (std::vector<std::size_t>{3, 3, 4, 4}));
  for (const auto& b : model.plan().blocks) {
    const auto& t = p.at("layer0.product.nu" + std::to_string(b.order) + ".L" + std::to_string(b.L));
    EXPECT_EQ(t.shape[2], b.num_paths);
    EXPECT_TRUE(t.decay);
  }
  EXPECT_FALSE(p.at("layer0.update.message").decay);
  // radial output spans every pooling triple per channel
  EXPECT_EQ(model.radial_width(0), 4 * pooling_triples(3, 0, 3).size());
  EXPECT_EQ(model.radial_width(1), 4 * pooling_triples(3, 2, 3).size());
  ModelParams bad = p;
  bad.tensors.pop_back();
  EXPECT_THROW(model.check_params(bad), ContractViolation);
}

TEST(Model, PoolingTriplesRespectParity) {
  for (const auto& [a, b, c] : pooling_triples(3, 2, 3)) {
    EXPECT_EQ((a + b + c) % 2, 0);
    EXPECT_TRUE(triangle_admissible(a, b, c));
  }
  const auto first = pooling_triples(3, 0, 3);
  ASSERT_EQ(first.size(), 4u);
  for (int l = 0; l < 4; ++l) EXPECT_EQ(first[static_cast<std::size_t>(l)], (std::array<int, 3>{l, 0, l}));
}

TEST(Model, ZeroParametersGiveShiftTimesAtoms) {
  std::mt19937_64 rng(1);
  const MaceModel model(small_config(), {-3.25, 2.0, 1.0});
  const Configuration c = random_molecule(5, rng);
  const ForwardResult r = model.forward(c, model.zero_params());
  EXPECT_DOUBLE_EQ(r.energy, 5 * -3.25);
  const auto [e, g] = model.grad_energy(c, model.zero_params());
  for (const auto& f : g.d_positions)
    for (double x : f) EXPECT_EQ(x, 0.0);
}

TEST(Model, IsolatedAtomEnergyIsPositionIndependent) {
  const MaceModel model(small_config(), {0.5, 1.5, 1.0});
  const ModelParams p = model.init_params(2);
  Configuration c;
  c.positions = {{0.1, 0.2, 0.3}};
  c.species = {6};
  const double e1 = model.forward(c, p).energy;
  c.positions = {{-4.0, 7.0, 2.0}};
  EXPECT_EQ(model.forward(c, p).energy, e1);
  c.species = {8};
  EXPECT_NE(model.forward(c, p).energy, e1);
}

TEST(Model, UnknownElementIsReported) {
  const MaceModel model(small_config());
  Configuration c;
  c.positions = {{0, 0, 0}};
  c.species = {26};
  try {
    model.forward(c, model.init_params(1));
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("Fe"), std::string::npos);
  }
}

TEST(Model, RotationInversionTranslationInvariance) {
  std::mt19937_64 rng(3);
  const MaceModel model(small_config(), {-1.0, 1.3, 2.0});
  for (int trial = 0; trial < 10; ++trial) {
    const ModelParams p = model.init_params(static_cast<std::uint64_t>(trial));
    const Configuration c = random_molecule(5, rng);
    const ForwardResult base = model.forward(c, p);
    const Eigen::Matrix3d Q = mace::testing::random_rotation(rng);
    const ForwardResult rot = model.forward(transformed(c, Q), p);
    EXPECT_NEAR(rot.energy, base.energy, 1e-9);
    EXPECT_NEAR(model.forward(transformed(c, -Eigen::Matrix3d::Identity()), p).energy, base.energy, 1e-9);
    EXPECT_NEAR(model.forward(transformed(c, Eigen::Matrix3d::Identity(), {3.1, -2.2, 0.7}), p).energy, base.energy,
                1e-10);
    // features rotate block by block
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
            EXPECT_LT((vb - D * va).cwiseAbs().maxCoeff(), 1e-8);
          }
      }
    }
  }
}

TEST(Model, PermutationInvarianceIsExact) {
  std::mt19937_64 rng(4);
  const MaceModel model(small_config(), {-1.0, 1.3, 2.0});
  const ModelParams p = model.init_params(9);
  for (int trial = 0; trial < 5; ++trial) {
    const Configuration c = random_molecule(6, rng);
    std::vector<std::size_t> perm(c.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Configuration pc = c;
    for (std::size_t i = 0; i < c.size(); ++i) {
      pc.positions[i] = c.positions[perm[i]];
      pc.species[i] = c.species[perm[i]];
    }
    const ForwardResult a = model.forward(c, p), b = model.forward(pc, p);
    EXPECT_TRUE(bit_equal(a.energy, b.energy));
    for (std::size_t i = 0; i < c.size(); ++i) EXPECT_TRUE(bit_equal(b.site_energies[i], a.site_energies[perm[i]]));
  }
}

TEST(Model, ForcesMatchFiniteDifferences) {
  std::mt19937_64 rng(5);
  const MaceModel model(small_config(), {-1.0, 1.0, 1.5});
  for (int trial = 0; trial < 4; ++trial) {
    const ModelParams p = model.init_params(static_cast<std::uint64_t>(100 + trial));
    const Configuration c = random_molecule(3 + static_cast<std::size_t>(trial % 2), rng, 1.2);
    const auto [e, g] = model.grad_energy(c, p);
    EXPECT_DOUBLE_EQ(e, model.forward(c, p).energy);
    double err = 0.0, ref = 0.0;
    const double h = 1e-4;
    for (std::size_t i = 0; i < c.size(); ++i)
      for (std::size_t a = 0; a < 3; ++a) {
        Configuration cp = c, cm = c;
        cp.positions[i][a] += h;
        cm.positions[i][a] -= h;
        const double fd = (model.forward(cp, p).energy - model.forward(cm, p).energy) / (2 * h);
        err = std::max(err, std::fabs(fd - g.d_positions[i][a]));
        ref = std::max(ref, std::fabs(fd));
      }
    EXPECT_LT(err / ref, 1e-6);
    Vec3 net{0, 0, 0};
    for (const auto& d : g.d_positions)
      for (std::size_t a = 0; a < 3; ++a) net[a] += d[a];
    for (double x : net) EXPECT_NEAR(x, 0.0, 1e-10);
  }
}

TEST(Model, ParameterGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(6);
  MaceConfig cfg = small_config(2, 2, 2, 1, 3);
  cfg.radial.mlp_widths = {4};
  const MaceModel model(cfg, {0.0, 1.0, 1.5});
  ModelParams p = model.init_params(7);
  const Configuration c = random_molecule(4, rng, 1.2);
  const auto [e, g] = model.grad_energy(c, p);
  const std::vector<double> flat = p.flatten(), grad = g.d_params.flatten();
  std::uniform_int_distribution<std::size_t> pick(0, flat.size() - 1);
  for (int s = 0; s < 40; ++s) {
    const std::size_t idx = pick(rng);
    const double h = 1e-5;
    std::vector<double> fp = flat, fm = flat;
    fp[idx] += h;
    fm[idx] -= h;
    ModelParams pp = p, pm = p;
    pp.assign_flat(fp);
    pm.assign_flat(fm);
    const double fd = (model.forward(c, pp).energy - model.forward(c, pm).energy) / (2 * h);
    EXPECT_NEAR(grad[idx], fd, 1e-7 * std::max(1.0, std::fabs(fd))) << idx;
  }
}

TEST(Model, LocalityBeyondReceptiveField) {
  std::mt19937_64 rng(7);
  MaceConfig cfg = small_config();
  const MaceModel model(cfg);
  const ModelParams p = model.init_params(8);
  Configuration c = random_molecule(4, rng, 1.0);
  c.positions.push_back({20.0, 0.0, 0.0});
  c.species.push_back(8);
  const ForwardResult a = model.forward(c, p);
  c.positions.back() = {20.5, 0.3, -0.2};
  const ForwardResult b = model.forward(c, p);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_TRUE(bit_equal(a.site_energies[i], b.site_energies[i]));
}

TEST(Model, EnergyContinuousAcrossCutoff) {
  const MaceModel model(small_config(), {0.0, 1.0, 1.0});
  const ModelParams p = model.init_params(10);
  auto dimer = [&](double r) {
    Configuration c;
    c.positions = {{0, 0, 0}, {r, 0, 0}};
    c.species = {1, 8};
    return model.forward(c, p).energy;
  };
  double prev = 1.0;
  for (double eps : {1e-2, 1e-3, 1e-4}) {
    const double gap = std::fabs(dimer(3.0 - eps) - dimer(3.0 + eps));
    EXPECT_LT(gap, prev);
    prev = gap;
  }
  EXPECT_LT(prev, 1e-12);
}

TEST(Model, ForwardIsDeterministic) {
  std::mt19937_64 rng(11);
  const MaceModel model(small_config());
  const ModelParams p = model.init_params(12);
  const Configuration c = random_molecule(5, rng);
  const auto [e1, g1] = model.grad_energy(c, p);
  const auto [e2, g2] = model.grad_energy(c, p);
  EXPECT_TRUE(bit_equal(e1, e2));
  EXPECT_EQ(g1.d_params.flatten(), g2.d_params.flatten());
}
