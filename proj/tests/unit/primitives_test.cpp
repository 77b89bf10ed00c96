#include <gtest/gtest.h>

#include <random>

#include "mace/model.hpp"
#include "mace/primitives.hpp"

using namespace mace;
using namespace mace::ad;

namespace {

using D = Dual<double>;

// ⟨J v, w⟩ from a forward pass on dual numbers against ⟨v, Jᵀ w⟩ from backward().
template <class P>
void expect_adjoint_consistent(const P& prim, const std::vector<std::vector<double>>& inputs, std::mt19937_64& rng,
                               double tol = 1e-9) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::vector<double>> v(inputs.size());
  std::vector<std::vector<D>> dual_in(inputs.size());
  for (std::size_t s = 0; s < inputs.size(); ++s) {
    for (double x : inputs[s]) {
      v[s].push_back(g(rng));
      dual_in[s].push_back(D(x, v[s].back()));
    }
  }
  const std::size_t n = prim.output_size();
  std::vector<D> dual_out(n);
  {
    std::vector<std::span<const D>> spans(dual_in.begin(), dual_in.end());
    prim.template forward<D>(spans, dual_out);
  }
  std::vector<double> w(n), out(n);
  for (double& x : w) x = g(rng);
  for (std::size_t i = 0; i < n; ++i) out[i] = dual_out[i].v;

  std::vector<std::vector<double>> adj;
  for (const auto& x : inputs) adj.emplace_back(x.size(), 0.0);
  {
    std::vector<std::span<const double>> spans(inputs.begin(), inputs.end());
    std::vector<std::span<double>> aspans(adj.begin(), adj.end());
    prim.template backward<double>(spans, out, w, aspans);
  }
  double lhs = 0.0, rhs = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    lhs += dual_out[i].d * w[i];
    scale += std::fabs(dual_out[i].d * w[i]);
  }
  for (std::size_t s = 0; s < inputs.size(); ++s)
    for (std::size_t i = 0; i < inputs[s].size(); ++i) rhs += v[s][i] * adj[s][i];
  EXPECT_NEAR(lhs, rhs, tol * std::max(1.0, scale)) << P::kName;
  // Primal of the dual pass equals the plain pass.
  std::vector<double> plain(n);
  std::vector<std::span<const double>> spans(inputs.begin(), inputs.end());
  prim.template forward<double>(spans, plain);
  for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(plain[i], out[i]) << P::kName;
}

std::vector<double> randn(std::size_t n, std::mt19937_64& rng, double s = 1.0) {
  std::normal_distribution<double> g(0.0, s);
  std::vector<double> v(n);
  for (double& x : v) x = g(rng);
  return v;
}

Configuration random_cluster(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  Configuration c;
  while (c.size() < n) {
    Vec3 p{u(rng), u(rng), u(rng)};
    bool ok = true;
    for (const auto& q : c.positions) {
      const double d = std::hypot(p[0] - q[0], p[1] - q[1], p[2] - q[2]);
      if (d < 0.7) ok = false;
    }
    if (!ok) continue;
    c.positions.push_back(p);
    c.species.push_back(c.size() % 2 ? 1 : 8);
  }
  return c;
}

struct Fixture {
  Configuration config;
  NeighborList nl;
  std::shared_ptr<const EdgeTopology> topo;
  std::vector<double> x;
};

Fixture make_fixture(std::mt19937_64& rng) {
  Fixture f;
  f.config = random_cluster(5, rng);
  f.nl = build_neighbor_list(f.config, 2.5);
  f.topo = std::make_shared<const EdgeTopology>(build_edge_topology(f.config, f.nl));
  for (const auto& p : f.config.positions) f.x.insert(f.x.end(), p.begin(), p.end());
  return f;
}

std::vector<double> edge_vectors(const Fixture& f) {
  std::vector<double> d(3 * f.topo->num_edges());
  std::vector<std::span<const double>> in{f.x};
  EdgeVectors{f.topo}.forward<double>(in, d);
  return d;
}

}  // namespace

TEST(PrimitiveAdjoint, EdgeVectors) {
  std::mt19937_64 rng(1);
  const Fixture f = make_fixture(rng);
  ASSERT_GT(f.topo->num_edges(), 0u);
  expect_adjoint_consistent(EdgeVectors{f.topo}, {f.x}, rng);
}

TEST(PrimitiveAdjoint, SphericalHarmonics) {
  std::mt19937_64 rng(2);
  const Fixture f = make_fixture(rng);
  expect_adjoint_consistent(SphericalHarmonics{3, f.topo->num_edges()}, {edge_vectors(f)}, rng);
}

TEST(PrimitiveAdjoint, RadialBasis) {
  std::mt19937_64 rng(3);
  const Fixture f = make_fixture(rng);
  RadialConfig cfg;
  cfg.r_cut = 2.5;
  expect_adjoint_consistent(RadialBasis{cfg, f.topo->num_edges()}, {edge_vectors(f)}, rng);
}

TEST(PrimitiveAdjoint, DenseAndSiLU) {
  std::mt19937_64 rng(4);
  expect_adjoint_consistent(Dense{4, 3, 5, false}, {randn(12, rng), randn(15, rng)}, rng);
  expect_adjoint_consistent(Dense{4, 3, 5, true}, {randn(12, rng), randn(15, rng), randn(5, rng)}, rng);
  expect_adjoint_consistent(SiLU{20}, {randn(20, rng, 3.0)}, rng);
}

TEST(PrimitiveAdjoint, ChannelMixes) {
  std::mt19937_64 rng(5);
  const std::size_t N = 3, K = 4;
  expect_adjoint_consistent(ChannelMix{N, K, 2}, {randn(N * K * 9, rng), randn(3 * K * K, rng)}, rng);
  auto elem = std::make_shared<const std::vector<std::size_t>>(std::vector<std::size_t>{1, 0, 1});
  expect_adjoint_consistent(ElementChannelMix{elem, K, 0, 2}, {randn(N * K, rng), randn(2 * K * K, rng)}, rng);
  expect_adjoint_consistent(ElementChannelMix{elem, K, 2, 2}, {randn(N * K * 9, rng), randn(2 * 3 * K * K, rng)}, rng);
  expect_adjoint_consistent(EmbedElements{elem, K}, {randn(2 * K, rng)}, rng);
}

TEST(PrimitiveAdjoint, Pooling) {
  std::mt19937_64 rng(6);
  const Fixture f = make_fixture(rng);
  const std::size_t E = f.topo->num_edges(), N = f.topo->num_atoms, K = 3;
  for (int lin : {0, 2}) {
    auto spec = std::make_shared<const PoolingSpec>(make_pooling_spec(3, lin, 3));
    EquivariantPooling pool{f.topo, spec, K, 0.7};
    expect_adjoint_consistent(pool,
                              {randn(E * 16, rng), randn(E * K * spec->num_triples, rng),
                               randn(N * K * static_cast<std::size_t>(lm_dim(lin)), rng)},
                              rng);
  }
}

TEST(PrimitiveAdjoint, SymmetricContraction) {
  std::mt19937_64 rng(7);
  const std::size_t N = 3, K = 4, S = 2;
  const auto blocks = enumerate_product_blocks(3, 2, 2);
  auto plan = std::make_shared<const ContractionPlan>(build_contraction_plan(blocks, 3, 2, 2));
  auto elem = std::make_shared<const std::vector<std::size_t>>(std::vector<std::size_t>{0, 1, 1});
  std::vector<std::vector<double>> in{randn(N * K * 9, rng)};
  for (const auto& b : plan->blocks) in.push_back(randn(S * K * b.num_paths, rng));
  expect_adjoint_consistent(SymmetricContraction{plan, elem, S, K}, in, rng);
}

TEST(PrimitiveAdjoint, Reductions) {
  std::mt19937_64 rng(8);
  expect_adjoint_consistent(Add{7}, {randn(7, rng), randn(7, rng)}, rng);
  expect_adjoint_consistent(ScalarSlice{3, 2, 4}, {randn(24, rng)}, rng);
  expect_adjoint_consistent(SiteEnergy{4, -1.5, 2.0}, {randn(4, rng), randn(4, rng), randn(4, rng)}, rng);
  auto order = std::make_shared<const std::vector<std::size_t>>(std::vector<std::size_t>{2, 0, 3, 1});
  expect_adjoint_consistent(SumOrdered{order}, {randn(4, rng)}, rng);
}

TEST(Tape, ReplayReproducesRecordedOutputs) {
  std::mt19937_64 rng(9);
  MaceConfig cfg;
  cfg.channels = 4;
  cfg.elements = {1, 8};
  cfg.radial.r_cut = 2.5;
  cfg.radial.mlp_widths = {8};
  const MaceModel model(cfg);
  const ModelParams params = model.init_params(3);
  const Configuration c = random_cluster(5, rng);
  const NeighborList nl = build_neighbor_list(c, 2.5);
  std::vector<double> x;
  for (const auto& p : c.positions) x.insert(x.end(), p.begin(), p.end());
  std::vector<std::vector<double>> pv;
  for (const auto& t : params.tensors) pv.push_back(t.values);
  const auto rec = model.record<double>(c, nl, x, pv);
  EXPECT_TRUE(rec.tape.replay_matches());
  EXPECT_GT(rec.tape.op_count(), 10u);
}

TEST(Tape, NonFiniteOutputNamesPrimitive) {
  Tape<double> tape;
  const auto a = tape.leaf({1.0, std::numeric_limits<double>::infinity()});
  const auto b = tape.leaf({1.0, 1.0});
  try {
    tape.record(Add{2}, {a, b});
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("add"), std::string::npos);
  }
}
