#include "mace/contraction.hpp"

#include <algorithm>
#include <map>
#include <string>

#include "mace/clebsch_gordan.hpp"
#include "mace/errors.hpp"
#include "mace/sph_harm.hpp"

namespace mace {
namespace {

void check_orders(int correlation, int lmax_a, int L_max) {
  if (correlation < 1) throw ContractViolation("contraction: correlation order must be >= 1");
  if (lmax_a < 0 || lmax_a > kMaxShOrder) throw ContractViolation("contraction: lmax out of range");
  if (L_max < 0 || L_max > lmax_a * correlation) throw ContractViolation("contraction: L_max out of range");
}

// Odometer over all tuples in [0, base)^n.
bool next_tuple(std::vector<int>& t, int base) {
  for (std::size_t i = t.size(); i-- > 0;) {
    if (++t[i] < base) return true;
    t[i] = 0;
  }
  return false;
}

void check_weights(const std::vector<std::vector<double>>& weights, std::size_t nblocks,
                   const std::vector<std::size_t>& paths, std::size_t elements, std::size_t K) {
  if (weights.size() != nblocks) throw ContractViolation("contraction: expected one weight block per product block");
  for (std::size_t b = 0; b < nblocks; ++b) {
    if (weights[b].size() != elements * K * paths[b]) {
      throw ContractViolation("contraction: weight block " + std::to_string(b) + " has wrong size");
    }
  }
}

}  // namespace

std::vector<ProductBlock> enumerate_product_blocks(int correlation, int lmax_a, int L_max) {
  check_orders(correlation, lmax_a, L_max);
  std::vector<ProductBlock> blocks;
  for (int n = 1; n <= correlation; ++n) {
    for (int L = 0; L <= L_max; ++L) {
      ProductBlock blk;
      blk.order = n;
      blk.L = L;
      std::vector<int> t(static_cast<std::size_t>(n), 0);
      do {
        int sum = L;
        for (int l : t) sum += l;
        if (sum % 2 != 0) continue;
        CouplingScheme s = generalized_cg(t, L);
        if (s.paths.empty() || s.coefficients.empty()) continue;
        blk.path_offset.push_back(blk.num_paths);
        blk.num_paths += s.paths.size();
        blk.schemes.push_back(std::move(s));
      } while (next_tuple(t, lmax_a + 1));
      if (blk.num_paths > 0) blocks.push_back(std::move(blk));
    }
  }
  return blocks;
}

ContractionPlan build_contraction_plan(const std::vector<ProductBlock>& blocks, int correlation, int lmax_a,
                                       int L_max) {
  check_orders(correlation, lmax_a, L_max);
  ContractionPlan plan;
  plan.correlation = correlation;
  plan.lmax_a = lmax_a;
  plan.L_max = L_max;

  // key = (L, M, i_1, ..., i_n) -> merged terms by weight slot
  std::map<std::vector<int>, std::map<std::uint32_t, double>> leaves;
  std::size_t offset = 0;
  for (const ProductBlock& blk : blocks) {
    if (blk.order > correlation) continue;
    if (blk.L > L_max) throw ContractViolation("contraction: block target exceeds L_max");
    plan.blocks.push_back({blk.order, blk.L, blk.num_paths, offset});
    for (std::size_t s = 0; s < blk.schemes.size(); ++s) {
      const CouplingScheme& scheme = blk.schemes[s];
      if (static_cast<int>(scheme.correlation()) != blk.order || scheme.target_L != blk.L) {
        throw ContractViolation("contraction: scheme does not match its block");
      }
      for (const CouplingCoefficient& c : scheme.coefficients) {
        std::vector<int> key{blk.L, c.M};
        for (std::size_t x = 0; x < c.m.size(); ++x) {
          if (scheme.l_tuple[x] > lmax_a) throw ContractViolation("contraction: tuple order exceeds lmax");
          key.push_back(lm_index(scheme.l_tuple[x], c.m[x]));
        }
        const auto slot = static_cast<std::uint32_t>(offset + blk.path_offset[s] + c.path);
        leaves[key][slot] += c.value;
      }
    }
    offset += blk.num_paths;
  }
  plan.weights_per_channel = offset;

  // Every proper prefix of length >= 3 is an inner node as well.
  std::map<std::vector<int>, std::map<std::uint32_t, double>> inner = leaves;
  for (const auto& [key, terms] : leaves) {
    for (std::size_t len = 3; len < key.size(); ++len) inner.try_emplace(std::vector<int>(key.begin(), key.begin() + len));
  }

  std::vector<const std::vector<int>*> order;
  order.reserve(inner.size());
  for (const auto& kv : inner) order.push_back(&kv.first);
  std::stable_sort(order.begin(), order.end(), [](const auto* a, const auto* b) { return a->size() > b->size(); });

  plan.num_inner = order.size();
  plan.num_out = static_cast<std::size_t>(lm_dim(L_max));
  std::map<std::vector<int>, std::uint32_t> index;
  for (std::size_t q = 0; q < order.size(); ++q) index[*order[q]] = static_cast<std::uint32_t>(q);

  plan.parent.resize(plan.num_inner);
  plan.a_index.resize(plan.num_inner);
  plan.level.resize(plan.num_inner);
  plan.term_begin.assign(plan.num_nodes() + 1, 0);
  for (std::size_t q = 0; q < order.size(); ++q) {
    const std::vector<int>& key = *order[q];
    plan.level[q] = static_cast<std::uint8_t>(key.size() - 2);
    plan.a_index[q] = static_cast<std::uint16_t>(key.back());
    if (key.size() == 3) {
      plan.parent[q] = static_cast<std::uint32_t>(plan.num_inner + lm_index(key[0], key[1]));
    } else {
      plan.parent[q] = index.at(std::vector<int>(key.begin(), key.end() - 1));
    }
    for (const auto& [slot, coeff] : inner.at(key)) {
      if (coeff == 0.0) continue;
      plan.terms.push_back({slot, coeff});
    }
    plan.term_begin[q + 1] = static_cast<std::uint32_t>(plan.terms.size());
  }
  for (std::size_t q = plan.num_inner; q < plan.num_nodes(); ++q) plan.term_begin[q + 1] = plan.term_begin[q];
  return plan;
}

IrrepTensor looped_contraction(const IrrepTensor& A, const ContractionPlan& plan,
                               const std::vector<std::vector<double>>& product_weights,
                               const std::vector<std::size_t>& element_of, std::size_t num_elements) {
  if (A.lmax != plan.lmax_a) throw ContractViolation("looped_contraction: A order does not match the plan");
  if (element_of.size() != A.nodes) throw ContractViolation("looped_contraction: one element per node required");
  const std::size_t K = A.channels;
  std::vector<std::size_t> paths;
  for (const auto& b : plan.blocks) paths.push_back(b.num_paths);
  check_weights(product_weights, plan.blocks.size(), paths, num_elements, K);

  std::vector<std::span<const double>> wspans(product_weights.begin(), product_weights.end());
  std::vector<std::vector<double>> ctilde(num_elements);
  std::vector<double> scratch;
  for (std::size_t z : element_of) {
    if (z >= num_elements) throw ContractViolation("looped_contraction: element index out of range");
    if (ctilde[z].empty()) detail::fuse_weights<double>(plan, wspans, z, K, scratch, ctilde[z]);
  }

  IrrepTensor m(A.nodes, K, plan.L_max);
  const std::size_t wa = A.width();
  const std::size_t wm = m.width();
  std::vector<double> a_t(wa * K), vals;
  for (std::size_t i = 0; i < A.nodes; ++i) {
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t c = 0; c < wa; ++c) a_t[c * K + k] = A.data[(i * K + k) * wa + c];
    vals = ctilde[element_of[i]];
    detail::sweep_forward(plan, K, a_t.data(), vals);
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t c = 0; c < wm; ++c) m.data[(i * K + k) * wm + c] = vals[(plan.num_inner + c) * K + k];
  }
  return m;
}

std::vector<double> brute_force_product_basis(const IrrepTensor& A, const ProductBlock& block) {
  const int L = block.L;
  const std::size_t dimM = static_cast<std::size_t>(2 * L + 1);
  const std::size_t K = A.channels;
  std::vector<double> B(A.nodes * block.num_paths * K * dimM, 0.0);

  for (std::size_t s = 0; s < block.schemes.size(); ++s) {
    const CouplingScheme& scheme = block.schemes[s];
    const std::vector<int>& ls = scheme.l_tuple;
    const std::size_t n = ls.size();
    for (int l : ls)
      if (l > A.lmax) throw ContractViolation("brute_force_product_basis: tuple order exceeds A");
    for (std::size_t p = 0; p < scheme.paths.size(); ++p) {
      const std::size_t eta = block.path_offset[s] + p;
      const auto& inter = scheme.paths[p].intermediates;
      // Dense odometer over (m_1, ..., m_n), coupling left to right.
      std::vector<int> mi(n, 0);
      bool more = true;
      while (more) {
        std::vector<int> ms(n);
        for (std::size_t x = 0; x < n; ++x) ms[x] = mi[x] - ls[x];
        std::vector<double> partial(static_cast<std::size_t>(2 * ls[0] + 1), 0.0);
        partial[static_cast<std::size_t>(ms[0] + ls[0])] = 1.0;
        int cur = ls[0];
        for (std::size_t x = 1; x < n; ++x) {
          const int Lx = inter[x - 1];
          const CGTable& cg = cg_real_cached(cur, ls[x], Lx);
          std::vector<double> next(static_cast<std::size_t>(2 * Lx + 1), 0.0);
          for (int Mp = -cur; Mp <= cur; ++Mp) {
            const double v = partial[static_cast<std::size_t>(Mp + cur)];
            if (v == 0.0) continue;
            for (int M = -Lx; M <= Lx; ++M) next[static_cast<std::size_t>(M + Lx)] += v * cg.at(Mp, ms[x], M);
          }
          partial = std::move(next);
          cur = Lx;
        }
        for (std::size_t i = 0; i < A.nodes; ++i) {
          for (std::size_t k = 0; k < K; ++k) {
            double prod = 1.0;
            for (std::size_t x = 0; x < n; ++x) prod *= A(i, k, ls[x], ms[x]);
            for (std::size_t M = 0; M < dimM; ++M)
              B[((i * block.num_paths + eta) * K + k) * dimM + M] += partial[M] * prod;
          }
        }
        // advance
        more = false;
        for (std::size_t x = n; x-- > 0;) {
          if (++mi[x] <= 2 * ls[x]) {
            more = true;
            break;
          }
          mi[x] = 0;
        }
      }
    }
  }
  return B;
}

IrrepTensor brute_force_message(const IrrepTensor& A, const std::vector<ProductBlock>& blocks,
                                const std::vector<std::vector<double>>& product_weights,
                                const std::vector<std::size_t>& element_of, int correlation, int L_max) {
  if (element_of.size() != A.nodes) throw ContractViolation("brute_force_message: one element per node required");
  if (product_weights.size() != blocks.size()) throw ContractViolation("brute_force_message: weight/block mismatch");
  const std::size_t K = A.channels;
  IrrepTensor m(A.nodes, K, L_max);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const ProductBlock& blk = blocks[b];
    if (blk.order > correlation) continue;
    if (blk.L > L_max) throw ContractViolation("brute_force_message: block target exceeds L_max");
    const std::vector<double> B = brute_force_product_basis(A, blk);
    const std::size_t P = blk.num_paths;
    const std::size_t dimM = static_cast<std::size_t>(2 * blk.L + 1);
    for (std::size_t i = 0; i < A.nodes; ++i) {
      const std::size_t z = element_of[i];
      if ((z + 1) * K * P > product_weights[b].size()) throw ContractViolation("brute_force_message: weights too small");
      for (std::size_t k = 0; k < K; ++k)
        for (std::size_t eta = 0; eta < P; ++eta) {
          const double w = product_weights[b][(z * K + k) * P + eta];
          for (std::size_t M = 0; M < dimM; ++M)
            m(i, k, blk.L, static_cast<int>(M) - blk.L) += w * B[((i * P + eta) * K + k) * dimM + M];
        }
    }
  }
  return m;
}

}  // namespace mace
