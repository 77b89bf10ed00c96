#include "mace/generalized_cg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <utility>

#include "mace/clebsch_gordan.hpp"
#include "mace/errors.hpp"

namespace mace {
namespace {

void extend_paths(const std::vector<int>& ls, int target, std::size_t next, int current, std::vector<int>& chain,
                  std::vector<CouplingPath>& out) {
  if (next == ls.size()) {
    if (current == target) out.push_back({chain});
    return;
  }
  const int l = ls[next];
  for (int L = std::abs(current - l); L <= current + l; ++L) {
    chain.push_back(L);
    extend_paths(ls, target, next + 1, L, chain, out);
    chain.pop_back();
  }
}

}  // namespace

std::vector<CouplingPath> enumerate_coupling_paths(const std::vector<int>& l_tuple, int target_L) {
  if (l_tuple.empty()) throw ContractViolation("generalized_cg: empty l tuple");
  if (std::any_of(l_tuple.begin(), l_tuple.end(), [](int l) { return l < 0; }) || target_L < 0) {
    throw ContractViolation("generalized_cg: negative order");
  }
  std::vector<CouplingPath> paths;
  std::vector<int> chain;
  extend_paths(l_tuple, target_L, 1, l_tuple[0], chain, paths);
  return paths;
}

CouplingScheme generalized_cg(const std::vector<int>& l_tuple, int target_L) {
  CouplingScheme scheme;
  scheme.l_tuple = l_tuple;
  scheme.target_L = target_L;
  scheme.paths = enumerate_coupling_paths(l_tuple, target_L);

  for (std::size_t p = 0; p < scheme.paths.size(); ++p) {
    const auto& inter = scheme.paths[p].intermediates;
    // partial[(m_1..m_k, M_k)] for the chain coupled so far
    std::map<std::pair<std::vector<int>, int>, double> partial;
    for (int m = -l_tuple[0]; m <= l_tuple[0]; ++m) partial[{{m}, m}] = 1.0;
    int current = l_tuple[0];
    for (std::size_t k = 1; k < l_tuple.size(); ++k) {
      const CGTable& cg = cg_real_cached(current, l_tuple[k], inter[k - 1]);
      std::map<std::pair<std::vector<int>, int>, double> next;
      for (const auto& [key, value] : partial) {
        for (const CGEntry& e : cg.entries) {
          if (e.m1 != key.second) continue;
          auto ms = key.first;
          ms.push_back(e.m2);
          next[{std::move(ms), e.m3}] += value * e.value;
        }
      }
      partial = std::move(next);
      current = inter[k - 1];
    }
    for (const auto& [key, value] : partial) {
      if (std::fabs(value) < 1e-15) continue;
      scheme.coefficients.push_back({p, key.first, key.second, value});
    }
  }
  return scheme;
}

}  // namespace mace
