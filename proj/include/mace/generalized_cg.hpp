#pragma once

#include <cstddef>
#include <vector>

namespace mace {

// One admissible chain of intermediate orders (L_2, ..., L_ν), with the last
// entry equal to the target order. Empty for ν = 1.
struct CouplingPath {
  std::vector<int> intermediates;
};

struct CouplingCoefficient {
  std::size_t path = 0;
  std::vector<int> m;  // m_1..m_ν
  int M = 0;
  double value = 0.0;
};

// Generalized Clebsch-Gordan coefficients coupling (l_1, ..., l_ν) to target_L
// through every admissible intermediate chain:
//   C^{LM}_{η, lm} = C^{L2 M2}_{l1 m1, l2 m2} C^{L3 M3}_{L2 M2, l3 m3} ... (summed over M_i)
// Paths are in lexicographic order of their intermediates; coefficients are
// sorted by (path, m, M) and zeros are omitted.
struct CouplingScheme {
  std::vector<int> l_tuple;
  int target_L = 0;
  std::vector<CouplingPath> paths;
  std::vector<CouplingCoefficient> coefficients;

  std::size_t correlation() const { return l_tuple.size(); }
};

// Every intermediate chain admissible for l_tuple ending at target_L.
std::vector<CouplingPath> enumerate_coupling_paths(const std::vector<int>& l_tuple, int target_L);

// Throws ContractViolation for an empty tuple or negative orders.
CouplingScheme generalized_cg(const std::vector<int>& l_tuple, int target_L);

}  // namespace mace
