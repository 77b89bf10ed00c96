#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mace/model.hpp"

namespace mace {

struct CheckResult {
  std::string name;
  std::uint64_t seed = 0;
  double value = 0.0;      // measured deviation
  double tolerance = 0.0;  // pass iff value <= tolerance
  bool passed = false;
};

// Embedded property suite: CG orthogonality, harmonic addition theorem,
// Wigner composition, contraction vs dense oracle, energy/feature/force
// equivariance, exact permutation invariance and finite-difference gradients.
// Model-level checks build their models with `hooks`.
std::vector<CheckResult> run_selfcheck(std::uint64_t seed, const BuildHooks& hooks = {});

std::string format_check_table(const std::vector<CheckResult>& results);

}  // namespace mace
