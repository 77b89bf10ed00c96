#include "mace/sph_harm.hpp"

#include <cmath>
#include <string>

#include "mace/errors.hpp"

namespace mace {

std::vector<double> real_sph_harm(int lmax, const std::array<double, 3>& unit_vec) {
  if (lmax < 0 || lmax > kMaxShOrder) {
    throw ContractViolation("real_sph_harm: lmax must lie in [0, " + std::to_string(kMaxShOrder) + "]");
  }
  const double norm = std::sqrt(unit_vec[0] * unit_vec[0] + unit_vec[1] * unit_vec[1] + unit_vec[2] * unit_vec[2]);
  if (!std::isfinite(norm) || std::fabs(norm - 1.0) > 1e-12) {
    throw ContractViolation("real_sph_harm: input is not a unit vector");
  }
  std::vector<double> out(static_cast<std::size_t>(lm_dim(lmax)));
  detail::sh_polynomial<double>(lmax, unit_vec[0], unit_vec[1], unit_vec[2], out.data(), nullptr);
  return out;
}

}  // namespace mace
