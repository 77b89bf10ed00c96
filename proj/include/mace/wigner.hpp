#pragma once

#include <Eigen/Dense>

namespace mace {

// Real Wigner matrix D^L(Q) acting on real spherical-harmonic components:
//   real_sph_harm(L, Q v) = D^L(Q) real_sph_harm(L, v).
// Improper Q (det = -1) is supported and yields the extra factor (-1)^L.
// Built recursively from D^1 (a permutation of Q) by coupling D^{L-1} ⊗ D^1
// through the real Clebsch-Gordan table (L-1, 1 -> L).
// Throws ContractViolation when Q is not orthogonal within 1e-9.
Eigen::MatrixXd wigner_d_real(int L, const Eigen::Matrix3d& rotation);

}  // namespace mace
