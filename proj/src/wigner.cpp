#include "mace/wigner.hpp"

#include <cmath>

#include "mace/clebsch_gordan.hpp"
#include "mace/errors.hpp"

namespace mace {

Eigen::MatrixXd wigner_d_real(int L, const Eigen::Matrix3d& rotation) {
  if (L < 0) throw ContractViolation("wigner_d_real: negative order");
  if ((rotation.transpose() * rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-9) {
    throw ContractViolation("wigner_d_real: matrix is not orthogonal");
  }
  Eigen::MatrixXd d = Eigen::MatrixXd::Identity(1, 1);
  if (L == 0) return d;

  // Y_1 ∝ (y, z, x) for m = -1, 0, 1.
  const int axis[3] = {1, 2, 0};
  Eigen::Matrix3d d1;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) d1(a, b) = rotation(axis[a], axis[b]);
  d = d1;

  for (int l = 2; l <= L; ++l) {
    const CGTable& cg = cg_real_cached(l - 1, 1, l);
    // Isometry P: (2l-1)·3 product space -> order l, P(D ⊗ D1)P^T = D^l.
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(2 * l + 1, (2 * l - 1) * 3);
    for (const CGEntry& e : cg.entries) p(e.m3 + l, (e.m1 + l - 1) * 3 + (e.m2 + 1)) = e.value;
    Eigen::MatrixXd kron((2 * l - 1) * 3, (2 * l - 1) * 3);
    for (int a = 0; a < 2 * l - 1; ++a)
      for (int b = 0; b < 2 * l - 1; ++b) kron.block(a * 3, b * 3, 3, 3) = d(a, b) * d1;
    d = p * kron * p.transpose();
  }
  return d;
}

}  // namespace mace
