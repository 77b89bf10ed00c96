#include "mace/clebsch_gordan.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>

#include "mace/errors.hpp"

namespace mace {
namespace {

using cplx = std::complex<long double>;

long double factorial(int n) {
  static const std::vector<long double> table = [] {
    std::vector<long double> t(64, 1.0L);
    for (int i = 1; i < 64; ++i) t[i] = t[i - 1] * static_cast<long double>(i);
    return t;
  }();
  if (n < 0 || n >= 64) throw ContractViolation("factorial argument out of range");
  return table[n];
}

// Row m of the complex-to-real change of basis: Y_real[m] = Σ_mu U[m][mu] Y_complex[mu].
cplx basis_change(int m, int mu) {
  const long double s = 1.0L / std::sqrt(2.0L);
  const long double sign = (std::abs(m) % 2 == 0) ? 1.0L : -1.0L;
  if (m == 0) return mu == 0 ? cplx(1.0L, 0.0L) : cplx(0.0L, 0.0L);
  if (m > 0) {
    if (mu == m) return {sign * s, 0.0L};
    if (mu == -m) return {s, 0.0L};
    return {0.0L, 0.0L};
  }
  const int a = -m;
  if (mu == a) return {0.0L, -sign * s};  // (-1)^a / (i sqrt 2)
  if (mu == -a) return {0.0L, s};          // i / sqrt 2
  return {0.0L, 0.0L};
}

long double racah(int j1, int m1, int j2, int m2, int J, int M) {
  if (m1 + m2 != M) return 0.0L;
  if (std::abs(m1) > j1 || std::abs(m2) > j2 || std::abs(M) > J) return 0.0L;
  if (!triangle_admissible(j1, j2, J)) return 0.0L;
  const long double pre =
      std::sqrt((2.0L * J + 1.0L) * factorial(J + j1 - j2) * factorial(J - j1 + j2) * factorial(j1 + j2 - J) /
                factorial(j1 + j2 + J + 1)) *
      std::sqrt(factorial(J + M) * factorial(J - M) * factorial(j1 - m1) * factorial(j1 + m1) * factorial(j2 - m2) *
                factorial(j2 + m2));
  long double sum = 0.0L;
  for (int k = 0; k <= j1 + j2 - J; ++k) {
    const int d[6] = {k, j1 + j2 - J - k, j1 - m1 - k, j2 + m2 - k, J - j2 + m1 + k, J - j1 - m2 + k};
    if (std::any_of(d, d + 6, [](int x) { return x < 0; })) continue;
    long double den = 1.0L;
    for (int x : d) den *= factorial(x);
    sum += ((k % 2 == 0) ? 1.0L : -1.0L) / den;
  }
  return pre * sum;
}

}  // namespace

bool triangle_admissible(int l1, int l2, int l3) {
  return l1 >= 0 && l2 >= 0 && l3 >= 0 && l3 >= std::abs(l1 - l2) && l3 <= l1 + l2;
}

double cg_complex(int l1, int m1, int l2, int m2, int l3, int m3) {
  return static_cast<double>(racah(l1, m1, l2, m2, l3, m3));
}

double CGTable::at(int m1, int m2, int m3) const {
  auto it = std::lower_bound(entries.begin(), entries.end(), std::tuple(m1, m2, m3),
                             [](const CGEntry& e, const std::tuple<int, int, int>& key) {
                               return std::tuple(e.m1, e.m2, e.m3) < key;
                             });
  if (it != entries.end() && it->m1 == m1 && it->m2 == m2 && it->m3 == m3) return it->value;
  return 0.0;
}

CGTable cg_real(int l1, int l2, int l3) {
  CGTable table{l1, l2, l3, {}};
  if (!triangle_admissible(l1, l2, l3)) return table;
  const bool odd = (l1 + l2 + l3) % 2 != 0;
  for (int m1 = -l1; m1 <= l1; ++m1) {
    for (int m2 = -l2; m2 <= l2; ++m2) {
      for (int m3 = -l3; m3 <= l3; ++m3) {
        // R = Σ U3[m3,mu3] C[mu1,mu2,mu3] conj(U1[m1,mu1]) conj(U2[m2,mu2]);
        // each real index couples to at most mu = ±m.
        cplx acc(0.0L, 0.0L);
        for (int mu1 : {m1, -m1}) {
          for (int mu2 : {m2, -m2}) {
            const int mu3 = mu1 + mu2;
            if (std::abs(mu3) != std::abs(m3)) continue;
            const long double c = racah(l1, mu1, l2, mu2, l3, mu3);
            if (c == 0.0L) continue;
            acc += basis_change(m3, mu3) * c * std::conj(basis_change(m1, mu1)) * std::conj(basis_change(m2, mu2));
            if (m2 == 0) break;
          }
          if (m1 == 0) break;
        }
        const long double v = odd ? acc.imag() : acc.real();
        if (std::fabs(v) > 1e-15L) table.entries.push_back({m1, m2, m3, static_cast<double>(v)});
      }
    }
  }
  return table;
}

const CGTable& cg_real_cached(int l1, int l2, int l3) {
  static std::mutex mutex;
  static std::map<std::tuple<int, int, int>, std::unique_ptr<CGTable>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[{l1, l2, l3}];
  if (!slot) slot = std::make_unique<CGTable>(cg_real(l1, l2, l3));
  return *slot;
}

}  // namespace mace
