#pragma once

#include <vector>

namespace mace {

struct CGEntry {
  int m1 = 0;
  int m2 = 0;
  int m3 = 0;
  double value = 0.0;
};

// Real-basis coupling coefficients C^{l3 m3}_{l1 m1, l2 m2}. Entries are
// sorted by (m1, m2, m3) and exact zeros are omitted.
struct CGTable {
  int l1 = 0;
  int l2 = 0;
  int l3 = 0;
  std::vector<CGEntry> entries;

  bool empty() const { return entries.empty(); }
  // Dense lookup, zero for absent entries.
  double at(int m1, int m2, int m3) const;
};

bool triangle_admissible(int l1, int l2, int l3);

// Complex Clebsch-Gordan <l1 m1 l2 m2 | l3 m3> from the Racah closed form.
double cg_complex(int l1, int m1, int l2, int m2, int l3, int m3);

// Real-basis table obtained by conjugating the complex coefficients with the
// complex-to-real change of basis of the spherical harmonics. For l1+l2+l3
// odd the conjugated coefficients are purely imaginary; the imaginary part is
// returned, which is still an equivariant coupling. Triangle-violating
// triples give an empty table.
CGTable cg_real(int l1, int l2, int l3);

// Memoized cg_real; safe for concurrent use.
const CGTable& cg_real_cached(int l1, int l2, int l3);

}  // namespace mace
