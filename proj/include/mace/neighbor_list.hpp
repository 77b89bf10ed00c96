#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "mace/configuration.hpp"

namespace mace {

// Directed edge j -> i. The displacement is r_j + shift·lattice - r_i
// (sender minus receiver); unit_vec is that displacement normalized.
struct Edge {
  std::size_t receiver = 0;
  std::size_t sender = 0;
  std::array<int, 3> shift{0, 0, 0};  // lattice-vector multiples applied to the sender
  double r = 0.0;
  Vec3 unit_vec{};
};

struct NeighborList {
  double r_cut = 0.0;
  std::vector<Edge> edges;  // sorted by (receiver, sender, shift)

  std::size_t size() const { return edges.size(); }
};

// All edges with r < r_cut. Periodic directions use every lattice shift that
// can bring an image within r_cut; a cell-binned search keeps the cost linear
// in the atom count. Throws DataError for a singular cell or atoms closer than
// 1e-6 Å, ContractViolation for r_cut <= 0.
NeighborList build_neighbor_list(const Configuration& config, double r_cut);

// O(N²·shifts) reference construction with the same contract and ordering.
NeighborList build_neighbor_list_brute_force(const Configuration& config, double r_cut);

// Number of lattice shifts per direction needed to cover r_cut
// (⌈r_cut / plane spacing⌉), zero for non-periodic directions.
std::array<int, 3> required_shift_range(const Cell& cell, double r_cut);

}  // namespace mace
