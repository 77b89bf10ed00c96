#pragma once

#include <map>
#include <vector>

#include "mace/configuration.hpp"

namespace mace {

struct DatasetStats {
  double per_atom_shift = 0.0;  // eV/atom
  double force_scale = 1.0;     // eV/Å
  std::map<int, std::size_t> element_counts;
};

// per_atom_shift: mean over energy-labelled configs of E / atom count.
// force_scale: RMS over all force components of force-labelled configs,
// falling back to 1.0 when there are none or they are all zero.
// Throws DataError when no config carries an energy label.
DatasetStats compute_dataset_stats(const std::vector<Configuration>& configs);

// Mean number of neighbors per atom within r_cut over the given configs.
double average_neighbor_count(const std::vector<Configuration>& configs, double r_cut);

}  // namespace mace
