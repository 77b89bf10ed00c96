#include "mace/dataset_stats.hpp"

#include <cmath>

#include "mace/errors.hpp"
#include "mace/neighbor_list.hpp"

namespace mace {

DatasetStats compute_dataset_stats(const std::vector<Configuration>& configs) {
  DatasetStats stats;
  double shift_sum = 0.0;
  std::size_t labelled = 0;
  double f2 = 0.0;
  std::size_t fcount = 0;
  for (const Configuration& c : configs) {
    for (int z : c.species) ++stats.element_counts[z];
    if (c.energy && c.size() > 0) {
      shift_sum += *c.energy / static_cast<double>(c.size());
      ++labelled;
    }
    if (c.forces) {
      for (const Vec3& f : *c.forces)
        for (double x : f) f2 += x * x;
      fcount += 3 * c.forces->size();
    }
  }
  if (labelled == 0) throw DataError("dataset statistics need at least one energy label");
  stats.per_atom_shift = shift_sum / static_cast<double>(labelled);
  const double rms = fcount > 0 ? std::sqrt(f2 / static_cast<double>(fcount)) : 0.0;
  stats.force_scale = rms > 0.0 ? rms : 1.0;
  return stats;
}

double average_neighbor_count(const std::vector<Configuration>& configs, double r_cut) {
  std::size_t edges = 0, atoms = 0;
  for (const Configuration& c : configs) {
    edges += build_neighbor_list(c, r_cut).size();
    atoms += c.size();
  }
  return atoms > 0 ? static_cast<double>(edges) / static_cast<double>(atoms) : 0.0;
}

}  // namespace mace
