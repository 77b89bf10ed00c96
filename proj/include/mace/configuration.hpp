#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mace {

using Vec3 = std::array<double, 3>;

// Lattice vectors as rows, in Å.
struct Cell {
  std::array<Vec3, 3> lattice{};
  std::array<bool, 3> pbc{true, true, true};

  bool any_periodic() const { return pbc[0] || pbc[1] || pbc[2]; }
};

// Per-atom column carried through I/O without interpretation.
struct ExtraColumn {
  std::string name;
  char type = 'S';
  int width = 1;
  std::vector<std::string> values;  // atoms × width
};

struct Configuration {
  std::vector<Vec3> positions;  // Å
  std::vector<int> species;     // atomic numbers
  std::optional<double> energy;              // eV
  std::optional<std::vector<Vec3>> forces;   // eV/Å
  std::optional<Cell> cell;
  std::vector<std::pair<std::string, std::string>> metadata;  // unrecognized comment-line keys
  std::vector<ExtraColumn> extra_columns;

  std::optional<double> energy_pred;
  std::optional<std::vector<Vec3>> forces_pred;

  std::size_t size() const { return positions.size(); }
  bool periodic() const { return cell && cell->any_periodic(); }

  // Throws DataError on non-finite positions, non-positive species or
  // mismatched label shapes. Coincident atoms are rejected by the neighbor list.
  void validate() const;
};

// Element symbol <-> atomic number; throws DataError for unknown input.
int atomic_number(const std::string& symbol);
const std::string& element_symbol(int z);

}  // namespace mace
