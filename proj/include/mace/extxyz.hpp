#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "mace/configuration.hpp"

namespace mace {

// Extended XYZ: atom-count line, key=value comment line, one line per atom.
// Recognized keys: energy, energy_pred, Lattice, pbc, Properties. Recognized
// columns: species (S) or Z (I), pos (R:3), forces (R:3), forces_pred (R:3).
// Other keys and columns are kept verbatim. LF or CRLF line endings.
// Throws ParseError (with line number) on malformed input.
std::vector<Configuration> parse_extxyz(std::string_view text);
std::vector<Configuration> read_extxyz_file(const std::string& path);

// LF line endings, 17 significant digits. Prediction keys are written only
// when include_predictions is set and the configuration carries them.
std::string write_extxyz(const std::vector<Configuration>& configs, bool include_predictions);
void write_extxyz_file(const std::string& path, const std::vector<Configuration>& configs, bool include_predictions);

}  // namespace mace
