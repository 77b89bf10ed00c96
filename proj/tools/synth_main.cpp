// Writes the labelled synthetic dataset used by the training regressions.

#include <cstdint>
#include <iostream>
#include <random>

#include <CLI11.hpp>

#include "mace/extxyz.hpp"
#include "synthetic_potential.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate labelled clusters from an analytic pair + angle potential"};
  std::size_t count = 200, min_atoms = 3, max_atoms = 6;
  std::uint64_t seed = 2024;
  std::string out = "synthetic.xyz";
  app.add_option("--count", count);
  app.add_option("--min-atoms", min_atoms);
  app.add_option("--max-atoms", max_atoms);
  app.add_option("--seed", seed);
  app.add_option("--out", out);
  CLI11_PARSE(app, argc, argv);
  if (min_atoms < 2 || max_atoms < min_atoms) {
    std::cerr << "need 2 <= min-atoms <= max-atoms\n";
    return 2;
  }

  std::mt19937_64 rng(seed);
  std::vector<mace::Configuration> configs;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t n = min_atoms + rng() % (max_atoms - min_atoms + 1);
    mace::Configuration c = mace::synthetic::random_cluster(n, rng);
    mace::synthetic::label(c);
    configs.push_back(std::move(c));
  }
  mace::write_extxyz_file(out, configs, false);
  std::cout << "wrote " << configs.size() << " configurations to " << out << "\n";
  return 0;
}
