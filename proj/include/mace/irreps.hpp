#pragma once

#include <cstddef>
#include <vector>

#include "mace/errors.hpp"

namespace mace {

// Order-l irreducible block. Every feature in this library carries the
// spherical-harmonic parity (-1)^l, so only l is stored.
struct Irrep {
  int l = 0;

  constexpr int dim() const { return 2 * l + 1; }
  constexpr int parity() const { return (l % 2 == 0) ? 1 : -1; }
};

// Flat index of component (l, m) within a block stack 0..lmax, m = -l..l.
constexpr int lm_index(int l, int m) { return l * l + l + m; }
constexpr int lm_dim(int lmax) { return (lmax + 1) * (lmax + 1); }

// Node-indexed equivariant features laid out as [node][channel][lm].
struct IrrepTensor {
  std::size_t nodes = 0;
  std::size_t channels = 0;
  int lmax = 0;
  std::vector<double> data;

  IrrepTensor() = default;
  IrrepTensor(std::size_t n, std::size_t k, int lm) : nodes(n), channels(k), lmax(lm) {
    if (lm < 0) throw ContractViolation("IrrepTensor: negative lmax");
    data.assign(n * k * static_cast<std::size_t>(lm_dim(lm)), 0.0);
  }
  IrrepTensor(std::size_t n, std::size_t k, int lm, std::vector<double> values)
      : nodes(n), channels(k), lmax(lm), data(std::move(values)) {
    if (data.size() != n * k * static_cast<std::size_t>(lm_dim(lm))) {
      throw ContractViolation("IrrepTensor: data size does not match shape");
    }
  }

  std::size_t width() const { return static_cast<std::size_t>(lm_dim(lmax)); }
  std::size_t offset(std::size_t i, std::size_t k, int l, int m) const {
    return (i * channels + k) * width() + static_cast<std::size_t>(lm_index(l, m));
  }
  double& operator()(std::size_t i, std::size_t k, int l, int m) { return data[offset(i, k, l, m)]; }
  double operator()(std::size_t i, std::size_t k, int l, int m) const { return data[offset(i, k, l, m)]; }
};

}  // namespace mace
