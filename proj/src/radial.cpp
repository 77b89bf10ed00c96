#include "mace/radial.hpp"

#include <string>

namespace mace {

void RadialConfig::validate() const {
  if (n_basis < 1) throw ContractViolation("radial: n_basis must be >= 1");
  if (!(r_cut > 0.0)) throw ContractViolation("radial: r_cut must be > 0");
  if (envelope_p < 2) throw ContractViolation("radial: envelope_p must be >= 2");
  for (std::size_t w : mlp_widths)
    if (w == 0) throw ContractViolation("radial: MLP widths must be positive");
}

std::vector<double> bessel_basis(double r, const RadialConfig& cfg) {
  if (!(r > 0.0)) throw ContractViolation("bessel_basis: r must be positive");
  std::vector<double> out(static_cast<std::size_t>(cfg.n_basis));
  bessel_basis_into(r, cfg, out.data());
  return out;
}

double bessel_basis_origin_limit(int n, double r_cut) {
  return n * std::numbers::pi * std::sqrt(2.0) / std::pow(r_cut, 1.5);
}

std::vector<double> radial_mlp(const std::vector<double>& basis_values, const RadialMLPParams& params) {
  std::vector<double> x = basis_values;
  for (std::size_t li = 0; li < params.layers.size(); ++li) {
    const DenseLayer& layer = params.layers[li];
    if (x.size() != layer.in || layer.weight.size() != layer.in * layer.out ||
        (!layer.bias.empty() && layer.bias.size() != layer.out)) {
      throw ContractViolation("radial_mlp: shape mismatch at layer " + std::to_string(li));
    }
    std::vector<double> y(layer.out);
    for (std::size_t o = 0; o < layer.out; ++o) {
      double acc = layer.bias.empty() ? 0.0 : layer.bias[o];
      for (std::size_t i = 0; i < layer.in; ++i) acc += layer.weight[o * layer.in + i] * x[i];
      y[o] = (li + 1 < params.layers.size()) ? silu(acc) : acc;
    }
    x = std::move(y);
  }
  return x;
}

RadialMLPParams make_radial_mlp(const RadialConfig& cfg, std::size_t out_width, bool with_bias) {
  RadialMLPParams p;
  std::size_t in = static_cast<std::size_t>(cfg.n_basis);
  auto push = [&](std::size_t out) {
    DenseLayer layer{in, out, std::vector<double>(in * out, 0.0), {}};
    if (with_bias) layer.bias.assign(out, 0.0);
    p.layers.push_back(std::move(layer));
    in = out;
  };
  for (std::size_t w : cfg.mlp_widths) push(w);
  push(out_width);
  return p;
}

}  // namespace mace
