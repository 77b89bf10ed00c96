#include "mace/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <tuple>

#include "mace/clebsch_gordan.hpp"
#include "mace/errors.hpp"

namespace mace {

void MaceConfig::validate() const {
  if (num_layers < 1) throw ConfigError("model.num_layers must be >= 1");
  if (correlation < 1) throw ConfigError("model.correlation must be >= 1");
  if (l_max < 0 || l_max > kMaxShOrder) throw ConfigError("model.l_max must lie in [0, " + std::to_string(kMaxShOrder) + "]");
  if (L_max < 0 || L_max > l_max * correlation) throw ConfigError("model.L_max must lie in [0, l_max * correlation]");
  if (channels < 1) throw ConfigError("model.channels must be >= 1");
  if (readout_mlp_width < 1) throw ConfigError("model.readout_mlp_width must be >= 1");
  if (elements.empty()) throw ConfigError("model.elements must not be empty");
  for (std::size_t a = 0; a < elements.size(); ++a) {
    if (elements[a] < 1 || elements[a] > 118) throw ConfigError("model.elements: invalid atomic number");
    for (std::size_t b = 0; b < a; ++b)
      if (elements[a] == elements[b]) throw ConfigError("model.elements: duplicate element");
  }
  try {
    radial.validate();
  } catch (const ContractViolation& e) {
    throw ConfigError(e.what());
  }
}

NamedTensor& ModelParams::at(const std::string& name) {
  for (auto& t : tensors)
    if (t.name == name) return t;
  throw ContractViolation("parameter tensor '" + name + "' not found");
}

const NamedTensor& ModelParams::at(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return t;
  throw ContractViolation("parameter tensor '" + name + "' not found");
}

bool ModelParams::contains(const std::string& name) const {
  return std::any_of(tensors.begin(), tensors.end(), [&](const NamedTensor& t) { return t.name == name; });
}

std::size_t ModelParams::total_size() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += t.values.size();
  return n;
}

std::vector<double> ModelParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(total_size());
  for (const auto& t : tensors) flat.insert(flat.end(), t.values.begin(), t.values.end());
  return flat;
}

void ModelParams::assign_flat(std::span<const double> flat) {
  if (flat.size() != total_size()) throw ContractViolation("ModelParams::assign_flat: size mismatch");
  std::size_t o = 0;
  for (auto& t : tensors) {
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(o), flat.begin() + static_cast<std::ptrdiff_t>(o + t.values.size()),
              t.values.begin());
    o += t.values.size();
  }
}

ModelParams ModelParams::zeros_like() const {
  ModelParams z = *this;
  for (auto& t : z.tensors) std::fill(t.values.begin(), t.values.end(), 0.0);
  return z;
}

std::vector<std::array<int, 3>> pooling_triples(int lmax_sh, int lmax_in, int lmax_out) {
  std::vector<std::array<int, 3>> out;
  for (int l1 = 0; l1 <= lmax_sh; ++l1)
    for (int l2 = 0; l2 <= lmax_in; ++l2)
      for (int l3 = 0; l3 <= lmax_out; ++l3)
        if (triangle_admissible(l1, l2, l3) && (l1 + l2 + l3) % 2 == 0) out.push_back({l1, l2, l3});
  return out;
}

ad::PoolingSpec make_pooling_spec(int lmax_sh, int lmax_in, int lmax_out) {
  ad::PoolingSpec spec;
  spec.lmax_sh = lmax_sh;
  spec.lmax_in = lmax_in;
  spec.lmax_out = lmax_out;
  const auto triples = pooling_triples(lmax_sh, lmax_in, lmax_out);
  spec.num_triples = triples.size();
  for (std::size_t t = 0; t < triples.size(); ++t) {
    const auto [l1, l2, l3] = triples[t];
    for (const CGEntry& e : cg_real_cached(l1, l2, l3).entries) {
      spec.terms.push_back({static_cast<std::uint16_t>(t), static_cast<std::uint16_t>(lm_index(l1, e.m1)),
                            static_cast<std::uint16_t>(lm_index(l2, e.m2)),
                            static_cast<std::uint16_t>(lm_index(l3, e.m3)), e.value});
    }
  }
  return spec;
}

ad::EdgeTopology build_edge_topology(const Configuration& config, const NeighborList& nl) {
  ad::EdgeTopology topo;
  topo.num_atoms = config.size();
  const std::size_t E = nl.size();
  topo.receiver.resize(E);
  topo.sender.resize(E);
  topo.offset.assign(3 * E, 0.0);
  topo.in_edges.assign(topo.num_atoms, {});
  for (std::size_t e = 0; e < E; ++e) {
    const Edge& ed = nl.edges[e];
    if (ed.receiver >= topo.num_atoms || ed.sender >= topo.num_atoms)
      throw ContractViolation("edge topology: neighbor list does not match configuration");
    topo.receiver[e] = ed.receiver;
    topo.sender[e] = ed.sender;
    if (config.periodic()) {
      for (int a = 0; a < 3; ++a) {
        double s = 0.0;
        for (int b = 0; b < 3; ++b) s += ed.shift[b] * config.cell->lattice[b][a];
        topo.offset[3 * e + a] = s;
      }
    }
    topo.in_edges[ed.receiver].push_back(e);
  }
  for (auto& list : topo.in_edges) {
    std::sort(list.begin(), list.end(), [&](std::size_t a, std::size_t b) {
      const Edge& x = nl.edges[a];
      const Edge& y = nl.edges[b];
      return std::tie(x.r, x.unit_vec[0], x.unit_vec[1], x.unit_vec[2]) <
             std::tie(y.r, y.unit_vec[0], y.unit_vec[1], y.unit_vec[2]);
    });
  }
  return topo;
}

std::vector<std::size_t> canonical_atom_order(const Configuration& config) {
  std::vector<std::size_t> order(config.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(config.positions[a], config.species[a]) < std::tie(config.positions[b], config.species[b]);
  });
  return order;
}

MaceModel::MaceModel(MaceConfig cfg, ModelScaling scaling, BuildHooks hooks)
    : cfg_(std::move(cfg)), scaling_(scaling) {
  cfg_.validate();
  if (!(scaling_.neighbor_norm > 0.0) || !std::isfinite(scaling_.neighbor_norm))
    throw ConfigError("neighbor normalization must be positive");
  if (!std::isfinite(scaling_.shift) || !std::isfinite(scaling_.scale)) throw ConfigError("non-finite output scaling");

  blocks_ = enumerate_product_blocks(cfg_.correlation, cfg_.l_max, cfg_.L_max);
  plan_ = std::make_shared<const ContractionPlan>(
      build_contraction_plan(blocks_, cfg_.correlation, cfg_.l_max, cfg_.L_max));

  const std::size_t S = cfg_.elements.size(), K = cfg_.channels;
  specs_.push_back({"embedding", {S, K}, false, 1.0});
  for (int t = 0; t < cfg_.num_layers; ++t) {
    Layer layer;
    layer.lmax_in = t == 0 ? 0 : cfg_.L_max;
    ad::PoolingSpec spec = make_pooling_spec(cfg_.l_max, layer.lmax_in, cfg_.l_max);
    if (hooks.flip_cg_sign) {
      auto it = std::find_if(spec.terms.begin(), spec.terms.end(), [](const ad::PoolTerm& p) { return p.i3 > 0; });
      if (it != spec.terms.end()) it->coeff = -it->coeff;
    }
    layer.radial_out = K * spec.num_triples;
    layer.pooling = std::make_shared<const ad::PoolingSpec>(std::move(spec));

    const std::string p = "layer" + std::to_string(t) + ".";
    std::size_t in = static_cast<std::size_t>(cfg_.radial.n_basis);
    std::size_t n = 0;
    for (std::size_t w : cfg_.radial.mlp_widths) {
      specs_.push_back({p + "radial.w" + std::to_string(n++), {w, in}, false, 1.0 / std::sqrt(static_cast<double>(in))});
      in = w;
    }
    specs_.push_back({p + "radial.w" + std::to_string(n), {layer.radial_out, in}, false,
                      1.0 / std::sqrt(static_cast<double>(in))});
    const double inv_sqrt_k = 1.0 / std::sqrt(static_cast<double>(K));
    const std::size_t Lh = static_cast<std::size_t>(cfg_.L_max) + 1, La = static_cast<std::size_t>(cfg_.l_max) + 1;
    if (t > 0) specs_.push_back({p + "up_mix", {Lh, K, K}, false, inv_sqrt_k});
    if (cfg_.mix_a) specs_.push_back({p + "a_mix", {La, K, K}, true, inv_sqrt_k});
    for (const auto& b : plan_->blocks) {
      specs_.push_back({p + "product.nu" + std::to_string(b.order) + ".L" + std::to_string(b.L), {S, K, b.num_paths},
                        true, 1.0 / std::sqrt(static_cast<double>(b.num_paths))});
    }
    specs_.push_back({p + "update.message", {Lh, K, K}, false, inv_sqrt_k});
    specs_.push_back({p + "update.residual", {S, static_cast<std::size_t>(layer.lmax_in) + 1, K, K}, false, inv_sqrt_k});
    if (t + 1 < cfg_.num_layers) {
      specs_.push_back({p + "readout.linear", {1, K}, false, inv_sqrt_k});
    } else {
      const std::size_t W = cfg_.readout_mlp_width;
      specs_.push_back({p + "readout.hidden", {W, K}, false, inv_sqrt_k});
      specs_.push_back({p + "readout.output", {1, W}, false, 1.0 / std::sqrt(static_cast<double>(W))});
    }
    layers_.push_back(std::move(layer));
  }
}

ModelParams MaceModel::zero_params() const {
  ModelParams p;
  for (const TensorSpec& s : specs_) {
    std::size_t n = 1;
    for (std::size_t d : s.shape) n *= d;
    p.tensors.push_back({s.name, s.shape, std::vector<double>(n, 0.0), s.decay});
  }
  return p;
}

ModelParams MaceModel::init_params(std::uint64_t seed) const {
  ModelParams p = zero_params();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  for (std::size_t i = 0; i < specs_.size(); ++i)
    for (double& x : p.tensors[i].values) x = specs_[i].init_std * g(rng);
  return p;
}

void MaceModel::check_params(const ModelParams& params) const {
  if (params.tensors.size() != specs_.size())
    throw ContractViolation("parameter set has " + std::to_string(params.tensors.size()) + " tensors, model expects " +
                            std::to_string(specs_.size()));
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    const NamedTensor& t = params.tensors[i];
    std::size_t n = 1;
    for (std::size_t d : specs_[i].shape) n *= d;
    if (t.name != specs_[i].name || t.shape != specs_[i].shape || t.values.size() != n)
      throw ContractViolation("parameter tensor '" + specs_[i].name + "' is missing or has the wrong shape");
  }
}

std::vector<std::size_t> MaceModel::element_indices(const Configuration& config) const {
  std::vector<std::size_t> idx(config.size());
  for (std::size_t i = 0; i < config.size(); ++i) {
    const auto it = std::find(cfg_.elements.begin(), cfg_.elements.end(), config.species[i]);
    if (it == cfg_.elements.end()) {
      std::string sym;
      try {
        sym = element_symbol(config.species[i]);
      } catch (const DataError&) {
        sym = "Z=" + std::to_string(config.species[i]);
      }
      throw DataError("element " + sym + " is not in the model's element list");
    }
    idx[i] = static_cast<std::size_t>(it - cfg_.elements.begin());
  }
  return idx;
}

template <class T>
Recording<T> MaceModel::record(const Configuration& config, const NeighborList& nl, std::vector<T> positions,
                               std::vector<std::vector<T>> params) const {
  using namespace ad;
  if (positions.size() != 3 * config.size()) throw ContractViolation("record: positions size mismatch");
  if (params.size() != specs_.size()) throw ContractViolation("record: parameter count mismatch");

  Recording<T> rec;
  auto& tape = rec.tape;
  const std::size_t N = config.size(), K = cfg_.channels, S = cfg_.elements.size();
  const auto topo = std::make_shared<const EdgeTopology>(build_edge_topology(config, nl));
  const auto elem = std::make_shared<const std::vector<std::size_t>>(element_indices(config));
  const std::size_t E = topo->num_edges();

  rec.positions = tape.leaf(std::move(positions));
  for (auto& p : params) rec.params.push_back(tape.leaf(std::move(p)));
  auto param = [&](const std::string& name) {
    for (std::size_t i = 0; i < specs_.size(); ++i)
      if (specs_[i].name == name) return rec.params[i];
    throw ContractViolation("record: unknown parameter " + name);
  };

  const auto d = tape.record(EdgeVectors{topo}, {rec.positions});
  const auto Y = tape.record(SphericalHarmonics{cfg_.l_max, E}, {d});
  const auto basis = tape.record(RadialBasis{cfg_.radial, E}, {d});
  const auto h0 = tape.record(EmbedElements{elem, K}, {param("embedding")});

  const std::size_t wh = static_cast<std::size_t>(lm_dim(cfg_.L_max));
  std::size_t h = h0;
  int lin = 0;
  for (int t = 0; t < cfg_.num_layers; ++t) {
    const Layer& layer = layers_[static_cast<std::size_t>(t)];
    const std::string p = "layer" + std::to_string(t) + ".";

    const std::size_t hin = t == 0 ? h0 : tape.record(ChannelMix{N, K, cfg_.L_max}, {h, param(p + "up_mix")});

    std::size_t x = basis;
    std::size_t width = static_cast<std::size_t>(cfg_.radial.n_basis);
    std::size_t n = 0;
    for (std::size_t w : cfg_.radial.mlp_widths) {
      x = tape.record(Dense{E, width, w, false}, {x, param(p + "radial.w" + std::to_string(n++))});
      x = tape.record(SiLU{E * w}, {x});
      width = w;
    }
    const auto R = tape.record(Dense{E, width, layer.radial_out, false}, {x, param(p + "radial.w" + std::to_string(n))});

    auto A = tape.record(EquivariantPooling{topo, layer.pooling, K, 1.0 / scaling_.neighbor_norm}, {Y, R, hin});
    if (cfg_.mix_a) A = tape.record(ChannelMix{N, K, cfg_.l_max}, {A, param(p + "a_mix")});

    std::vector<std::size_t> cin{A};
    for (const auto& b : plan_->blocks)
      cin.push_back(param(p + "product.nu" + std::to_string(b.order) + ".L" + std::to_string(b.L)));
    const auto m = tape.record(SymmetricContraction{plan_, elem, S, K}, std::move(cin));

    const auto um = tape.record(ChannelMix{N, K, cfg_.L_max}, {m, param(p + "update.message")});
    const auto ur = tape.record(ElementChannelMix{elem, K, lin, cfg_.L_max}, {h, param(p + "update.residual")});
    h = tape.record(Add{N * K * wh}, {um, ur});
    lin = cfg_.L_max;
    rec.features.push_back(h);

    const auto s = tape.record(ScalarSlice{N, K, wh}, {h});
    if (t + 1 < cfg_.num_layers) {
      rec.layer_energies.push_back(tape.record(Dense{N, K, 1, false}, {s, param(p + "readout.linear")}));
    } else {
      const std::size_t W = cfg_.readout_mlp_width;
      auto hid = tape.record(Dense{N, K, W, false}, {s, param(p + "readout.hidden")});
      hid = tape.record(SiLU{N * W}, {hid});
      rec.layer_energies.push_back(tape.record(Dense{N, W, 1, false}, {hid, param(p + "readout.output")}));
    }
  }
  rec.site_energies = tape.record(SiteEnergy{N, scaling_.shift, scaling_.scale}, rec.layer_energies);
  const auto order = std::make_shared<const std::vector<std::size_t>>(canonical_atom_order(config));
  rec.energy = tape.record(SumOrdered{order}, {rec.site_energies});
  return rec;
}

template Recording<double> MaceModel::record<double>(const Configuration&, const NeighborList&, std::vector<double>,
                                                     std::vector<std::vector<double>>) const;
template Recording<Dual<double>> MaceModel::record<Dual<double>>(const Configuration&, const NeighborList&,
                                                                 std::vector<Dual<double>>,
                                                                 std::vector<std::vector<Dual<double>>>) const;

namespace {

std::vector<double> flat_positions(const Configuration& c) {
  std::vector<double> x(3 * c.size());
  for (std::size_t i = 0; i < c.size(); ++i)
    for (int a = 0; a < 3; ++a) x[3 * i + static_cast<std::size_t>(a)] = c.positions[i][static_cast<std::size_t>(a)];
  return x;
}

std::vector<std::vector<double>> param_values(const ModelParams& p) {
  std::vector<std::vector<double>> v;
  v.reserve(p.tensors.size());
  for (const auto& t : p.tensors) v.push_back(t.values);
  return v;
}

}  // namespace

ForwardResult MaceModel::forward(const Configuration& config, const ModelParams& params) const {
  check_params(params);
  config.validate();
  const NeighborList nl = build_neighbor_list(config, cfg_.r_cut());
  const Recording<double> rec = record<double>(config, nl, flat_positions(config), param_values(params));
  ForwardResult out;
  out.energy = rec.tape.value(rec.energy)[0];
  const auto se = rec.tape.value(rec.site_energies);
  out.site_energies.assign(se.begin(), se.end());
  for (std::size_t s : rec.layer_energies) {
    const auto v = rec.tape.value(s);
    out.layer_energies.emplace_back(v.begin(), v.end());
  }
  for (std::size_t s : rec.features) {
    const auto v = rec.tape.value(s);
    out.features.emplace_back(config.size(), cfg_.channels, cfg_.L_max, std::vector<double>(v.begin(), v.end()));
  }
  return out;
}

std::pair<double, GradientBundle> MaceModel::grad_energy(const Configuration& config, const ModelParams& params) const {
  check_params(params);
  config.validate();
  const NeighborList nl = build_neighbor_list(config, cfg_.r_cut());
  Recording<double> rec = record<double>(config, nl, flat_positions(config), param_values(params));
  rec.tape.backward(rec.energy);
  GradientBundle g;
  const auto dx = rec.tape.adjoint(rec.positions);
  g.d_positions.resize(config.size());
  for (std::size_t i = 0; i < config.size(); ++i)
    for (std::size_t a = 0; a < 3; ++a) g.d_positions[i][a] = dx[3 * i + a];
  g.d_params = params.zeros_like();
  for (std::size_t t = 0; t < params.tensors.size(); ++t) {
    const auto a = rec.tape.adjoint(rec.params[t]);
    std::copy(a.begin(), a.end(), g.d_params.tensors[t].values.begin());
  }
  return {rec.tape.value(rec.energy)[0], std::move(g)};
}

// ---- component operations -------------------------------------------------

IrrepTensor embed_elements(const std::vector<int>& species, const std::vector<int>& elements,
                           const std::vector<double>& embedding, std::size_t channels) {
  if (embedding.size() != elements.size() * channels) throw ContractViolation("embed_elements: embedding shape");
  IrrepTensor h(species.size(), channels, 0);
  for (std::size_t i = 0; i < species.size(); ++i) {
    const auto it = std::find(elements.begin(), elements.end(), species[i]);
    if (it == elements.end()) throw DataError("element " + element_symbol(species[i]) + " is not in the element list");
    const std::size_t z = static_cast<std::size_t>(it - elements.begin());
    for (std::size_t k = 0; k < channels; ++k) h(i, k, 0, 0) = embedding[z * channels + k];
  }
  return h;
}

IrrepTensor compute_A(const Configuration& config, const NeighborList& nl, const std::vector<double>& radial_out,
                      const std::vector<double>& sh_values, int lmax_sh, const IrrepTensor& h, int lmax_out,
                      double neighbor_norm) {
  const auto topo = std::make_shared<const ad::EdgeTopology>(build_edge_topology(config, nl));
  const auto spec = std::make_shared<const ad::PoolingSpec>(make_pooling_spec(lmax_sh, h.lmax, lmax_out));
  const std::size_t E = nl.size(), K = h.channels;
  if (radial_out.size() != E * K * spec->num_triples) throw ContractViolation("compute_A: radial output width");
  if (sh_values.size() != E * static_cast<std::size_t>(lm_dim(lmax_sh))) throw ContractViolation("compute_A: harmonics shape");
  if (h.nodes != config.size()) throw ContractViolation("compute_A: feature rows");
  ad::EquivariantPooling pool{topo, spec, K, 1.0 / neighbor_norm};
  IrrepTensor A(config.size(), K, lmax_out);
  const std::span<const double> in[3] = {sh_values, radial_out, h.data};
  pool.forward<double>(in, A.data);
  return A;
}

IrrepTensor compute_A_first(const Configuration& config, const NeighborList& nl, const std::vector<double>& radial_out,
                            const std::vector<double>& sh_values, int lmax, const IrrepTensor& h0,
                            double neighbor_norm) {
  if (h0.lmax != 0) throw ContractViolation("compute_A_first: expects scalar features");
  return compute_A(config, nl, radial_out, sh_values, lmax, h0, lmax, neighbor_norm);
}

IrrepTensor update_features(const IrrepTensor& messages, const IrrepTensor& h_prev,
                            const std::vector<std::size_t>& element_of, const std::vector<double>& message_w,
                            const std::vector<double>& residual_w) {
  const std::size_t N = messages.nodes, K = messages.channels;
  if (h_prev.nodes != N || h_prev.channels != K || element_of.size() != N)
    throw ContractViolation("update_features: shape mismatch");
  const std::size_t Lm = static_cast<std::size_t>(messages.lmax) + 1, Lr = static_cast<std::size_t>(h_prev.lmax) + 1;
  if (message_w.size() != Lm * K * K || residual_w.size() % (Lr * K * K) != 0)
    throw ContractViolation("update_features: weight shape");
  const std::size_t S = residual_w.size() / (Lr * K * K);
  for (std::size_t z : element_of)
    if (z >= S) throw ContractViolation("update_features: element index out of range");
  auto elem = std::make_shared<const std::vector<std::size_t>>(element_of);
  IrrepTensor a(N, K, messages.lmax), b(N, K, messages.lmax);
  {
    const std::span<const double> in[2] = {messages.data, message_w};
    ad::ChannelMix{N, K, messages.lmax}.forward<double>(in, a.data);
  }
  {
    const std::span<const double> in[2] = {h_prev.data, residual_w};
    ad::ElementChannelMix{elem, K, h_prev.lmax, messages.lmax}.forward<double>(in, b.data);
  }
  for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
  return a;
}

std::vector<double> readout_linear(const IrrepTensor& h, const std::vector<double>& w) {
  if (w.size() != h.channels) throw ContractViolation("readout_linear: weight shape");
  std::vector<double> e(h.nodes, 0.0);
  for (std::size_t i = 0; i < h.nodes; ++i)
    for (std::size_t k = 0; k < h.channels; ++k) e[i] += w[k] * h(i, k, 0, 0);
  return e;
}

std::vector<double> readout_mlp(const IrrepTensor& h, const std::vector<double>& hidden_w,
                                const std::vector<double>& output_w, std::size_t width) {
  const std::size_t K = h.channels;
  if (hidden_w.size() != width * K || output_w.size() != width) throw ContractViolation("readout_mlp: weight shape");
  std::vector<double> e(h.nodes, 0.0);
  for (std::size_t i = 0; i < h.nodes; ++i) {
    for (std::size_t u = 0; u < width; ++u) {
      double s = 0.0;
      for (std::size_t k = 0; k < K; ++k) s += hidden_w[u * K + k] * h(i, k, 0, 0);
      e[i] += output_w[u] * silu(s);
    }
  }
  return e;
}

}  // namespace mace
