#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mace/configuration.hpp"
#include "mace/contraction.hpp"
#include "mace/irreps.hpp"
#include "mace/neighbor_list.hpp"
#include "mace/primitives.hpp"
#include "mace/radial.hpp"
#include "mace/tape.hpp"

namespace mace {

struct MaceConfig {
  int num_layers = 2;   // T
  int correlation = 3;  // ν
  int l_max = 3;        // edge harmonics and A-features
  int L_max = 2;        // messages and hidden features
  std::size_t channels = 32;
  RadialConfig radial;  // holds r_cut
  std::size_t readout_mlp_width = 16;
  std::vector<int> elements;  // atomic numbers, defines the element index
  bool mix_a = true;          // per-l channel mixing of A before the product

  double r_cut() const { return radial.r_cut; }
  // Throws ConfigError.
  void validate() const;
};

// Dataset-derived output scaling and the pooling normalization.
struct ModelScaling {
  double shift = 0.0;           // eV per atom
  double scale = 1.0;           // eV
  double neighbor_norm = 1.0;   // pooled sums are divided by this
};

struct NamedTensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> values;
  bool decay = false;  // receives weight decay (A-mixing and product weights)
};

class ModelParams {
 public:
  std::vector<NamedTensor> tensors;

  NamedTensor& at(const std::string& name);
  const NamedTensor& at(const std::string& name) const;
  bool contains(const std::string& name) const;
  std::size_t total_size() const;
  std::vector<double> flatten() const;
  void assign_flat(std::span<const double> flat);
  ModelParams zeros_like() const;
};

struct GradientBundle {
  std::vector<Vec3> d_positions;  // ∂E/∂r, eV/Å; forces are the negative
  ModelParams d_params;
};

struct BuildHooks {
  bool flip_cg_sign = false;  // test-only fault injection in the pooling coefficients
};

struct ForwardResult {
  double energy = 0.0;
  std::vector<double> site_energies;
  std::vector<std::vector<double>> layer_energies;  // raw readout per layer, before shift/scale
  std::vector<IrrepTensor> features;                // h after each layer
};

struct TensorSpec {
  std::string name;
  std::vector<std::size_t> shape;
  bool decay = false;
  double init_std = 0.0;
};

// Tape of one forward evaluation and the slots a caller may need.
template <class T>
struct Recording {
  ad::Tape<T> tape;
  std::size_t positions = 0;
  std::vector<std::size_t> params;  // in parameter_specs order
  std::vector<std::size_t> features;
  std::vector<std::size_t> layer_energies;
  std::size_t site_energies = 0;
  std::size_t energy = 0;
};

// Ordered (l1, l2, l3) with l1 <= lmax_sh, l2 <= lmax_in, l3 <= lmax_out,
// triangle-admissible and l1 + l2 + l3 even; lexicographic.
std::vector<std::array<int, 3>> pooling_triples(int lmax_sh, int lmax_in, int lmax_out);
ad::PoolingSpec make_pooling_spec(int lmax_sh, int lmax_in, int lmax_out);

// Edge geometry with every receiver's edges ordered by (r, r̂), so pooled sums
// do not depend on atom labels.
ad::EdgeTopology build_edge_topology(const Configuration& config, const NeighborList& nl);

// Atom indices sorted by (position, species): the summation order of the total energy.
std::vector<std::size_t> canonical_atom_order(const Configuration& config);

class MaceModel {
 public:
  explicit MaceModel(MaceConfig cfg, ModelScaling scaling = {}, BuildHooks hooks = {});

  const MaceConfig& config() const { return cfg_; }
  const ModelScaling& scaling() const { return scaling_; }
  const std::vector<TensorSpec>& parameter_specs() const { return specs_; }
  const std::vector<ProductBlock>& product_blocks() const { return blocks_; }
  const ContractionPlan& plan() const { return *plan_; }
  std::size_t radial_width(int layer) const { return layers_.at(static_cast<std::size_t>(layer)).radial_out; }

  // N(0, init_std²) draws in spec order from a single seeded stream.
  ModelParams init_params(std::uint64_t seed) const;
  ModelParams zero_params() const;
  // Throws ContractViolation naming the first missing or misshapen tensor.
  void check_params(const ModelParams& params) const;

  // Element index of every atom; throws DataError naming an unknown element.
  std::vector<std::size_t> element_indices(const Configuration& config) const;

  ForwardResult forward(const Configuration& config, const ModelParams& params) const;
  std::pair<double, GradientBundle> grad_energy(const Configuration& config, const ModelParams& params) const;

  // Records the forward pass with the given leaf values (positions N×3 flat and
  // one vector per parameter tensor). The neighbor list fixes the graph.
  template <class T>
  Recording<T> record(const Configuration& config, const NeighborList& nl, std::vector<T> positions,
                      std::vector<std::vector<T>> params) const;

 private:
  struct Layer {
    int lmax_in = 0;
    std::shared_ptr<const ad::PoolingSpec> pooling;
    std::size_t radial_out = 0;
  };

  MaceConfig cfg_;
  ModelScaling scaling_;
  std::vector<ProductBlock> blocks_;
  std::shared_ptr<const ContractionPlan> plan_;
  std::vector<Layer> layers_;
  std::vector<TensorSpec> specs_;
};

// Component operations on plain values, for inspection and testing.

// h^(1): the embedding row of every atom's element as an L = 0 feature.
IrrepTensor embed_elements(const std::vector<int>& species, const std::vector<int>& elements,
                           const std::vector<double>& embedding, std::size_t channels);

// A from per-edge radial weights (E × K × triples), harmonics (E × lm_dim(lmax_sh))
// and sender features h (already channel-mixed).
IrrepTensor compute_A(const Configuration& config, const NeighborList& nl, const std::vector<double>& radial_out,
                      const std::vector<double>& sh_values, int lmax_sh, const IrrepTensor& h, int lmax_out,
                      double neighbor_norm);

// First-layer form: h0 holds only scalars, so the triples reduce to (l, 0, l).
IrrepTensor compute_A_first(const Configuration& config, const NeighborList& nl, const std::vector<double>& radial_out,
                            const std::vector<double>& sh_values, int lmax, const IrrepTensor& h0,
                            double neighbor_norm);

// h' = W_msg m + W_res[z] h_prev, blocks of h_prev above its order are absent.
IrrepTensor update_features(const IrrepTensor& messages, const IrrepTensor& h_prev,
                            const std::vector<std::size_t>& element_of, const std::vector<double>& message_w,
                            const std::vector<double>& residual_w);

std::vector<double> readout_linear(const IrrepTensor& h, const std::vector<double>& w);
std::vector<double> readout_mlp(const IrrepTensor& h, const std::vector<double>& hidden_w,
                                const std::vector<double>& output_w, std::size_t width);

}  // namespace mace
