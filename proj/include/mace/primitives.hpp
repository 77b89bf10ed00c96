#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string_view>
#include <vector>

#include "mace/contraction.hpp"
#include "mace/radial.hpp"
#include "mace/sph_harm.hpp"
#include "mace/tape.hpp"

// Coarse differentiable primitives of the forward pass. Each one is recorded
// on a Tape as a single node; backward() accumulates vector-Jacobian products.
// All are templated on the scalar so the same code runs on Dual numbers.

namespace mace::ad {

// Edge geometry shared by the edge primitives. offset[e] is the lattice
// translation applied to the sender; in_edges[i] lists the edges received by
// atom i in the order their contributions are summed.
struct EdgeTopology {
  std::size_t num_atoms = 0;
  std::vector<std::size_t> receiver;
  std::vector<std::size_t> sender;
  std::vector<double> offset;  // E × 3
  std::vector<std::vector<std::size_t>> in_edges;

  std::size_t num_edges() const { return receiver.size(); }
};

// positions (N×3) -> displacement x_j + offset - x_i per edge (E×3)
struct EdgeVectors {
  static constexpr std::string_view kName = "edge_vectors";
  std::shared_ptr<const EdgeTopology> topo;

  std::size_t output_size() const { return 3 * topo->num_edges(); }

  template <class T>
  void forward(Inputs<T> in, std::span<T> out) const {
    const T* x = in[0].data();
    for (std::size_t e = 0; e < topo->num_edges(); ++e) {
      const std::size_t i = topo->receiver[e], j = topo->sender[e];
      for (int a = 0; a < 3; ++a) out[3 * e + a] = x[3 * j + a] + topo->offset[3 * e + a] - x[3 * i + a];
    }
  }

  template <class T>
  void backward(Inputs<T>, std::span<const T>, std::span<const T> g, InputAdjoints<T> adj) const {
    T* xb = adj[0].data();
    for (std::size_t e = 0; e < topo->num_edges(); ++e) {
      const std::size_t i = topo->receiver[e], j = topo->sender[e];
      for (int a = 0; a < 3; ++a) {
        xb[3 * j + a] += g[3 * e + a];
        xb[3 * i + a] -= g[3 * e + a];
      }
    }
  }
};

// displacements (E×3) -> Y(d/|d|) (E × lm_dim(lmax))
struct SphericalHarmonics {
  static constexpr std::string_view kName = "spherical_harmonics";
  int lmax = 0;
  std::size_t edges = 0;

  std::size_t output_size() const { return edges * static_cast<std::size_t>(lm_dim(lmax)); }

  template <class T>
  void forward(Inputs<T> in, std::span<T> out) const {
    const std::size_t w = static_cast<std::size_t>(lm_dim(lmax));
    for (std::size_t e = 0; e < edges; ++e) sph_harm_of_vector<T>(lmax, in[0].data() + 3 * e, out.data() + w * e);
  }

  template <class T>
  void backward(Inputs<T> in, std::span<const T>, std::span<const T> g, InputAdjoints<T> adj) const {
    const std::size_t w = static_cast<std::size_t>(lm_dim(lmax));
    for (std::size_t e = 0; e < edges; ++e)
      sph_harm_of_vector_vjp<T>(lmax, in[0].data() + 3 * e, g.data() + w * e, adj[0].data() + 3 * e);
  }
};

// displacements (E×3) -> enveloped Bessel basis of |d| (E × n_basis)
struct RadialBasis {
  static constexpr std::string_view kName = "radial_basis";
  RadialConfig cfg;
  std::size_t edges = 0;

  std::size_t output_size() const { return edges * static_cast<std::size_t>(cfg.n_basis); }

  template <class T>
  void forward(Inputs<T> in, std::span<T> out) const {
    const std::size_t nb = static_cast<std::size_t>(cfg.n_basis);
    for (std::size_t e = 0; e < edges; ++e) {
      const T* d = in[0].data() + 3 * e;
      const T r = sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
      bessel_basis_into(r, cfg, out.data() + nb * e);
    }
  }

  template <class T>
  void backward(Inputs<T> in, std::span<const T>, std::span<const T> g, InputAdjoints<T> adj) const {
    const std::size_t nb = static_cast<std::size_t>(cfg.n_basis);
    std::vector<T> db(nb);
    for (std::size_t e = 0; e < edges; ++e) {
      const T* d = in[0].data() + 3 * e;
      const T r = sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
      bessel_basis_derivative_into(r, cfg, db.data());
      T s = T(0.0);
      for (std::size_t n = 0; n < nb; ++n) s += g[nb * e + n] * db[n];
      for (int a = 0; a < 3; ++a) adj[0][3 * e + a] += s * d[a] / r;
    }
  }
};

// x (rows × in), W (out × in)[, b (out)] -> x Wᵀ + b (rows × out)
struct Dense {
  static constexpr std::string_view kName = "dense";
  std::size_t rows = 0, in = 0, out = 0;
  bool bias = false;

  std::size_t output_size() const { return rows * out; }

  template <class T>
  void forward(Inputs<T> inp, std::span<T> y) const {
    const T* x = inp[0].data();
    const T* W = inp[1].data();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t o = 0; o < out; ++o) {
        T s = bias ? inp[2][o] : T(0.0);
        const T* w = W + o * in;
        const T* xr = x + r * in;
        for (std::size_t c = 0; c < in; ++c) s += w[c] * xr[c];
        y[r * out + o] = s;
      }
    }
  }

  template <class T>
  void backward(Inputs<T> inp, std::span<const T>, std::span<const T> g, InputAdjoints<T> adj) const {
    const T* x = inp[0].data();
    const T* W = inp[1].data();
    T* xb = adj[0].data();
    T* Wb = adj[1].data();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t o = 0; o < out; ++o) {
        const T go = g[r * out + o];
        if (go == T(0.0)) continue;
        const T* w = W + o * in;
        const T* xr = x + r * in;
        T* xbr = xb + r * in;
        T* wb = Wb + o * in;
        for (std::size_t c = 0; c < in; ++c) {
          xbr[c] += go * w[c];
          wb[c] += go * xr[c];
        }
        if (bias) adj[2][o] += go;
      }
    }
  }
};

struct SiLU {
  static constexpr std::string_view kName = "silu";
  std::size_t size = 0;

  std::size_t output_size() const { return size; }

  template <class T>
  void forward(Inputs<T> in, std::span<T> out) const {
    for (std::size_t i = 0; i < size; ++i) out[i] = silu(in[0][i]);
  }

  template <class T>
  void backward(Inputs<T> in, std::span<const T>, std::span<const T> g, InputAdjoints<T> adj) const {
    for (std::size_t i = 0; i < size; ++i) adj[0][i] += g[i] * silu_derivative(in[0][i]);
  }
};

// embedding (S × K) -> per-atom row of the atom's element (N × K)
struct EmbedElements {
  static constexpr std::string_view kName = "embed_elements";
  std::shared_ptr<const std::vector<std::size_t>> element_of;
  std::size_t channels = 0;

  std::size_t output_size() const { return element_of->size() * channels; }

  template <class T>
  void forward(Inputs<T> in, std::span<T> out) const {
    for (std::size_t i = 0; i < element_of->size(); ++i)
      for (std::size_t k = 0; k < channels; ++k) out[i * channels + k] = in[0][(*element_of)[i] * channels + k];
  }

  template <class T>
  void backward(Inputs<T>, std::span<const T>, std::span<const T> g, InputAdjoints<T> adj) const {
    for (std::size_t i = 0; i < element_of->size(); ++i)
      for (std::size_t k = 0; k < channels; ++k) adj[0][(*element_of)[i] * channels + k] += g[i * channels + k];
  }
};

// x (N × K × lm_dim(lmax)), W (lmax+1 × K × K) -> y_{i,k,lm} = Σ_k' W_{l,k,k'} x_{i,k',lm}
struct ChannelMix {
  static constexpr std::string_view kName = "channel_mix";
  std::size_t nodes = 0, channels = 0;
  int lmax = 0;

  std::size_t output_size() const { return nodes * channels * static_cast<std::size_t>(lm_dim(lmax)); }

  template <class T>
  void forward(Inputs<T> in, std::span<T> y) const {
    const std::size_t K = channels, w = static_cast<std::size_t>(lm_dim(lmax));
    const T* x = in[0].data();
    const T* W = in[1].data();
    for (std::size_t i = 0; i < nodes; ++i) {
      for (int l = 0; l <= lmax; ++l) {
        const T* Wl = W + static_cast<std::size_t>(l) * K * K;
        for (int c = l * l; c < (l + 1) * (l + 1); ++c) {
          for (std::size_t k = 0; k < K; ++k) {
            T s = T(0.0);
            for (std::size_t q = 0; q < K; ++q) s += Wl[k * K + q] * x[(i * K + q) * w + c];
            y[(i * K + k) * w + c] = s;
          }
        }
      }
    }
  }

  template <class T>
  void backward(Inputs<T> in, std::span<const T>, std::span<const T> g, InputAdjoints<T> adj) const {
    const std::size_t K = channels, w = static_cast<std::size_t>(lm_dim(lmax));
    const T* x = in[0].data();
    const T* W = in[1].data();
    T* xb = adj[0].data();
    T* Wb = adj[1].data();
    for (std::size_t i = 0; i < nodes; ++i) {
      for (int l = 0; l <= lmax; ++l) {
        const std::size_t lo = static_cast<std::size_t>(l) * K * K;
        for (int c = l * l; c < (l + 1) * (l + 1); ++c) {
          for (std::size_t k = 0; k < K; ++k) {
            const T gk = g[(i * K + k) * w + c];
            for (std::size_t q = 0; q < K; ++q) {
              xb[(i * K + q) * w + c] += W[lo + k * K + q] * gk;
              Wb[lo + k * K + q] += gk * x[(i * K + q) * w + c];
            }
          }
        }
      }
    }
  }
};

// x (N × K × lm_dim(lmax_in)), W (S × lmax_in+1 × K × K) -> y (N × K × lm_dim(lmax_out))
// with W selected by the element of each atom; blocks with l > lmax_in are zero.
struct ElementChannelMix {
  static constexpr std::string_view kName = "element_channel_mix";
  std::shared_ptr<const std::vector<std::size_t>> element_of;
  std::size_t channels = 0;
  int lmax_in = 0;
  int lmax_out = 0;

  std::size_t output_size() const {
    return element_of->size() * channels * static_cast<std::size_t>(lm_dim(lmax_out));
  }

  template <class T>
  void forward(Inputs<T> in, std::span<T> y) const {
    const std::size_t K = channels, wi = static_cast<std::size_t>(lm_dim(lmax_in)),
                      wo = static_cast<std::size_t>(lm_dim(lmax_out));
    const int lm = std::min(lmax_in, lmax_out);
    for (std::size_t i = 0; i < element_of->size(); ++i) {
      const T* W = in[1].data() + (*element_of)[i] * static_cast<std::size_t>(lmax_in + 1) * K * K;
      for (int l = 0; l <= lm; ++l) {
        const T* Wl = W + static_cast<std::size_t>(l) * K * K;
        for (int c = l * l; c < (l + 1) * (l + 1); ++c)
          for (std::size_t k = 0; k < K; ++k) {
            T s = T(0.0);
            for (std::size_t q = 0; q < K; ++q) s += Wl[k * K + q] * in[0][(i * K + q) * wi + c];
            y[(i * K + k) * wo + c] = s;
          }
      }
    }
  }

  template <class T>
  void backward(Inputs<T> in, std::span<const T>, std::span<const T> g, InputAdjoints<T> adj) const {
    const std::size_t K = channels, wi = static_cast<std::size_t>(lm_dim(lmax_in)),
                      wo = static_cast<std::size_t>(lm_dim(lmax_out));
    const int lm = std::min(lmax_in, lmax_out);
    for (std::size_t i = 0; i < element_of->size(); ++i) {
      const std::size_t base = (*element_of)[i] * static_cast<std::size_t>(lmax_in + 1) * K * K;
      for (int l = 0; l <= lm; ++l) {
        const std::size_t lo = base + static_cast<std::size_t>(l) * K * K;
        for (int c = l * l; c < (l + 1) * (l + 1); ++c)
          for (std::size_t k = 0; k < K; ++k) {
            const T gk = g[(i * K + k) * wo + c];
            for (std::size_t q = 0; q < K; ++q) {
              adj[0][(i * K + q) * wi + c] += in[1][lo + k * K + q] * gk;
              adj[1][lo + k * K + q] += gk * in[0][(i * K + q) * wi + c];
            }
          }
      }
    }
  }
};

struct Add {
  static constexpr std::string_view kName = "add";
  std::size_t size = 0;

  std::size_t output_size() const { return size; }

  template <class T>
  void forward(Inputs<T> in, std::span<T> out) const {
    for (std::size_t i = 0; i < size; ++i) out[i] = in[0][i] + in[1][i];
  }

  template <class T>
  void backward(Inputs<T>, std::span<const T>, std::span<const T> g, InputAdjoints<T> adj) const {
    for (std::size_t i = 0; i < size; ++i) {
      adj[0][i] += g[i];
      adj[1][i] += g[i];
    }
  }
};

// One coupling term of the pooling: Y component i1 times feature component i2
// into A component i3, for triple t (radial weight column).
struct PoolTerm {
  std::uint16_t triple = 0;
  std::uint16_t i1 = 0, i2 = 0, i3 = 0;
  double coeff = 0.0;
};

struct PoolingSpec {
  int lmax_sh = 0;
  int lmax_in = 0;
  int lmax_out = 0;
  std::size_t num_triples = 0;
  std::vector<PoolTerm> terms;  // grouped by triple
};

// Y (E × lm_dim(lmax_sh)), R (E × K × num_triples), h (N × K × lm_dim(lmax_in))
//   -> A_{i,k,l3 m3} = s Σ_{e→i} Σ_t R_{e,k,t} Σ C^{l3 m3}_{l1 m1, l2 m2} Y_{e,l1 m1} h_{j,k,l2 m2}
// where j is the sender of e and s the neighbor normalization.
struct EquivariantPooling {
  static constexpr std::string_view kName = "equivariant_pooling";
  std::shared_ptr<const EdgeTopology> topo;
  std::shared_ptr<const PoolingSpec> spec;
  std::size_t channels = 0;
  double inv_norm = 1.0;

  std::size_t output_size() const {
    return topo->num_atoms * channels * static_cast<std::size_t>(lm_dim(spec->lmax_out));
  }

  template <class T>
  void forward(Inputs<T> in, std::span<T> out) const {
    const std::size_t K = channels, nt = spec->num_triples, N = topo->num_atoms;
    const std::size_t wY = static_cast<std::size_t>(lm_dim(spec->lmax_sh)),
                      wH = static_cast<std::size_t>(lm_dim(spec->lmax_in)),
                      wA = static_cast<std::size_t>(lm_dim(spec->lmax_out));
    const T* Y = in[0].data();
    const T* R = in[1].data();
    const std::vector<T> hT = transpose_nodes(in[2].data(), N, K, wH);
    std::vector<T> acc(wA * K), Rt(nt * K);
    for (std::size_t i = 0; i < N; ++i) {
      std::fill(acc.begin(), acc.end(), T(0.0));
      for (std::size_t e : topo->in_edges[i]) {
        const std::size_t j = topo->sender[e];
        for (std::size_t k = 0; k < K; ++k)
          for (std::size_t t = 0; t < nt; ++t) Rt[t * K + k] = R[(e * K + k) * nt + t];
        for (const PoolTerm& p : spec->terms) {
          const T cy = p.coeff * Y[e * wY + p.i1];
          const T* rk = Rt.data() + p.triple * K;
          const T* hk = hT.data() + (j * wH + p.i2) * K;
          T* ak = acc.data() + p.i3 * K;
          for (std::size_t k = 0; k < K; ++k) ak[k] += cy * rk[k] * hk[k];
        }
      }
      for (std::size_t k = 0; k < K; ++k)
        for (std::size_t c = 0; c < wA; ++c) out[(i * K + k) * wA + c] = acc[c * K + k] * inv_norm;
    }
  }

  template <class T>
  void backward(Inputs<T> in, std::span<const T>, std::span<const T> g, InputAdjoints<T> adj) const {
    const std::size_t K = channels, nt = spec->num_triples, N = topo->num_atoms;
    const std::size_t wY = static_cast<std::size_t>(lm_dim(spec->lmax_sh)),
                      wH = static_cast<std::size_t>(lm_dim(spec->lmax_in)),
                      wA = static_cast<std::size_t>(lm_dim(spec->lmax_out));
    const T* Y = in[0].data();
    const T* R = in[1].data();
    const std::vector<T> hT = transpose_nodes(in[2].data(), N, K, wH);
    std::vector<T> hTb(hT.size(), T(0.0)), gt(wA * K), Rt(nt * K), Rtb(nt * K);
    for (std::size_t i = 0; i < N; ++i) {
      for (std::size_t k = 0; k < K; ++k)
        for (std::size_t c = 0; c < wA; ++c) gt[c * K + k] = g[(i * K + k) * wA + c] * inv_norm;
      for (std::size_t e : topo->in_edges[i]) {
        const std::size_t j = topo->sender[e];
        for (std::size_t k = 0; k < K; ++k)
          for (std::size_t t = 0; t < nt; ++t) Rt[t * K + k] = R[(e * K + k) * nt + t];
        std::fill(Rtb.begin(), Rtb.end(), T(0.0));
        for (const PoolTerm& p : spec->terms) {
          const T y = Y[e * wY + p.i1];
          const T cy = p.coeff * y;
          const T* rk = Rt.data() + p.triple * K;
          T* rbk = Rtb.data() + p.triple * K;
          const T* hk = hT.data() + (j * wH + p.i2) * K;
          T* hbk = hTb.data() + (j * wH + p.i2) * K;
          const T* gk = gt.data() + p.i3 * K;
          T ysum = T(0.0);
          for (std::size_t k = 0; k < K; ++k) {
            const T gh = gk[k] * hk[k];
            ysum += gh * rk[k];
            rbk[k] += cy * gh;
            hbk[k] += cy * gk[k] * rk[k];
          }
          adj[0][e * wY + p.i1] += p.coeff * ysum;
        }
        for (std::size_t k = 0; k < K; ++k)
          for (std::size_t t = 0; t < nt; ++t) adj[1][(e * K + k) * nt + t] += Rtb[t * K + k];
      }
    }
    for (std::size_t j = 0; j < N; ++j)
      for (std::size_t k = 0; k < K; ++k)
        for (std::size_t c = 0; c < wH; ++c) adj[2][(j * K + k) * wH + c] += hTb[(j * wH + c) * K + k];
  }

 private:
  // [node][channel][lm] -> [node][lm][channel]
  template <class T>
  static std::vector<T> transpose_nodes(const T* x, std::size_t N, std::size_t K, std::size_t w) {
    std::vector<T> t(N * K * w);
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t k = 0; k < K; ++k)
        for (std::size_t c = 0; c < w; ++c) t[(i * w + c) * K + k] = x[(i * K + k) * w + c];
    return t;
  }
};

// A (N × K × lm_dim(lmax_a)) and one weight tensor per plan block (S × K × paths)
//   -> messages (N × K × lm_dim(L_max)) by the fused contraction plan.
struct SymmetricContraction {
  static constexpr std::string_view kName = "symmetric_contraction";
  std::shared_ptr<const ContractionPlan> plan;
  std::shared_ptr<const std::vector<std::size_t>> element_of;
  std::size_t num_elements = 0;
  std::size_t channels = 0;

  std::size_t output_size() const {
    return element_of->size() * channels * static_cast<std::size_t>(lm_dim(plan->L_max));
  }

  template <class T>
  void forward(Inputs<T> in, std::span<T> out) const {
    const std::size_t K = channels, wA = static_cast<std::size_t>(lm_dim(plan->lmax_a)),
                      wM = static_cast<std::size_t>(lm_dim(plan->L_max));
    const auto ct = fused(in);
    std::vector<T> aT(wA * K), vals;
    for (std::size_t i = 0; i < element_of->size(); ++i) {
      load_transposed(in[0].data() + i * K * wA, K, wA, aT);
      vals = ct[(*element_of)[i]];
      detail::sweep_forward(*plan, K, aT.data(), vals);
      for (std::size_t k = 0; k < K; ++k)
        for (std::size_t c = 0; c < wM; ++c) out[(i * K + k) * wM + c] = vals[(plan->num_inner + c) * K + k];
    }
  }

  template <class T>
  void backward(Inputs<T> in, std::span<const T>, std::span<const T> g, InputAdjoints<T> adj) const {
    const std::size_t K = channels, wA = static_cast<std::size_t>(lm_dim(plan->lmax_a)),
                      wM = static_cast<std::size_t>(lm_dim(plan->L_max));
    const std::size_t nodes = plan->num_nodes();
    const auto ct = fused(in);
    std::vector<std::vector<T>> ct_adj(num_elements);
    std::vector<T> aT(wA * K), aTb(wA * K), vals, nadj(nodes * K);
    for (std::size_t i = 0; i < element_of->size(); ++i) {
      const std::size_t z = (*element_of)[i];
      load_transposed(in[0].data() + i * K * wA, K, wA, aT);
      vals = ct[z];
      detail::sweep_forward(*plan, K, aT.data(), vals);
      std::fill(nadj.begin(), nadj.end(), T(0.0));
      for (std::size_t k = 0; k < K; ++k)
        for (std::size_t c = 0; c < wM; ++c) nadj[(plan->num_inner + c) * K + k] = g[(i * K + k) * wM + c];
      std::fill(aTb.begin(), aTb.end(), T(0.0));
      detail::sweep_backward(*plan, K, aT.data(), vals, nadj, aTb.data());
      if (ct_adj[z].empty()) ct_adj[z].assign(nodes * K, T(0.0));
      for (std::size_t q = 0; q < nodes * K; ++q) ct_adj[z][q] += nadj[q];
      for (std::size_t k = 0; k < K; ++k)
        for (std::size_t c = 0; c < wA; ++c) adj[0][(i * K + k) * wA + c] += aTb[c * K + k];
    }
    std::vector<T> scratch;
    for (std::size_t z = 0; z < num_elements; ++z)
      if (!ct_adj[z].empty()) detail::fuse_weights_adjoint<T>(*plan, ct_adj[z], z, K, adj.subspan(1), scratch);
  }

 private:
  template <class T>
  std::vector<std::vector<T>> fused(Inputs<T> in) const {
    std::vector<std::vector<T>> ct(num_elements);
    std::vector<T> scratch;
    for (std::size_t z : *element_of)
      if (ct[z].empty()) detail::fuse_weights<T>(*plan, in.subspan(1), z, channels, scratch, ct[z]);
    return ct;
  }

  template <class T>
  static void load_transposed(const T* a, std::size_t K, std::size_t w, std::vector<T>& aT) {
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t c = 0; c < w; ++c) aT[c * K + k] = a[k * w + c];
  }
};

// h (N × K × w) -> invariant block h_{i,k,00} (N × K)
struct ScalarSlice {
  static constexpr std::string_view kName = "scalar_slice";
  std::size_t nodes = 0, channels = 0, width = 1;

  std::size_t output_size() const { return nodes * channels; }

  template <class T>
  void forward(Inputs<T> in, std::span<T> out) const {
    for (std::size_t r = 0; r < nodes * channels; ++r) out[r] = in[0][r * width];
  }

  template <class T>
  void backward(Inputs<T>, std::span<const T>, std::span<const T> g, InputAdjoints<T> adj) const {
    for (std::size_t r = 0; r < nodes * channels; ++r) adj[0][r * width] += g[r];
  }
};

// Per-layer readouts e_t (N each) -> shift + scale · Σ_t e_t (N)
struct SiteEnergy {
  static constexpr std::string_view kName = "site_energy";
  std::size_t nodes = 0;
  double shift = 0.0, scale = 1.0;

  std::size_t output_size() const { return nodes; }

  template <class T>
  void forward(Inputs<T> in, std::span<T> out) const {
    for (std::size_t i = 0; i < nodes; ++i) {
      T s = T(0.0);
      for (const auto& e : in) s += e[i];
      out[i] = shift + scale * s;
    }
  }

  template <class T>
  void backward(Inputs<T> in, std::span<const T>, std::span<const T> g, InputAdjoints<T> adj) const {
    for (std::size_t t = 0; t < in.size(); ++t)
      for (std::size_t i = 0; i < nodes; ++i) adj[t][i] += scale * g[i];
  }
};

// x (N) -> Σ_i x_{order[i]} (1), summed in the given order
struct SumOrdered {
  static constexpr std::string_view kName = "sum";
  std::shared_ptr<const std::vector<std::size_t>> order;

  std::size_t output_size() const { return 1; }

  template <class T>
  void forward(Inputs<T> in, std::span<T> out) const {
    T s = T(0.0);
    for (std::size_t i : *order) s += in[0][i];
    out[0] = s;
  }

  template <class T>
  void backward(Inputs<T>, std::span<const T>, std::span<const T> g, InputAdjoints<T> adj) const {
    for (std::size_t i : *order) adj[0][i] += g[0];
  }
};

}  // namespace mace::ad
