#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mace/generalized_cg.hpp"
#include "mace/irreps.hpp"

namespace mace {

// All coupling schemes of one correlation order and one target L. The path
// index η runs over (scheme, path) pairs in scheme order, so the product
// weights of this block have shape [elements][channels][num_paths].
struct ProductBlock {
  int order = 1;
  int L = 0;
  std::vector<CouplingScheme> schemes;
  std::vector<std::size_t> path_offset;  // first η of each scheme
  std::size_t num_paths = 0;
};

// Ordered l-tuples with every l <= lmax_a, parity (-1)^{Σl} = (-1)^L and at
// least one admissible chain, for orders 1..correlation and L = 0..L_max.
// Blocks without paths are omitted; order is (order, L) ascending.
std::vector<ProductBlock> enumerate_product_blocks(int correlation, int lmax_a, int L_max);

struct PlanTerm {
  std::uint32_t weight = 0;  // index into the per-channel weight vector (blocks concatenated)
  double coeff = 0.0;
};

// Fused execution plan for the many-body message
//   m_{kLM} = Σ_ν Σ_η W_{z k L, η} Σ_{lm} C^{LM}_{η, lm} Π_ξ A_{k l_ξ m_ξ}.
// Coupling coefficients are contracted with the weights once per (element,
// channel) into c̃ over a prefix tree of index tuples (L, M, i_1..i_n). The
// message is then a Horner sweep from the deepest correlation order down:
// each node adds its accumulated value times A(i_n) into its parent, and the
// parents carry the lower-order c̃ terms, so every order is produced in one pass.
struct ContractionPlan {
  int correlation = 1;
  int lmax_a = 0;
  int L_max = 0;

  struct Block {
    int order = 1;
    int L = 0;
    std::size_t num_paths = 0;
    std::size_t weight_offset = 0;
  };
  std::vector<Block> blocks;
  std::size_t weights_per_channel = 0;

  // Non-root nodes in execution order (deepest level first); roots follow at
  // num_inner + lm_index(L, M).
  std::vector<std::uint32_t> parent;
  std::vector<std::uint16_t> a_index;
  std::vector<std::uint8_t> level;
  std::size_t num_inner = 0;
  std::size_t num_out = 0;

  // c̃ terms per node (CSR over all num_inner + num_out nodes).
  std::vector<std::uint32_t> term_begin;
  std::vector<PlanTerm> terms;

  std::size_t num_nodes() const { return num_inner + num_out; }
};

// Throws ContractViolation for correlation < 1 or lmax/L_max out of range.
ContractionPlan build_contraction_plan(const std::vector<ProductBlock>& blocks, int correlation, int lmax_a, int L_max);

namespace detail {

// c̃[node][k] for one element: weights holds each block as [elements][K][num_paths].
template <class T>
void fuse_weights(const ContractionPlan& plan, std::span<const std::span<const T>> block_weights, std::size_t element,
                  std::size_t K, std::vector<T>& scratch_w, std::vector<T>& ctilde) {
  const std::size_t W = plan.weights_per_channel;
  scratch_w.assign(W * K, T(0.0));
  for (std::size_t b = 0; b < plan.blocks.size(); ++b) {
    const auto& blk = plan.blocks[b];
    const T* src = block_weights[b].data() + element * K * blk.num_paths;
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t p = 0; p < blk.num_paths; ++p) scratch_w[(blk.weight_offset + p) * K + k] = src[k * blk.num_paths + p];
  }
  ctilde.assign(plan.num_nodes() * K, T(0.0));
  for (std::size_t q = 0; q < plan.num_nodes(); ++q) {
    T* dst = ctilde.data() + q * K;
    for (std::uint32_t t = plan.term_begin[q]; t < plan.term_begin[q + 1]; ++t) {
      const double c = plan.terms[t].coeff;
      const T* w = scratch_w.data() + static_cast<std::size_t>(plan.terms[t].weight) * K;
      for (std::size_t k = 0; k < K; ++k) dst[k] += c * w[k];
    }
  }
}

// Adjoint of fuse_weights: block_weight_adj[b][element][k][p] += Σ coeff · ctilde_adj.
template <class T>
void fuse_weights_adjoint(const ContractionPlan& plan, const std::vector<T>& ctilde_adj, std::size_t element,
                          std::size_t K, std::span<const std::span<T>> block_weight_adj, std::vector<T>& scratch_w) {
  const std::size_t W = plan.weights_per_channel;
  scratch_w.assign(W * K, T(0.0));
  for (std::size_t q = 0; q < plan.num_nodes(); ++q) {
    const T* g = ctilde_adj.data() + q * K;
    for (std::uint32_t t = plan.term_begin[q]; t < plan.term_begin[q + 1]; ++t) {
      const double c = plan.terms[t].coeff;
      T* w = scratch_w.data() + static_cast<std::size_t>(plan.terms[t].weight) * K;
      for (std::size_t k = 0; k < K; ++k) w[k] += c * g[k];
    }
  }
  for (std::size_t b = 0; b < plan.blocks.size(); ++b) {
    const auto& blk = plan.blocks[b];
    T* dst = block_weight_adj[b].data() + element * K * blk.num_paths;
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t p = 0; p < blk.num_paths; ++p) dst[k * blk.num_paths + p] += scratch_w[(blk.weight_offset + p) * K + k];
  }
}

// Horner sweep for one atom. a_t is A of the atom transposed to [lm][k];
// vals enters holding c̃ of the atom's element and leaves holding every node's value.
template <class T>
void sweep_forward(const ContractionPlan& plan, std::size_t K, const T* a_t, std::vector<T>& vals) {
  for (std::size_t q = 0; q < plan.num_inner; ++q) {
    const T* src = vals.data() + q * K;
    const T* a = a_t + static_cast<std::size_t>(plan.a_index[q]) * K;
    T* dst = vals.data() + static_cast<std::size_t>(plan.parent[q]) * K;
    for (std::size_t k = 0; k < K; ++k) dst[k] += src[k] * a[k];
  }
}

// Reverse of sweep_forward. adj enters with the root adjoints set and zeros
// elsewhere; on exit adj holds ∂/∂c̃ for every node and a_t_adj += ∂/∂A.
template <class T>
void sweep_backward(const ContractionPlan& plan, std::size_t K, const T* a_t, const std::vector<T>& vals,
                    std::vector<T>& adj, T* a_t_adj) {
  for (std::size_t q = plan.num_inner; q-- > 0;) {
    const T* g = adj.data() + static_cast<std::size_t>(plan.parent[q]) * K;
    const T* a = a_t + static_cast<std::size_t>(plan.a_index[q]) * K;
    const T* v = vals.data() + q * K;
    T* aa = a_t_adj + static_cast<std::size_t>(plan.a_index[q]) * K;
    T* dq = adj.data() + q * K;
    for (std::size_t k = 0; k < K; ++k) {
      dq[k] = g[k] * a[k];
      aa[k] += g[k] * v[k];
    }
  }
}

}  // namespace detail

// Messages m (nodes × K × lm_dim(L_max)) from A (nodes × K × lm_dim(lmax_a)).
// element_of[i] indexes the first axis of every weight block.
IrrepTensor looped_contraction(const IrrepTensor& A, const ContractionPlan& plan,
                               const std::vector<std::vector<double>>& product_weights,
                               const std::vector<std::size_t>& element_of, std::size_t num_elements);

// Dense nested-loop product basis B[i][η][k][M] of one block.
std::vector<double> brute_force_product_basis(const IrrepTensor& A, const ProductBlock& block);

// Direct evaluation of B followed by the per-element linear expansion over η,
// summed over all blocks with order <= correlation.
IrrepTensor brute_force_message(const IrrepTensor& A, const std::vector<ProductBlock>& blocks,
                                const std::vector<std::vector<double>>& product_weights,
                                const std::vector<std::size_t>& element_of, int correlation, int L_max);

}  // namespace mace
