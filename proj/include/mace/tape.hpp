#pragma once

#include <algorithm>
#include <cstddef>
#include <cstring>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mace/dual.hpp"
#include "mace/errors.hpp"

namespace mace::ad {

template <class T>
using Inputs = std::span<const std::span<const T>>;
template <class T>
using InputAdjoints = std::span<const std::span<T>>;

// Type-erased recorded primitive. Adjoints accumulate (+=) into in_adj.
template <class T>
class OpNode {
 public:
  virtual ~OpNode() = default;
  virtual std::string_view name() const = 0;
  virtual std::size_t output_size() const = 0;
  virtual void forward(Inputs<T> in, std::span<T> out) const = 0;
  virtual void backward(Inputs<T> in, std::span<const T> out, std::span<const T> out_adj,
                        InputAdjoints<T> in_adj) const = 0;
};

// Adapts a primitive struct P providing
//   static constexpr std::string_view kName;
//   std::size_t output_size() const;
//   template <class T> void forward(Inputs<T>, std::span<T>) const;
//   template <class T> void backward(Inputs<T>, std::span<const T>, std::span<const T>, InputAdjoints<T>) const;
template <class T, class P>
class PrimitiveNode final : public OpNode<T> {
 public:
  explicit PrimitiveNode(P prim) : prim_(std::move(prim)) {}
  std::string_view name() const override { return P::kName; }
  std::size_t output_size() const override { return prim_.output_size(); }
  void forward(Inputs<T> in, std::span<T> out) const override { prim_.template forward<T>(in, out); }
  void backward(Inputs<T> in, std::span<const T> out, std::span<const T> out_adj,
                InputAdjoints<T> in_adj) const override {
    prim_.template backward<T>(in, out, out_adj, in_adj);
  }

 private:
  P prim_;
};

// Records primitives as they execute and replays their adjoints in reverse.
// Slots hold flat value buffers; leaves are inputs and parameters.
template <class T>
class Tape {
 public:
  using Slot = std::size_t;

  Slot leaf(std::vector<T> values) {
    values_.push_back(std::move(values));
    return values_.size() - 1;
  }

  template <class P>
  Slot record(P prim, std::vector<Slot> inputs) {
    auto node = std::make_unique<PrimitiveNode<T, P>>(std::move(prim));
    std::vector<T> out(node->output_size(), T(0.0));
    {
      const auto in = gather(inputs);
      node->forward(in, out);
    }
    for (const T& x : out) {
      if (!isfinite(x)) {
        throw NumericError("non-finite output from primitive '" + std::string(node->name()) + "' (op " +
                           std::to_string(ops_.size()) + ")");
      }
    }
    values_.push_back(std::move(out));
    ops_.push_back({std::move(node), std::move(inputs), values_.size() - 1});
    return values_.size() - 1;
  }

  std::span<const T> value(Slot s) const { return values_.at(s); }
  std::span<const T> adjoint(Slot s) const { return adjoints_.at(s); }
  std::size_t slot_count() const { return values_.size(); }
  std::size_t op_count() const { return ops_.size(); }
  std::string_view op_name(std::size_t i) const { return ops_.at(i).node->name(); }

  // Reverse sweep seeded with out_adj on slot `out`; all other adjoints start at zero.
  void backward(Slot out, std::span<const T> seed) {
    adjoints_.assign(values_.size(), {});
    for (std::size_t s = 0; s < values_.size(); ++s) adjoints_[s].assign(values_[s].size(), T(0.0));
    if (seed.size() != values_.at(out).size()) throw ContractViolation("Tape::backward: seed size mismatch");
    std::copy(seed.begin(), seed.end(), adjoints_[out].begin());
    for (std::size_t o = ops_.size(); o-- > 0;) {
      const Op& op = ops_[o];
      const auto& g = adjoints_[op.output];
      if (std::all_of(g.begin(), g.end(), [](const T& x) { return x == T(0.0); })) continue;
      const auto in = gather(op.inputs);
      std::vector<std::span<T>> in_adj;
      in_adj.reserve(op.inputs.size());
      for (Slot s : op.inputs) in_adj.emplace_back(adjoints_[s]);
      op.node->backward(in, values_[op.output], g, in_adj);
    }
  }

  void backward(Slot out, T seed = T(1.0)) {
    const T s[1] = {seed};
    backward(out, std::span<const T>(s, 1));
  }

  // Re-executes every recorded primitive from the stored inputs and reports
  // whether all outputs match the recorded ones bit for bit.
  bool replay_matches() const {
    for (const Op& op : ops_) {
      std::vector<T> out(op.node->output_size(), T(0.0));
      const auto in = gather(op.inputs);
      op.node->forward(in, out);
      const auto& rec = values_[op.output];
      for (std::size_t i = 0; i < out.size(); ++i)
        if (!bit_equal(out[i], rec[i])) return false;
    }
    return true;
  }

 private:
  struct Op {
    std::unique_ptr<OpNode<T>> node;
    std::vector<Slot> inputs;
    Slot output;
  };

  std::vector<std::span<const T>> gather(const std::vector<Slot>& inputs) const {
    std::vector<std::span<const T>> in;
    in.reserve(inputs.size());
    for (Slot s : inputs) in.emplace_back(values_.at(s));
    return in;
  }

  static bool bit_equal(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }
  template <class V>
  static bool bit_equal(const Dual<V>& a, const Dual<V>& b) {
    return bit_equal(a.v, b.v) && bit_equal(a.d, b.d);
  }

  std::vector<std::vector<T>> values_;
  std::vector<std::vector<T>> adjoints_;
  std::vector<Op> ops_;
};

}  // namespace mace::ad
