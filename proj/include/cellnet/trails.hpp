#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "entity.hpp"
#include "rng.hpp"
#include "topology.hpp"

namespace cellnet {

struct TrailParams {
  double c1 = 10.0;
  double c2 = 0.001;
  double c3 = 2.0;
  double v_max = 1000.0;
  double exp_arg_cap = 30.0;
  // Also raise the reverse link's value at the node the entity arrives at,
  // so that node learns its neighbor was just checked.
  bool mark_arrival = false;
};

inline void validate(const TrailParams& p) {
  if (!(p.c1 > 0 && p.c2 > 0 && p.c3 > 0))
    throw std::invalid_argument("trail constants c1, c2, c3 must be positive");
  if (!(p.v_max > 0 && p.exp_arg_cap > 0))
    throw std::invalid_argument("trail v_max and exp_arg_cap must be positive");
}

// f_i: new = c1 + c2 * exp(old), with the exponent and the result capped.
inline double trail_increase(double old, const TrailParams& p) {
  if (!(old >= 0.0)) throw std::invalid_argument("trail value must be >= 0");
  return std::min(p.c1 + p.c2 * std::exp(std::min(old, p.exp_arg_cap)), p.v_max);
}

// f_d: linear decrement, clamped at zero.
inline double trail_decay(double old, const TrailParams& p) { return std::max(0.0, old - p.c3); }

inline double trail_decay(double old, double c3) { return std::max(0.0, old - c3); }

// Integer roulette weights: max(1, ceil(v_top + 1 - v_i)), with v_top the
// largest value in the set. Low trails dominate; every link keeps weight 1.
inline std::vector<std::uint64_t> roulette_weights(std::span<const double> values) {
  std::vector<std::uint64_t> w(values.size(), 1);
  if (values.empty()) return w;
  const double top = *std::max_element(values.begin(), values.end());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double raw = std::ceil(top + 1.0 - values[i]);
    w[i] = raw < 1.0 ? 1 : static_cast<std::uint64_t>(raw);
  }
  return w;
}

// Draws k uniformly from [1, sum] and returns the interval containing it.
inline std::size_t roulette_pick(std::span<const std::uint64_t> weights, Rng& rng) {
  std::uint64_t total = 0;
  for (auto w : weights) total += w;
  if (total == 0) throw std::invalid_argument("roulette needs positive total weight");
  std::uint64_t k = rng.below(total) + 1;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (k <= weights[i]) return i;
    k -= weights[i];
  }
  return weights.size() - 1;
}

// Per-node trail storage: one value per (outgoing link, cell type), plus the
// per-node overrides used on fragment bridges.
class TrailTable {
 public:
  TrailTable(const Topology& topo, std::uint32_t type_count, TrailParams params = {})
      : topo_(&topo), types_(type_count), params_(params), offset_(topo.node_count() + 1, 0),
        bridge_fallback_(topo.node_count(), false), c3_(topo.node_count(), params.c3) {
    validate(params_);
    if (type_count == 0) throw std::invalid_argument("trail table needs at least one type");
    for (NodeId n = 0; n < topo.node_count(); ++n)
      offset_[n + 1] = offset_[n] + topo.degree(n) * types_;
    values_.assign(offset_.back(), 0.0);
  }

  const TrailParams& params() const { return params_; }
  std::uint32_t type_count() const { return types_; }

  double value(NodeId node, LinkId link, TypeId type) const {
    return values_[slot(node, local(node, link), type)];
  }

  // Trail values of every link of `node` for `type`, in neighbor order.
  std::vector<double> values_at(NodeId node, TypeId type) const {
    const std::size_t deg = topo_->degree(node);
    std::vector<double> out(deg);
    for (std::size_t i = 0; i < deg; ++i) out[i] = values_[slot(node, i, type)];
    return out;
  }

  void set_value(NodeId node, LinkId link, TypeId type, double v) {
    if (!(v >= 0.0)) throw std::invalid_argument("trail value must be >= 0");
    values_[slot(node, local(node, link), type)] = std::min(v, params_.v_max);
  }

  void set_bridge_fallback(NodeId node, bool on) { bridge_fallback_.at(node) = on; }
  bool bridge_fallback(NodeId node) const { return bridge_fallback_.at(node); }
  void set_decay_override(NodeId node, double c3) {
    if (!(c3 > 0.0)) throw std::invalid_argument("c3 override must be positive");
    c3_.at(node) = c3;
  }
  double decay_rate(NodeId node) const { return c3_.at(node); }

  // An entity that checked `node` leaves over `link`.
  void record_traversal(NodeId node, LinkId link, TypeId type) {
    auto& v = values_[slot(node, local(node, link), type)];
    v = trail_increase(v, params_);
  }

  // One timestep of decay on every entry.
  void decay_all() {
    for (NodeId n = 0; n < topo_->node_count(); ++n) {
      const double c3 = c3_[n];
      for (std::size_t i = offset_[n]; i < offset_[n + 1]; ++i)
        if (values_[i] > 0.0) values_[i] = trail_decay(values_[i], c3);
    }
  }

  LinkId select_next_hop(NodeId node, TypeId type, Rng& rng) const {
    const auto& adj = topo_->neighbors(node);
    if (adj.empty()) throw std::invalid_argument("select_next_hop on isolated node");
    if (bridge_fallback_[node]) return adj[rng.below(adj.size())].link;
    const auto vals = values_at(node, type);
    const auto w = roulette_weights(vals);
    return adj[roulette_pick(w, rng)].link;
  }

  // Visits every (node, link, type, value) entry in id order.
  template <typename F>
  void for_each(F&& f) const {
    for (NodeId n = 0; n < topo_->node_count(); ++n) {
      const auto& adj = topo_->neighbors(n);
      for (std::size_t i = 0; i < adj.size(); ++i)
        for (TypeId t = 1; t <= types_; ++t) f(n, adj[i].link, t, values_[slot(n, i, t)]);
    }
  }

 private:
  std::size_t local(NodeId node, LinkId link) const {
    auto i = topo_->local_index(node, link);
    if (!i) throw std::invalid_argument("link does not belong to node");
    return *i;
  }
  std::size_t slot(NodeId node, std::size_t local_link, TypeId type) const {
    if (type < 1 || type > types_) throw std::invalid_argument("cell type out of range");
    return offset_[node] + local_link * types_ + (type - 1);
  }

  const Topology* topo_;
  std::uint32_t types_;
  TrailParams params_;
  std::vector<std::size_t> offset_;
  std::vector<double> values_;
  std::vector<bool> bridge_fallback_;
  std::vector<double> c3_;
};

}  // namespace cellnet
