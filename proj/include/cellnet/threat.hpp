#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "entity.hpp"
#include "rng.hpp"
#include "topology.hpp"

namespace cellnet {

struct TrafficConfig {
  // Packets entering through the gateway each step, each headed to a
  // uniformly chosen non-gateway node.
  std::uint32_t packets_per_step = 4;
  double infection_probability_per_packet = 0.1;
  // Intrusion attempts launched directly at a uniformly chosen node. The
  // fractional part is a per-step Bernoulli draw.
  double internal_attack_rate = 1.0;
  // Infections installed without traffic (nothing to inspect in transit).
  double infections_per_step = 0.0;
  // Zipf-like exponent over intrusion types; 0 is uniform.
  double type_skew = 0.0;
};

inline void validate(const TrafficConfig& c) {
  if (!(c.infection_probability_per_packet >= 0.0 && c.infection_probability_per_packet <= 1.0))
    throw std::invalid_argument("infection_probability_per_packet must be in [0,1]");
  if (!(c.internal_attack_rate >= 0.0)) throw std::invalid_argument("internal_attack_rate must be >= 0");
  if (!(c.infections_per_step >= 0.0)) throw std::invalid_argument("infections_per_step must be >= 0");
  if (!(c.type_skew >= 0.0)) throw std::invalid_argument("type_skew must be >= 0");
}

enum class PacketOrigin { external, internal };

struct TrafficPacket {
  std::uint64_t id = 0;
  NodeId source = 0;
  NodeId destination = 0;
  std::vector<NodeId> path;
  std::size_t position = 0;
  std::optional<TypeId> payload;
  PacketOrigin origin = PacketOrigin::external;

  NodeId here() const { return path.at(position); }
  bool at_destination() const { return position + 1 == path.size(); }
};

struct Infection {
  NodeId node = 0;
  TypeId intrusion = 1;
  std::uint64_t installed_at = 0;
};

// Draws intrusion types 1..K, uniform or Zipf-skewed.
class TypeSampler {
 public:
  TypeSampler(std::uint32_t type_count, double skew) : cumulative_(type_count) {
    if (type_count == 0) throw std::invalid_argument("type count must be positive");
    double acc = 0.0;
    for (std::uint32_t t = 0; t < type_count; ++t) {
      acc += skew == 0.0 ? 1.0 : 1.0 / std::pow(static_cast<double>(t + 1), skew);
      cumulative_[t] = acc;
    }
    uniform_ = skew == 0.0;
  }

  TypeId draw(Rng& rng) const {
    if (uniform_) return static_cast<TypeId>(rng.below(cumulative_.size()) + 1);
    const double u = rng.uniform01() * cumulative_.back();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end()) --it;
    return static_cast<TypeId>(it - cumulative_.begin() + 1);
  }

  std::uint32_t type_count() const { return static_cast<std::uint32_t>(cumulative_.size()); }

 private:
  std::vector<double> cumulative_;
  bool uniform_ = true;
};

// Precomputed routes from the gateway so external packets do not need a BFS
// per packet.
class RouteCache {
 public:
  explicit RouteCache(const Topology& topo) : topo_(&topo) {}

  std::vector<NodeId> path(NodeId from, NodeId to) {
    auto it = dist_to_.find(to);
    if (it == dist_to_.end()) it = dist_to_.emplace(to, topo_->bfs_distances(to)).first;
    return topo_->shortest_path(from, to, it->second);
  }

 private:
  const Topology* topo_;
  std::map<NodeId, std::vector<std::uint32_t>> dist_to_;
};

struct GeneratedThreats {
  std::vector<TrafficPacket> packets;
  std::vector<Infection> direct_infections;
};

inline std::uint32_t draw_count(double rate, Rng& rng) {
  const double whole = std::floor(rate);
  return static_cast<std::uint32_t>(whole) + (rng.bernoulli(rate - whole) ? 1u : 0u);
}

// Traffic for timestep t. A pure function of (config, master seed, t);
// packet ids start at `first_id`.
inline GeneratedThreats generate_traffic(const TrafficConfig& cfg, const Topology& topo,
                                         const TypeSampler& types, RouteCache& routes,
                                         std::uint64_t master_seed, std::uint64_t t,
                                         std::uint64_t first_id = 0) {
  Rng rng(master_seed, Stream::traffic, t);
  GeneratedThreats out;
  const auto gateways = topo.nodes_with_role(NodeRole::gateway);
  const std::size_t n = topo.node_count();
  std::uint64_t id = first_id;

  if (!gateways.empty() && n > 1) {
    const NodeId gw = gateways.front();
    for (std::uint32_t i = 0; i < cfg.packets_per_step; ++i) {
      NodeId dst = static_cast<NodeId>(rng.below(n - 1));
      if (dst >= gw) ++dst;
      const bool infected = rng.bernoulli(cfg.infection_probability_per_packet);
      TrafficPacket p;
      p.id = id++;
      p.source = gw;
      p.destination = dst;
      p.path = routes.path(gw, dst);
      if (infected) p.payload = types.draw(rng);
      p.origin = PacketOrigin::external;
      if (!p.path.empty()) out.packets.push_back(std::move(p));
    }
  }

  const std::uint32_t attacks = draw_count(cfg.internal_attack_rate, rng);
  for (std::uint32_t i = 0; i < attacks; ++i) {
    const auto node = static_cast<NodeId>(rng.below(n));
    TrafficPacket p;
    p.id = id++;
    p.source = node;
    p.destination = node;
    p.path = {node};
    p.payload = types.draw(rng);
    p.origin = PacketOrigin::internal;
    out.packets.push_back(std::move(p));
  }

  const std::uint32_t direct = draw_count(cfg.infections_per_step, rng);
  for (std::uint32_t i = 0; i < direct; ++i) {
    const auto node = static_cast<NodeId>(rng.below(n));
    out.direct_infections.push_back({node, types.draw(rng), t});
  }
  return out;
}

// Packet checkers resident at one node, indexed by type.
class TypePresence {
 public:
  TypePresence(std::size_t node_count, std::uint32_t type_count)
      : types_(type_count), counts_(node_count * type_count, 0) {}

  void add(NodeId n, TypeId t) { ++counts_[index(n, t)]; }
  void remove(NodeId n, TypeId t) {
    auto& c = counts_[index(n, t)];
    if (c == 0) throw std::logic_error("TypePresence underflow");
    --c;
  }
  std::uint32_t count(NodeId n, TypeId t) const { return counts_[index(n, t)]; }

 private:
  std::size_t index(NodeId n, TypeId t) const {
    if (t < 1 || t > types_) throw std::invalid_argument("type out of range");
    return static_cast<std::size_t>(n) * types_ + (t - 1);
  }
  std::uint32_t types_;
  std::vector<std::uint32_t> counts_;
};

// True when the packet carries an intrusion and a packet checker of the
// matching type sits at the packet's current node.
inline bool inspect_packet(const TrafficPacket& packet, std::span<const Cell> resident) {
  if (!packet.payload) return false;
  for (const auto& c : resident)
    if (c.kind == CellKind::packet_checker && c.type == *packet.payload) return true;
  return false;
}

inline bool inspect_packet(const TrafficPacket& packet, const TypePresence& presence) {
  return packet.payload && presence.count(packet.here(), *packet.payload) > 0;
}

// Active infections with (node, type) uniqueness, plus accounting.
class InfectionRegistry {
 public:
  // Returns false when the (node, type) pair was already infected.
  bool install(const Infection& inf) {
    ++attempts_;
    auto [it, inserted] = active_.emplace(std::make_pair(inf.node, inf.intrusion), inf.installed_at);
    if (inserted) ++created_;
    return inserted;
  }

  bool infected(NodeId n, TypeId t) const { return active_.count({n, t}) > 0; }

  // Clears every infection at `node` whose type matches `type`.
  std::vector<Infection> clear_matching(NodeId node, TypeId type) {
    std::vector<Infection> found;
    auto it = active_.find({node, type});
    if (it != active_.end()) {
      found.push_back({node, type, it->second});
      active_.erase(it);
      ++cleared_;
    }
    return found;
  }

  std::vector<TypeId> types_at(NodeId node) const {
    std::vector<TypeId> out;
    for (auto it = active_.lower_bound({node, 0}); it != active_.end() && it->first.first == node; ++it)
      out.push_back(it->first.second);
    return out;
  }

  std::uint64_t created() const { return created_; }
  std::uint64_t cleared() const { return cleared_; }
  std::uint64_t active() const { return active_.size(); }
  std::uint64_t attempts() const { return attempts_; }

 private:
  std::map<std::pair<NodeId, TypeId>, std::uint64_t> active_;
  std::uint64_t created_ = 0;
  std::uint64_t cleared_ = 0;
  std::uint64_t attempts_ = 0;
};

// An undetected packet at the end of its path: an intrusion installs itself
// at the destination, clean packets just vanish.
inline std::optional<Infection> packet_delivery_outcome(const TrafficPacket& packet,
                                                        std::uint64_t t) {
  if (!packet.payload) return std::nullopt;
  return Infection{packet.destination, *packet.payload, t};
}

struct CheckEvent {
  NodeId node = 0;
  TypeId type = 1;
  std::uint64_t t = 0;
};

struct CheckResult {
  CheckEvent event;
  std::vector<Infection> cleared;
};

inline CheckResult check_node(const Cell& cell, NodeId node, InfectionRegistry& infections,
                              std::uint64_t t) {
  if (cell.kind != CellKind::node_checker) throw std::invalid_argument("check_node needs a node checker");
  if (cell.location != node) throw std::invalid_argument("check_node: cell is not at node");
  return {CheckEvent{node, cell.type, t}, infections.clear_matching(node, cell.type)};
}

}  // namespace cellnet
