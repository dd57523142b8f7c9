#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "entity.hpp"
#include "topology.hpp"

namespace cellnet {

// A flooded report of missing security. `arrival` is the link the packet
// came in on; it is empty only at the origin.
struct NotificationPacket {
  NodeId origin = 0;
  double value = 0.0;
  std::optional<LinkId> arrival;
  friend bool operator==(const NotificationPacket&, const NotificationPacket&) = default;
};

enum class MergeRule {
  own_first,   // a node's own deficiency always replaces relayed packets
  max_of_both  // whichever of own and decayed relay is larger
};

struct NotifyParams {
  double threshold = 0.0;  // relay only while decayed value > threshold
  double decrement = 1.0;  // f_d(v) = v - decrement
  MergeRule merge = MergeRule::own_first;
};

inline std::optional<NotificationPacket> emit_deficiency(NodeId node, double sec_time,
                                                         double min_sec) {
  if (min_sec > sec_time) return NotificationPacket{node, min_sec - sec_time, std::nullopt};
  return std::nullopt;
}

inline double decay(double value, double decrement = 1.0) { return value - decrement; }

// Strict ordering used to pick the single packet a node forwards: higher
// value first, then lower origin, then lower arrival link.
inline bool outranks(const NotificationPacket& x, const NotificationPacket& y) {
  if (x.value != y.value) return x.value > y.value;
  if (x.origin != y.origin) return x.origin < y.origin;
  const auto lx = x.arrival.value_or(0), ly = y.arrival.value_or(0);
  return lx < ly;
}

inline std::optional<NotificationPacket> best_of(std::span<const NotificationPacket> inbox) {
  std::optional<NotificationPacket> best;
  for (const auto& p : inbox)
    if (!best || outranks(p, *best)) best = p;
  return best;
}

struct Send {
  LinkId link = 0;
  NodeId to = 0;
  NotificationPacket packet;
};

// One node's relay decision for one timestep. Produces at most one packet
// per incident link.
inline std::vector<Send> forward_step(const Topology& topo, NodeId node,
                                      std::span<const NotificationPacket> inbox,
                                      const std::optional<NotificationPacket>& own_emission,
                                      const NotifyParams& params = {}) {
  std::optional<NotificationPacket> relayed;
  if (auto best = best_of(inbox)) {
    const double v = decay(best->value, params.decrement);
    if (v > params.threshold) relayed = NotificationPacket{best->origin, v, best->arrival};
  }

  std::optional<NotificationPacket> chosen;
  bool is_own = false;
  if (own_emission && (params.merge == MergeRule::own_first || !relayed ||
                       own_emission->value >= relayed->value)) {
    chosen = own_emission;
    is_own = true;
  } else {
    chosen = relayed;
  }
  if (!chosen) return {};

  std::vector<Send> out;
  for (const auto& adj : topo.neighbors(node)) {
    if (!is_own && chosen->arrival && *chosen->arrival == adj.link) continue;
    out.push_back({adj.link, adj.neighbor, NotificationPacket{chosen->origin, chosen->value, adj.link}});
  }
  return out;
}

struct FloodStepStats {
  std::size_t packets = 0;
  // Largest number of packets that crossed one link in one direction.
  std::size_t max_per_direction = 0;
};

// Network-wide notification state: the inboxes holding what was delivered
// during the latest step. Nothing older survives a step.
class NotificationFlood {
 public:
  explicit NotificationFlood(const Topology& topo, NotifyParams params = {})
      : topo_(&topo), params_(params), inbox_(topo.node_count()), scratch_(topo.node_count()),
        per_direction_(2 * topo.edge_count(), 0) {}

  // Every node relays what it received last step (or its own emission);
  // everything is delivered at once afterwards. `on_send` sees each packet.
  template <typename OnSend>
  FloodStepStats step(std::span<const std::optional<NotificationPacket>> emissions,
                      OnSend&& on_send) {
    FloodStepStats stats;
    for (auto& box : scratch_) box.clear();
    std::fill(per_direction_.begin(), per_direction_.end(), 0);
    for (NodeId n = 0; n < inbox_.size(); ++n) {
      const std::optional<NotificationPacket> own =
          n < emissions.size() ? emissions[n] : std::optional<NotificationPacket>{};
      if (inbox_[n].empty() && !own) continue;
      for (auto& s : forward_step(*topo_, n, inbox_[n], own, params_)) {
        const auto& c = topo_->connection(s.link);
        auto& count = per_direction_[2 * s.link + (n == c.a ? 0 : 1)];
        ++count;
        stats.max_per_direction = std::max<std::size_t>(stats.max_per_direction, count);
        ++stats.packets;
        on_send(n, s);
        scratch_[s.to].push_back(s.packet);
      }
    }
    inbox_.swap(scratch_);
    return stats;
  }

  FloodStepStats step(std::span<const std::optional<NotificationPacket>> emissions) {
    return step(emissions, [](NodeId, const Send&) {});
  }

  std::span<const NotificationPacket> inbox(NodeId n) const { return inbox_.at(n); }

  std::optional<NotificationView> best_view(NodeId n) const {
    auto b = best_of(inbox_.at(n));
    if (!b || !b->arrival) return std::nullopt;
    return NotificationView{b->value, *b->arrival};
  }

  void clear() {
    for (auto& box : inbox_) box.clear();
  }

 private:
  const Topology* topo_;
  NotifyParams params_;
  std::vector<std::vector<NotificationPacket>> inbox_;
  std::vector<std::vector<NotificationPacket>> scratch_;
  std::vector<std::uint32_t> per_direction_;
};

// Arrival step of a single emission from `origin` with value `value`, with
// the origin emitting at step 1 and never again. Nodes never reached keep
// kUnreachable; the origin itself is 0.
inline std::vector<std::uint32_t> flood_arrival_steps(const Topology& topo, NodeId origin,
                                                      double value, NotifyParams params = {}) {
  std::vector<std::uint32_t> arrival(topo.node_count(), kUnreachable);
  arrival[origin] = 0;
  NotificationFlood flood(topo, params);
  std::vector<std::optional<NotificationPacket>> emissions(topo.node_count());
  emissions[origin] = NotificationPacket{origin, value, std::nullopt};
  for (std::uint32_t t = 1;; ++t) {
    const auto stats = flood.step(emissions, [&](NodeId, const Send& s) {
      if (arrival[s.to] == kUnreachable) arrival[s.to] = t;
    });
    emissions[origin].reset();
    if (stats.packets == 0) break;
  }
  return arrival;
}

}  // namespace cellnet
