#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "entity.hpp"
#include "metrics.hpp"
#include "notify.hpp"
#include "rng.hpp"
#include "threat.hpp"
#include "topology.hpp"
#include "trails.hpp"

namespace cellnet {

// Raised for invalid configurations; `key()` names the offending setting.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::invalid_argument(key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

enum class StrategyKind { uninformed, centralized, protocols };

struct Strategy {
  StrategyKind kind = StrategyKind::protocols;
  bool notification = true;
  bool trails = true;

  static Strategy uninformed() { return {StrategyKind::uninformed, false, false}; }
  static Strategy centralized() { return {StrategyKind::centralized, false, false}; }
  static Strategy protocols(bool notification, bool trails) {
    return {StrategyKind::protocols, notification, trails};
  }

  // "uninformed", "centralized", "notification", "trails" or "protocols".
  static std::optional<Strategy> parse(std::string_view name) {
    if (name == "uninformed") return uninformed();
    if (name == "centralized") return centralized();
    if (name == "notification") return protocols(true, false);
    if (name == "trails") return protocols(false, true);
    if (name == "protocols") return protocols(true, true);
    return std::nullopt;
  }

  std::string name() const {
    switch (kind) {
      case StrategyKind::uninformed: return "uninformed";
      case StrategyKind::centralized: return "centralized";
      case StrategyKind::protocols:
        if (notification && trails) return "protocols";
        if (notification) return "notification";
        if (trails) return "trails";
        return "uninformed";
    }
    return "unknown";
  }

  bool uses_notification() const { return kind == StrategyKind::protocols && notification; }
  bool uses_trails() const { return kind == StrategyKind::protocols && trails; }
};

// How the pinning rule reads a node's deficiency during movement.
enum class Pinning {
  // A packet checker stays when the node would be short of min_sec without
  // it, counting departures already decided this step.
  departure_aware,
  // A packet checker stays only when the node was short at the start of
  // the step.
  current,
};

enum class BridgeRemedy { none, uniform, steep_decay };

struct SimulationConfig {
  TopologyConfig topology{};
  // Use this topology instead of generating one.
  std::shared_ptr<const Topology> topology_override;
  // Derive the topology seed from the master seed instead of topology.seed.
  bool topology_seed_from_master = true;

  std::uint32_t type_count = 60;
  std::uint32_t packet_checkers_per_type = 70;
  std::uint32_t node_checkers_per_type = 1;
  double sec_value = 1.0;
  double min_sec = 20.0;
  std::map<NodeRole, double> min_sec_by_role;

  MovementParams movement{};
  TrailParams trails{};
  NotifyParams notify{};
  TrafficConfig traffic{};
  Strategy strategy{};
  Pinning pinning = Pinning::departure_aware;
  BridgeRemedy bridge_remedy = BridgeRemedy::none;
  double bridge_decay = 20.0;  // c3 on bridge endpoints with steep_decay

  // Start every node checker inside this fragment instead of spreading them.
  std::optional<std::uint32_t> node_checker_fragment;
  // Coverage window; default 4 * node_count / node_checkers_per_type.
  std::optional<double> coverage_window;

  std::uint32_t duration = 1000;
  std::uint64_t seed = 1;
};

inline double min_sec_for(const SimulationConfig& c, NodeRole role) {
  auto it = c.min_sec_by_role.find(role);
  return it == c.min_sec_by_role.end() ? c.min_sec : it->second;
}

inline void validate(const SimulationConfig& c) {
  if (c.duration < 1) throw ConfigError("duration", "must be at least 1");
  if (c.type_count < 1) throw ConfigError("type_count", "must be at least 1");
  if (!(c.sec_value >= 0.0)) throw ConfigError("sec_value", "must be >= 0");
  if (!(c.min_sec >= 0.0)) throw ConfigError("min_sec", "must be >= 0");
  for (const auto& [role, v] : c.min_sec_by_role)
    if (!(v >= 0.0)) throw ConfigError("min_sec_by_role." + std::string(to_string(role)), "must be >= 0");
  if (!c.topology_override) {
    try {
      validate(c.topology);
    } catch (const TopologyError& e) {
      throw ConfigError("topology", e.what());
    }
  }
  try {
    validate(c.movement);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("movement", e.what());
  }
  try {
    validate(c.trails);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("trails", e.what());
  }
  try {
    validate(c.traffic);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("traffic", e.what());
  }
  if (c.strategy.kind != StrategyKind::protocols && (c.strategy.notification || c.strategy.trails))
    throw ConfigError("strategy", "only the protocols strategy may enable notification or trails");
  if (!(c.notify.decrement > 0.0)) throw ConfigError("notify.decrement", "must be positive");
  if (!(c.notify.threshold >= 0.0)) throw ConfigError("notify.threshold", "must be >= 0");
  if (!(c.bridge_decay > 0.0)) throw ConfigError("bridge_decay", "must be positive");
  if (c.coverage_window && !(*c.coverage_window >= 1.0))
    throw ConfigError("coverage_window", "must be at least 1");
}

// A packet checker relocated by the central manager.
struct Assignment {
  CellId cell = 0;
  NodeId from = 0;
  NodeId to = 0;
};

struct CentralizedResult {
  std::vector<Assignment> moves;
  std::uint64_t bandwidth = 0;
};

// Greedy rebalance with global knowledge: repeatedly take a packet checker
// from the node with the largest surplus and place it at the node with the
// largest deficit (ties to the lower node id), until one side runs out.
// Each move costs 2 * hop distance (status report plus command).
// `resident[n]` lists the packet checkers at n; it is updated in place.
template <typename Distance>
CentralizedResult centralized_assign(std::vector<std::vector<CellId>>& resident,
                                     const std::vector<double>& sec_value_of,
                                     const std::vector<double>& min_sec, Distance&& distance) {
  const std::size_t n = resident.size();
  std::vector<double> sec(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (CellId c : resident[i]) sec[i] += sec_value_of[c];

  CentralizedResult out;
  for (;;) {
    std::optional<std::size_t> needy, donor;
    for (std::size_t i = 0; i < n; ++i) {
      const double deficit = min_sec[i] - sec[i];
      if (deficit > 0 && (!needy || deficit > min_sec[*needy] - sec[*needy])) needy = i;
    }
    if (!needy) break;
    for (std::size_t i = 0; i < n; ++i) {
      if (resident[i].empty()) continue;
      const double surplus = sec[i] - min_sec[i];
      // The donor must stay sufficient after giving up its cheapest cell.
      const CellId c = resident[i].front();
      if (surplus < sec_value_of[c] || sec_value_of[c] <= 0.0) continue;
      if (!donor || surplus > sec[*donor] - min_sec[*donor]) donor = i;
    }
    if (!donor) break;
    const CellId c = resident[*donor].front();
    resident[*donor].erase(resident[*donor].begin());
    auto& dst = resident[*needy];
    dst.insert(std::upper_bound(dst.begin(), dst.end(), c), c);
    sec[*donor] -= sec_value_of[c];
    sec[*needy] += sec_value_of[c];
    out.moves.push_back({c, static_cast<NodeId>(*donor), static_cast<NodeId>(*needy)});
    out.bandwidth += 2 * static_cast<std::uint64_t>(distance(*donor, *needy));
  }
  return out;
}

// Optional per-step observers for verbose output.
struct TraceSinks {
  // (t, node, link, type, value) for every nonzero trail entry.
  std::function<void(std::uint64_t, NodeId, LinkId, TypeId, double)> trail;
  // (t, packet, fate) when a packet leaves the network.
  std::function<void(std::uint64_t, const TrafficPacket&, std::string_view)> traffic;
};

class Simulation {
 public:
  explicit Simulation(SimulationConfig cfg, TraceSinks sinks = {})
      : cfg_(std::move(cfg)), sinks_(std::move(sinks)) {
    validate(cfg_);
    if (cfg_.topology_override) {
      topo_ = cfg_.topology_override;
    } else {
      TopologyConfig tc = cfg_.topology;
      if (cfg_.topology_seed_from_master) tc.seed = Rng::derive(cfg_.seed, Stream::topology, 0);
      topo_ = std::make_shared<const Topology>(generate_topology(tc));
    }
    const Topology& topo = *topo_;
    const std::size_t n = topo.node_count();
    if (n == 0) throw ConfigError("topology", "empty topology");
    if (cfg_.node_checker_fragment && *cfg_.node_checker_fragment >= topo.fragment_count())
      throw ConfigError("node_checker_fragment", "no such fragment");

    min_sec_.resize(n);
    for (NodeId i = 0; i < n; ++i) min_sec_[i] = min_sec_for(cfg_, topo.role(i));

    place_cells();

    flood_.emplace(topo, cfg_.notify);
    trails_.emplace(topo, cfg_.type_count, cfg_.trails);
    for (LinkId b : topo.bridges()) {
      const auto& c = topo.connection(b);
      for (NodeId end : {c.a, c.b}) {
        if (cfg_.bridge_remedy == BridgeRemedy::uniform) trails_->set_bridge_fallback(end, true);
        if (cfg_.bridge_remedy == BridgeRemedy::steep_decay)
          trails_->set_decay_override(end, cfg_.bridge_decay);
      }
    }

    const double window = cfg_.coverage_window.value_or(
        cfg_.node_checkers_per_type == 0
            ? static_cast<double>(cfg_.duration)
            : 4.0 * static_cast<double>(n) / cfg_.node_checkers_per_type);
    report_ = MetricsReport(n, cfg_.type_count, topo.edge_count());
    report_.strategy = cfg_.strategy.name();
    report_.seed = cfg_.seed;
    report_.duration = cfg_.duration;
    report_.coverage_window = window;
    report_.redundant_min_gap = window / 4.0;
    report_.node_fragment.resize(n);
    for (NodeId i = 0; i < n; ++i) report_.node_fragment[i] = topo.fragment_of(i);
    for (TypeId t = 1; t <= cfg_.type_count; ++t)
      if (node_checkers_of_type(t) > 0) report_.checked_types.push_back(t);

    types_.emplace(cfg_.type_count, cfg_.traffic.type_skew);
    routes_.emplace(topo);
    movement_rng_.emplace(cfg_.seed, Stream::movement);
    selection_rng_.emplace(cfg_.seed, Stream::selection);
  }

  const Topology& topology() const { return *topo_; }
  const std::vector<Cell>& cells() const { return cells_; }
  const TrailTable& trails() const { return *trails_; }
  const NotificationFlood& notifications() const { return *flood_; }
  const InfectionRegistry& infections() const { return infections_; }
  const MetricsReport& report() const { return report_; }
  const std::vector<TrafficPacket>& packets_in_flight() const { return in_flight_; }
  double node_sec(NodeId n) const { return sec_.at(n); }
  double min_sec(NodeId n) const { return min_sec_.at(n); }
  std::uint64_t time() const { return t_; }
  bool done() const { return t_ >= cfg_.duration; }

  // Advances one timestep through the fixed phase order.
  void step() {
    if (done()) throw std::logic_error("simulation already finished");
    ++t_;
    StepRow row;
    row.t = t_;
    traffic_phase(row);
    check_phase(row);
    const auto emissions = deficiency_phase(row);
    relay_phase(emissions, row);
    if (cfg_.strategy.uses_trails()) trails_->decay_all();
    if (sinks_.trail) dump_trails();
    movement_phase();
    accumulate(row);
  }

  MetricsReport run() {
    while (!done()) step();
    return report_;
  }

  std::size_t node_checkers_of_type(TypeId) const { return cfg_.node_checkers_per_type; }

 private:
  void place_cells() {
    const Topology& topo = *topo_;
    const std::size_t n = topo.node_count();
    sec_.assign(n, 0.0);
    count_.assign(n, 0);
    presence_.emplace(n, cfg_.type_count);

    std::vector<NodeId> checker_nodes;
    if (cfg_.node_checker_fragment) {
      for (NodeId i = 0; i < n; ++i)
        if (topo.fragment_of(i) == *cfg_.node_checker_fragment) checker_nodes.push_back(i);
    }

    CellId id = 0;
    for (TypeId t = 1; t <= cfg_.type_count; ++t) {
      for (std::uint32_t k = 0; k < cfg_.packet_checkers_per_type; ++k, ++id)
        cells_.push_back({id, t, CellKind::packet_checker, static_cast<NodeId>(id % n), cfg_.sec_value});
    }
    std::size_t nc_index = 0;
    for (TypeId t = 1; t <= cfg_.type_count; ++t) {
      for (std::uint32_t k = 0; k < cfg_.node_checkers_per_type; ++k, ++id, ++nc_index) {
        const NodeId at = checker_nodes.empty() ? static_cast<NodeId>(id % n)
                                                : checker_nodes[nc_index % checker_nodes.size()];
        cells_.push_back({id, t, CellKind::node_checker, at, 0.0});
      }
    }
    for (const auto& c : cells_) arrive(c);
  }

  void arrive(const Cell& c) {
    ++count_[c.location];
    if (c.kind == CellKind::packet_checker) {
      sec_[c.location] += c.sec_value;
      presence_->add(c.location, c.type);
    }
  }

  void depart(const Cell& c) {
    --count_[c.location];
    if (c.kind == CellKind::packet_checker) {
      sec_[c.location] -= c.sec_value;
      presence_->remove(c.location, c.type);
    }
  }

  void traffic_phase(StepRow& row) {
    auto threats = generate_traffic(cfg_.traffic, *topo_, *types_, *routes_, cfg_.seed, t_, next_packet_);
    next_packet_ += threats.packets.size();
    for (auto& p : in_flight_) ++p.position;
    for (auto& p : threats.packets) {
      ++report_.packets_generated;
      if (p.payload) ++report_.introduced;
      in_flight_.push_back(std::move(p));
    }
    std::vector<TrafficPacket> still;
    still.reserve(in_flight_.size());
    for (auto& p : in_flight_) {
      if (inspect_packet(p, *presence_)) {
        ++report_.detected;
        trace(p, "detected");
      } else if (p.at_destination()) {
        if (auto inf = packet_delivery_outcome(p, t_)) {
          ++report_.delivered_intrusions;
          infections_.install(*inf);
          trace(p, "infected");
        } else {
          trace(p, "delivered");
        }
      } else {
        still.push_back(std::move(p));
      }
    }
    in_flight_.swap(still);
    for (const auto& inf : threats.direct_infections) infections_.install(inf);
    row.detections_cum = report_.detected;
    row.introduced_cum = report_.introduced;
  }

  void trace(const TrafficPacket& p, std::string_view fate) {
    if (sinks_.traffic) sinks_.traffic(t_, p, fate);
  }

  void check_phase(StepRow& row) {
    for (const auto& c : cells_) {
      if (c.kind != CellKind::node_checker) continue;
      auto result = check_node(c, c.location, infections_, t_);
      if (report_.record_check(result.event)) ++row.redundant_checks;
      ++row.checks;
    }
  }

  std::vector<std::optional<NotificationPacket>> deficiency_phase(StepRow& row) {
    const std::size_t n = topo_->node_count();
    std::vector<std::optional<NotificationPacket>> emissions(n);
    for (NodeId i = 0; i < n; ++i) {
      if (sec_[i] < min_sec_[i]) ++row.deficient_nodes;
      if (cfg_.strategy.uses_notification()) emissions[i] = emit_deficiency(i, sec_[i], min_sec_[i]);
    }
    return emissions;
  }

  void relay_phase(const std::vector<std::optional<NotificationPacket>>& emissions, StepRow& row) {
    best_.assign(topo_->node_count(), std::nullopt);
    if (!cfg_.strategy.uses_notification()) return;
    const auto stats = flood_->step(emissions, [&](NodeId, const Send& s) {
      ++report_.notifications_per_link[s.link];
    });
    row.notification_packets = stats.packets;
    report_.notification_packets += stats.packets;
    report_.max_notifications_per_link_direction =
        std::max<std::uint64_t>(report_.max_notifications_per_link_direction, stats.max_per_direction);
    for (NodeId i = 0; i < topo_->node_count(); ++i) best_[i] = flood_->best_view(i);
  }

  void movement_phase() {
    const Topology& topo = *topo_;
    std::vector<std::pair<CellId, NodeId>> moves;

    if (cfg_.strategy.kind == StrategyKind::centralized) {
      std::vector<std::vector<CellId>> resident(topo.node_count());
      std::vector<double> value(cells_.size(), 0.0);
      for (const auto& c : cells_) {
        if (c.kind != CellKind::packet_checker) continue;
        resident[c.location].push_back(c.id);
        value[c.id] = c.sec_value;
      }
      auto result = centralized_assign(resident, value, min_sec_,
                                       [&](std::size_t a, std::size_t b) { return distance(a, b); });
      report_.centralized_moves += result.moves.size();
      report_.centralized_bandwidth += result.bandwidth;
      for (const auto& m : result.moves) moves.emplace_back(m.cell, m.to);
    }

    std::vector<double> remaining = sec_;
    Rng& rng = *movement_rng_;
    const auto uniform = [&](NodeId here, TypeId, Rng& r) { return uniform_next_hop(topo, here, r); };
    const auto trail_guided = [&](NodeId here, TypeId type, Rng& r) {
      return trails_->select_next_hop(here, type, r);
    };

    for (const auto& c : cells_) {
      const NodeId here = c.location;
      if (topo.degree(here) == 0) continue;
      std::optional<LinkId> link;
      if (c.kind == CellKind::packet_checker) {
        switch (cfg_.strategy.kind) {
          case StrategyKind::centralized:
            break;
          case StrategyKind::uninformed:
            if (rng.bernoulli(cfg_.movement.p_base)) link = uniform_next_hop(topo, here, rng);
            break;
          case StrategyKind::protocols:
            if (cfg_.strategy.notification) {
              const double after = cfg_.pinning == Pinning::departure_aware ? remaining[here] - c.sec_value
                                                                             : sec_[here];
              const double lacking = std::max(0.0, min_sec_[here] - after);
              auto d = decide_move(c, topo, cfg_.movement, here, lacking, best_[here], uniform, rng);
              if (auto* m = std::get_if<MoveAlong>(&d)) link = m->link;
            } else if (rng.bernoulli(cfg_.movement.p_base)) {
              link = uniform_next_hop(topo, here, rng);
            }
            break;
        }
        if (link) remaining[here] -= c.sec_value;
      } else {
        MoveDecision d = cfg_.strategy.uses_trails()
                             ? decide_move(c, topo, cfg_.movement, here, 0.0, std::nullopt, trail_guided,
                                           *selection_rng_)
                             : decide_move(c, topo, cfg_.movement, here, 0.0, std::nullopt, uniform,
                                           *selection_rng_);
        if (auto* m = std::get_if<MoveAlong>(&d)) {
          link = m->link;
          if (cfg_.strategy.uses_trails()) {
            trails_->record_traversal(here, *link, c.type);
            if (cfg_.trails.mark_arrival)
              trails_->record_traversal(topo.connection(*link).other(here), *link, c.type);
          }
        }
      }
      if (link) moves.emplace_back(c.id, topo.connection(*link).other(here));
    }

    for (auto [id, to] : moves) depart(cells_[id]);
    for (auto [id, to] : moves) {
      cells_[id].location = to;
      arrive(cells_[id]);
    }
  }

  void accumulate(StepRow& row) {
    const auto [lo, hi] = std::minmax_element(count_.begin(), count_.end());
    row.min_cells_per_node = *lo;
    row.max_cells_per_node = *hi;
    report_.infections_created = infections_.created();
    report_.infections_cleared = infections_.cleared();
    report_.infections_active = infections_.active();
    report_.add_step(row, count_);
  }

  std::uint32_t distance(std::size_t a, std::size_t b) {
    auto it = dist_rows_.find(static_cast<NodeId>(a));
    if (it == dist_rows_.end())
      it = dist_rows_.emplace(static_cast<NodeId>(a), topo_->bfs_distances(static_cast<NodeId>(a))).first;
    return it->second[b];
  }

  void dump_trails() {
    trails_->for_each([&](NodeId n, LinkId l, TypeId t, double v) {
      if (v > 0.0) sinks_.trail(t_, n, l, t, v);
    });
  }

  SimulationConfig cfg_;
  TraceSinks sinks_;
  std::shared_ptr<const Topology> topo_;
  std::vector<Cell> cells_;
  std::vector<double> sec_;
  std::vector<std::uint32_t> count_;
  std::vector<double> min_sec_;
  std::optional<TypePresence> presence_;
  std::optional<NotificationFlood> flood_;
  std::optional<TrailTable> trails_;
  std::vector<std::optional<NotificationView>> best_;
  InfectionRegistry infections_;
  std::vector<TrafficPacket> in_flight_;
  std::uint64_t next_packet_ = 0;
  std::optional<TypeSampler> types_;
  std::optional<RouteCache> routes_;
  std::optional<Rng> movement_rng_;
  std::optional<Rng> selection_rng_;
  std::map<NodeId, std::vector<std::uint32_t>> dist_rows_;
  MetricsReport report_;
  std::uint64_t t_ = 0;
};

inline MetricsReport run(const SimulationConfig& cfg, TraceSinks sinks = {}) {
  Simulation sim(cfg, std::move(sinks));
  return sim.run();
}

}  // namespace cellnet
