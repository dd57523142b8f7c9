#pragma once

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <variant>

#include "rng.hpp"
#include "topology.hpp"

namespace cellnet {

// Cell types and intrusion types share the index space 1..K.
using TypeId = std::uint32_t;
using CellId = std::uint32_t;

enum class CellKind { packet_checker, node_checker };

inline std::string_view to_string(CellKind k) {
  return k == CellKind::packet_checker ? "packet_checker" : "node_checker";
}

// Clamped-linear response: p_base at zero lack, rising by alpha per unit of
// missing security, capped at p_max.
struct MovementParams {
  double p_base = 0.1;
  double alpha = 0.05;
  double p_max = 0.8;
};

inline void validate(const MovementParams& p) {
  if (!(p.p_base >= 0.0 && p.p_base <= p.p_max && p.p_max <= 1.0))
    throw std::invalid_argument("movement params require 0 <= p_base <= p_max <= 1");
  if (!(p.alpha >= 0.0)) throw std::invalid_argument("movement alpha must be >= 0");
}

struct Cell {
  CellId id = 0;
  TypeId type = 1;
  CellKind kind = CellKind::packet_checker;
  NodeId location = 0;
  double sec_value = 1.0;
};

inline double node_security(std::span<const Cell> resident) {
  double sum = 0.0;
  for (const auto& c : resident)
    if (c.kind == CellKind::packet_checker) sum += c.sec_value;
  return sum;
}

inline double movement_probability(const MovementParams& p, double lacking) {
  if (!(lacking >= 0.0)) throw std::invalid_argument("lacking security must be >= 0");
  return std::min(p.p_base + p.alpha * lacking, p.p_max);
}

// What a cell sees of the strongest notification delivered to its node.
struct NotificationView {
  double value = 0.0;
  LinkId arrival = 0;
};

struct Stay {
  friend bool operator==(const Stay&, const Stay&) = default;
};
struct MoveAlong {
  LinkId link = 0;
  friend bool operator==(const MoveAlong&, const MoveAlong&) = default;
};
using MoveDecision = std::variant<Stay, MoveAlong>;

inline bool is_stay(const MoveDecision& d) { return std::holds_alternative<Stay>(d); }

// Uniform neighbor choice, the default destination function.
inline LinkId uniform_next_hop(const Topology& topo, NodeId here, Rng& rng) {
  const auto& adj = topo.neighbors(here);
  return adj[rng.below(adj.size())].link;
}

// Packet-checker movement. Stays pinned while `here_lacking` > 0; otherwise
// fires with probability f_m(v) where v is the best notification value, and
// heads back along the notification's arrival link if there is one.
inline MoveDecision decide_packet_checker_move(const Topology& topo, const MovementParams& params,
                                               NodeId here, double here_lacking,
                                               const std::optional<NotificationView>& best,
                                               Rng& rng) {
  if (here_lacking > 0.0) return Stay{};
  if (topo.degree(here) == 0) return Stay{};
  const double v = best ? best->value : 0.0;
  if (!rng.bernoulli(movement_probability(params, v))) return Stay{};
  if (best) return MoveAlong{best->arrival};
  return MoveAlong{uniform_next_hop(topo, here, rng)};
}

// Chooses the outgoing link for a node checker that has finished its check.
// Implemented by the trails protocol or by uniform choice.
template <typename F>
concept NextHopSelector = requires(F f, NodeId n, TypeId t, Rng& r) {
  { f(n, t, r) } -> std::convertible_to<LinkId>;
};

template <NextHopSelector Select>
MoveDecision decide_move(const Cell& cell, const Topology& topo, const MovementParams& params,
                         NodeId here, double here_lacking,
                         const std::optional<NotificationView>& best, Select&& select_hop,
                         Rng& rng) {
  if (cell.location != here) throw std::invalid_argument("decide_move: cell is not at `here`");
  if (topo.degree(here) == 0) return Stay{};
  if (cell.kind == CellKind::packet_checker)
    return decide_packet_checker_move(topo, params, here, here_lacking, best, rng);
  return MoveAlong{static_cast<LinkId>(select_hop(here, cell.type, rng))};
}

}  // namespace cellnet
