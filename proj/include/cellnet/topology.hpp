#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rng.hpp"

namespace cellnet {

using NodeId = std::uint32_t;
using LinkId = std::uint32_t;

inline constexpr std::uint32_t kUnreachable = std::numeric_limits<std::uint32_t>::max();

enum class NodeRole { workstation, server, router, gateway };

inline std::string_view to_string(NodeRole role) {
  switch (role) {
    case NodeRole::workstation: return "workstation";
    case NodeRole::server: return "server";
    case NodeRole::router: return "router";
    case NodeRole::gateway: return "gateway";
  }
  return "unknown";
}

inline std::optional<NodeRole> parse_role(std::string_view s) {
  if (s == "workstation") return NodeRole::workstation;
  if (s == "server") return NodeRole::server;
  if (s == "router") return NodeRole::router;
  if (s == "gateway") return NodeRole::gateway;
  return std::nullopt;
}

// Undirected link. Endpoints are stored with a < b.
struct Connection {
  LinkId id = 0;
  NodeId a = 0;
  NodeId b = 0;

  NodeId other(NodeId n) const { return n == a ? b : a; }
  bool touches(NodeId n) const { return n == a || n == b; }
  friend bool operator==(const Connection&, const Connection&) = default;
};

struct Adjacent {
  LinkId link = 0;
  NodeId neighbor = 0;
  friend bool operator==(const Adjacent&, const Adjacent&) = default;
};

class TopologyError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class Topology {
 public:
  Topology() = default;

  // Builds a topology from explicit roles and edges. Edges are canonicalized
  // (a < b) and sorted; link ids are their positions in that order.
  static Topology from_edges(std::vector<NodeRole> roles,
                             std::vector<std::pair<NodeId, NodeId>> edges,
                             std::vector<std::pair<NodeId, NodeId>> bridges = {},
                             std::vector<std::uint32_t> fragment_of = {}) {
    Topology t;
    t.roles_ = std::move(roles);
    const auto n = static_cast<NodeId>(t.roles_.size());
    for (auto& [u, v] : edges) {
      if (u >= n || v >= n) throw TopologyError("edge endpoint out of range");
      if (u == v) throw TopologyError("self-loop on node " + std::to_string(u));
      if (u > v) std::swap(u, v);
    }
    std::sort(edges.begin(), edges.end());
    if (std::adjacent_find(edges.begin(), edges.end()) != edges.end())
      throw TopologyError("duplicate edge");
    t.edges_.reserve(edges.size());
    t.adjacency_.assign(n, {});
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const Connection c{static_cast<LinkId>(i), edges[i].first, edges[i].second};
      t.edges_.push_back(c);
      t.adjacency_[c.a].push_back({c.id, c.b});
      t.adjacency_[c.b].push_back({c.id, c.a});
    }
    for (auto& adj : t.adjacency_) {
      std::sort(adj.begin(), adj.end(),
                [](const Adjacent& x, const Adjacent& y) { return x.neighbor < y.neighbor; });
    }
    for (auto [u, v] : bridges) {
      auto link = t.find_link(u, v);
      if (!link) throw TopologyError("bridge is not an edge");
      t.bridges_.push_back(*link);
    }
    std::sort(t.bridges_.begin(), t.bridges_.end());
    if (fragment_of.empty()) fragment_of.assign(n, 0);
    if (fragment_of.size() != n) throw TopologyError("fragment map size mismatch");
    t.fragment_of_ = std::move(fragment_of);
    return t;
  }

  std::size_t node_count() const { return roles_.size(); }
  std::size_t edge_count() const { return edges_.size(); }

  NodeRole role(NodeId n) const {
    check(n);
    return roles_[n];
  }
  const std::vector<NodeRole>& roles() const { return roles_; }
  const std::vector<Connection>& edges() const { return edges_; }
  const Connection& connection(LinkId id) const { return edges_.at(id); }

  // Ordered by neighbor id ascending.
  const std::vector<Adjacent>& neighbors(NodeId n) const {
    check(n);
    return adjacency_[n];
  }
  std::size_t degree(NodeId n) const { return neighbors(n).size(); }

  std::optional<LinkId> find_link(NodeId u, NodeId v) const {
    check(u);
    check(v);
    for (const auto& adj : adjacency_[u])
      if (adj.neighbor == v) return adj.link;
    return std::nullopt;
  }

  // Position of a link within a node's neighbor list.
  std::optional<std::size_t> local_index(NodeId n, LinkId link) const {
    const auto& adj = neighbors(n);
    for (std::size_t i = 0; i < adj.size(); ++i)
      if (adj[i].link == link) return i;
    return std::nullopt;
  }

  const std::vector<LinkId>& bridges() const { return bridges_; }
  std::uint32_t fragment_of(NodeId n) const {
    check(n);
    return fragment_of_[n];
  }
  std::uint32_t fragment_count() const {
    if (fragment_of_.empty()) return 0;
    return *std::max_element(fragment_of_.begin(), fragment_of_.end()) + 1;
  }

  std::vector<NodeId> nodes_with_role(NodeRole r) const {
    std::vector<NodeId> out;
    for (NodeId i = 0; i < roles_.size(); ++i)
      if (roles_[i] == r) out.push_back(i);
    return out;
  }

  // Hop distances from `source`; kUnreachable where disconnected.
  std::vector<std::uint32_t> bfs_distances(NodeId source) const {
    check(source);
    std::vector<std::uint32_t> dist(node_count(), kUnreachable);
    std::queue<NodeId> q;
    dist[source] = 0;
    q.push(source);
    while (!q.empty()) {
      const NodeId u = q.front();
      q.pop();
      for (const auto& adj : adjacency_[u]) {
        if (dist[adj.neighbor] == kUnreachable) {
          dist[adj.neighbor] = dist[u] + 1;
          q.push(adj.neighbor);
        }
      }
    }
    return dist;
  }

  // Shortest path from `from` to `to`; among equal-length paths, each hop
  // goes to the lowest-id neighbor that is one step closer.
  std::vector<NodeId> shortest_path(NodeId from, NodeId to) const {
    return shortest_path(from, to, bfs_distances(to));
  }

  std::vector<NodeId> shortest_path(NodeId from, NodeId to,
                                    const std::vector<std::uint32_t>& dist_to) const {
    check(from);
    check(to);
    if (dist_to[from] == kUnreachable) return {};
    std::vector<NodeId> path{from};
    NodeId cur = from;
    while (cur != to) {
      for (const auto& adj : adjacency_[cur]) {
        if (dist_to[adj.neighbor] + 1 == dist_to[cur]) {
          cur = adj.neighbor;
          break;
        }
      }
      path.push_back(cur);
    }
    return path;
  }

  // Component label per node, ignoring the links in `removed`.
  std::vector<std::uint32_t> components(const std::vector<LinkId>& removed = {}) const {
    std::vector<bool> skip(edges_.size(), false);
    for (auto l : removed) skip.at(l) = true;
    std::vector<std::uint32_t> label(node_count(), kUnreachable);
    std::uint32_t next = 0;
    for (NodeId s = 0; s < node_count(); ++s) {
      if (label[s] != kUnreachable) continue;
      std::vector<NodeId> stack{s};
      label[s] = next;
      while (!stack.empty()) {
        const NodeId u = stack.back();
        stack.pop_back();
        for (const auto& adj : adjacency_[u]) {
          if (skip[adj.link] || label[adj.neighbor] != kUnreachable) continue;
          label[adj.neighbor] = next;
          stack.push_back(adj.neighbor);
        }
      }
      ++next;
    }
    return label;
  }

  std::size_t component_count(const std::vector<LinkId>& removed = {}) const {
    const auto label = components(removed);
    if (label.empty()) return 0;
    return *std::max_element(label.begin(), label.end()) + 1;
  }

 private:
  void check(NodeId n) const {
    if (n >= roles_.size()) throw TopologyError("unknown node " + std::to_string(n));
  }

  std::vector<NodeRole> roles_;
  std::vector<Connection> edges_;
  std::vector<std::vector<Adjacent>> adjacency_;
  std::vector<LinkId> bridges_;
  std::vector<std::uint32_t> fragment_of_;
};

inline const std::vector<Adjacent>& neighbors(const Topology& t, NodeId n) { return t.neighbors(n); }

struct RoleMix {
  double workstation = 0.70;
  double server = 0.15;
  double router = 0.14;
  double gateway = 0.01;
};

struct TopologyConfig {
  std::uint32_t node_count = 200;
  std::uint32_t fragment_count = 1;
  std::uint32_t bridges_per_fragment_pair = 1;
  RoleMix role_mix{};
  // Exactly this many gateways regardless of role_mix.gateway (which only
  // counts toward the fractions summing to one).
  std::uint32_t gateway_count = 1;
  // 0: every workstation/server hangs off one router. k >= 1: they are
  // chained into segments of up to k nodes whose two ends attach to routers.
  std::uint32_t segment_length = 0;
  std::uint64_t seed = 1;
};

struct RoleCounts {
  std::uint32_t gateways = 0;
  std::uint32_t routers = 0;
  std::uint32_t servers = 0;
  std::uint32_t workstations = 0;
};

inline void validate(const TopologyConfig& c) {
  const auto& m = c.role_mix;
  for (double f : {m.workstation, m.server, m.router, m.gateway})
    if (!(f >= 0.0 && f <= 1.0)) throw TopologyError("role fraction outside [0,1]");
  if (std::abs(m.workstation + m.server + m.router + m.gateway - 1.0) > 1e-9)
    throw TopologyError("role fractions must sum to 1");
  if (c.node_count < 2) throw TopologyError("node_count must be at least 2");
  if (c.fragment_count < 1) throw TopologyError("fragment_count must be at least 1");
  if (c.fragment_count > c.node_count) throw TopologyError("fragment_count exceeds node_count");
  if (c.fragment_count > 1 && c.bridges_per_fragment_pair < 1)
    throw TopologyError("bridges_per_fragment_pair must be at least 1");
  if (c.node_count < c.gateway_count + c.fragment_count)
    throw TopologyError("node_count too small for one router per fragment plus gateways");
}

inline RoleCounts role_counts(const TopologyConfig& c) {
  validate(c);
  RoleCounts rc;
  rc.gateways = c.gateway_count;
  const std::uint32_t rest = c.node_count - rc.gateways;
  const auto want_routers =
      static_cast<std::uint32_t>(std::llround(c.role_mix.router * c.node_count));
  rc.routers = std::clamp(want_routers, c.fragment_count, rest);
  const std::uint32_t leaves = rest - rc.routers;
  const auto want_servers =
      static_cast<std::uint32_t>(std::llround(c.role_mix.server * c.node_count));
  rc.servers = std::min(want_servers, leaves);
  rc.workstations = leaves - rc.servers;
  return rc;
}

// Ids: routers first, then gateways, servers, workstations. Routers form a
// random recursive tree inside each fragment; every other node hangs off a
// router of its fragment, directly or as part of a dual-homed segment.
// Consecutive fragments are joined by bridge edges between routers.
inline Topology generate_topology(const TopologyConfig& c) {
  const RoleCounts rc = role_counts(c);
  const std::uint32_t frags = c.fragment_count;
  Rng rng(c.seed, Stream::topology);

  std::vector<NodeRole> roles;
  roles.reserve(c.node_count);
  roles.insert(roles.end(), rc.routers, NodeRole::router);
  roles.insert(roles.end(), rc.gateways, NodeRole::gateway);
  roles.insert(roles.end(), rc.servers, NodeRole::server);
  roles.insert(roles.end(), rc.workstations, NodeRole::workstation);

  std::vector<std::uint32_t> fragment(c.node_count, 0);
  std::vector<std::vector<NodeId>> routers_in(frags);
  for (NodeId r = 0; r < rc.routers; ++r) {
    fragment[r] = r % frags;
    routers_in[r % frags].push_back(r);
  }

  std::vector<std::pair<NodeId, NodeId>> edges;
  for (const auto& rs : routers_in) {
    for (std::size_t i = 1; i < rs.size(); ++i) edges.emplace_back(rs[rng.below(i)], rs[i]);
  }

  const NodeId first_gateway = rc.routers;
  for (NodeId g = first_gateway; g < first_gateway + rc.gateways; ++g) {
    const auto& rs = routers_in[0];
    fragment[g] = 0;
    edges.emplace_back(rs[rng.below(rs.size())], g);
  }
  const NodeId first_leaf = first_gateway + rc.gateways;
  for (NodeId n = first_leaf; n < c.node_count; ++n) fragment[n] = (n - first_leaf) % frags;
  if (c.segment_length == 0) {
    for (NodeId n = first_leaf; n < c.node_count; ++n) {
      const auto& rs = routers_in[fragment[n]];
      edges.emplace_back(rs[rng.below(rs.size())], n);
    }
  } else {
    for (std::uint32_t f = 0; f < frags; ++f) {
      const auto& rs = routers_in[f];
      std::vector<NodeId> leaves;
      for (NodeId n = first_leaf; n < c.node_count; ++n)
        if (fragment[n] == f) leaves.push_back(n);
      for (std::size_t i = 0; i < leaves.size(); i += c.segment_length) {
        const std::size_t end = std::min<std::size_t>(leaves.size(), i + c.segment_length);
        for (std::size_t j = i + 1; j < end; ++j) edges.emplace_back(leaves[j - 1], leaves[j]);
        const NodeId head = rs[rng.below(rs.size())];
        const NodeId tail = rs[rng.below(rs.size())];
        edges.emplace_back(head, leaves[i]);
        if (!(end - i == 1 && head == tail)) edges.emplace_back(tail, leaves[end - 1]);
      }
    }
  }

  std::vector<std::pair<NodeId, NodeId>> bridges;
  for (std::uint32_t f = 0; f + 1 < frags; ++f) {
    const auto& left = routers_in[f];
    const auto& right = routers_in[f + 1];
    const std::uint64_t possible = static_cast<std::uint64_t>(left.size()) * right.size();
    if (c.bridges_per_fragment_pair > possible)
      throw TopologyError("not enough routers for the requested bridges");
    std::vector<std::pair<NodeId, NodeId>> chosen;
    while (chosen.size() < c.bridges_per_fragment_pair) {
      std::pair<NodeId, NodeId> e{left[rng.below(left.size())], right[rng.below(right.size())]};
      if (std::find(chosen.begin(), chosen.end(), e) == chosen.end()) chosen.push_back(e);
    }
    for (auto e : chosen) {
      edges.push_back(e);
      bridges.push_back(e);
    }
  }

  return Topology::from_edges(std::move(roles), std::move(edges), std::move(bridges),
                              std::move(fragment));
}

// Text format: "nodes <N>", then "node <id> <role>" per node, then
// "edge <u> <v>" per edge, ids ascending.
inline void write_topology(std::ostream& out, const Topology& t) {
  out << "nodes " << t.node_count() << '\n';
  for (NodeId n = 0; n < t.node_count(); ++n) out << "node " << n << ' ' << to_string(t.role(n)) << '\n';
  for (const auto& e : t.edges()) out << "edge " << e.a << ' ' << e.b << '\n';
}

inline Topology read_topology(std::istream& in) {
  std::string line;
  std::optional<std::size_t> declared;
  std::vector<std::optional<NodeRole>> roles;
  std::vector<std::pair<NodeId, NodeId>> edges;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& what) {
    throw TopologyError("topology line " + std::to_string(lineno) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    if (kind == "nodes") {
      std::size_t n;
      if (declared || !(ls >> n)) fail("bad nodes header");
      declared = n;
      roles.assign(n, std::nullopt);
    } else if (kind == "node") {
      std::size_t id;
      std::string role;
      if (!declared || !(ls >> id >> role)) fail("bad node line");
      auto r = parse_role(role);
      if (!r) fail("unknown role '" + role + "'");
      if (id >= roles.size()) fail("node id out of range");
      if (roles[id]) fail("node declared twice");
      roles[id] = *r;
    } else if (kind == "edge") {
      std::size_t u, v;
      if (!declared || !(ls >> u >> v)) fail("bad edge line");
      if (u >= roles.size() || v >= roles.size()) fail("edge endpoint out of range");
      edges.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
    } else {
      fail("unknown record '" + kind + "'");
    }
  }
  if (!declared) throw TopologyError("missing nodes header");
  std::vector<NodeRole> out;
  out.reserve(roles.size());
  for (std::size_t i = 0; i < roles.size(); ++i) {
    if (!roles[i]) throw TopologyError("node " + std::to_string(i) + " not declared");
    out.push_back(*roles[i]);
  }
  return Topology::from_edges(std::move(out), std::move(edges));
}

}  // namespace cellnet
