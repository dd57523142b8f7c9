#include <gtest/gtest.h>

#include <cmath>
#include <algorithm>
#include <deque>
#include <set>

#include "cellnet/notify.hpp"
#include "cellnet/rng.hpp"

using namespace cellnet;

namespace {

Topology random_connected(std::size_t n, std::size_t extra, Rng& rng) {
  std::vector<std::pair<NodeId, NodeId>> e;
  std::set<std::pair<NodeId, NodeId>> seen;
  for (NodeId i = 1; i < n; ++i) {
    NodeId p = static_cast<NodeId>(rng.below(i));
    e.push_back({p, i});
    seen.insert({p, i});
  }
  for (std::size_t k = 0; k < extra; ++k) {
    NodeId u = static_cast<NodeId>(rng.below(n)), v = static_cast<NodeId>(rng.below(n));
    if (u == v) continue;
    if (u > v) std::swap(u, v);
    if (seen.insert({u, v}).second) e.push_back({u, v});
  }
  return Topology::from_edges(std::vector<NodeRole>(n, NodeRole::router), e);
}

// Plain queue BFS, kept apart from Topology::bfs_distances.
std::vector<std::uint32_t> oracle_bfs(const Topology& t, NodeId s) {
  std::vector<std::uint32_t> d(t.node_count(), kUnreachable);
  std::deque<NodeId> q{s};
  d[s] = 0;
  while (!q.empty()) {
    NodeId u = q.front();
    q.pop_front();
    for (const auto& e : t.edges()) {
      if (!e.touches(u)) continue;
      NodeId v = e.other(u);
      if (d[v] == kUnreachable) {
        d[v] = d[u] + 1;
        q.push_back(v);
      }
    }
  }
  return d;
}

Topology star(std::size_t leaves) {
  std::vector<std::pair<NodeId, NodeId>> e;
  for (NodeId i = 1; i <= leaves; ++i) e.push_back({0, i});
  return Topology::from_edges(std::vector<NodeRole>(leaves + 1, NodeRole::router), e);
}

}  // namespace

TEST(Notify, EmitDeficiency) {
  auto p = emit_deficiency(3, 15, 20);
  ASSERT_TRUE(p);
  EXPECT_DOUBLE_EQ(p->value, 5);
  EXPECT_EQ(p->origin, 3u);
  EXPECT_FALSE(p->arrival);
  EXPECT_FALSE(emit_deficiency(3, 20, 20));
  EXPECT_DOUBLE_EQ(emit_deficiency(3, 0, 20)->value, 20);
}

TEST(Notify, Decay) {
  EXPECT_DOUBLE_EQ(decay(5), 4);
  EXPECT_DOUBLE_EQ(decay(1), 0);
  EXPECT_DOUBLE_EQ(decay(0.5), -0.5);
}

TEST(Notify, ForwardsBestExceptArrival) {
  const auto t = star(3);
  const LinkId e1 = *t.find_link(0, 1), e2 = *t.find_link(0, 2), e3 = *t.find_link(0, 3);
  std::vector<NotificationPacket> inbox{{1, 3, e1}, {2, 5, e2}};
  const auto out = forward_step(t, 0, inbox, std::nullopt);
  ASSERT_EQ(out.size(), 2u);
  for (const auto& s : out) {
    EXPECT_NE(s.link, e2);
    EXPECT_DOUBLE_EQ(s.packet.value, 4);
    EXPECT_EQ(s.packet.origin, 2u);
    EXPECT_EQ(*s.packet.arrival, s.link);
  }
  EXPECT_EQ(out[0].link, e1);
  EXPECT_EQ(out[1].link, e3);
}

TEST(Notify, ValueOneStops) {
  const auto t = star(3);
  std::vector<NotificationPacket> inbox{{1, 1, *t.find_link(0, 1)}};
  EXPECT_TRUE(forward_step(t, 0, inbox, std::nullopt).empty());
}

TEST(Notify, OwnEmissionWins) {
  const auto t = star(4);
  std::vector<NotificationPacket> inbox{{1, 7, *t.find_link(0, 1)}};
  const auto out = forward_step(t, 0, inbox, NotificationPacket{0, 20, std::nullopt});
  ASSERT_EQ(out.size(), 4u);
  for (const auto& s : out) EXPECT_DOUBLE_EQ(s.packet.value, 20);
}

TEST(Notify, MaxOfBothMerge) {
  const auto t = star(2);
  NotifyParams p;
  p.merge = MergeRule::max_of_both;
  std::vector<NotificationPacket> inbox{{1, 9, *t.find_link(0, 1)}};
  const auto out = forward_step(t, 0, inbox, NotificationPacket{0, 2, std::nullopt}, p);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_DOUBLE_EQ(out[0].packet.value, 8);
}

TEST(Notify, TieBreaksByOriginThenLink) {
  std::vector<NotificationPacket> inbox{{4, 5, 2}, {3, 5, 7}, {3, 5, 1}};
  auto b = best_of(inbox);
  EXPECT_EQ(b->origin, 3u);
  EXPECT_EQ(*b->arrival, 1u);
}

TEST(Notify, NoStorageAcrossSteps) {
  const auto t = star(3);
  NotificationFlood f(t);
  std::vector<std::optional<NotificationPacket>> em(t.node_count());
  em[1] = NotificationPacket{1, 2, std::nullopt};
  f.step(em);
  em[1].reset();
  f.step(em);  // centre relays value 1 to leaves 2, 3
  f.step(em);  // leaves would relay 0: nothing
  for (NodeId n = 0; n < t.node_count(); ++n) EXPECT_TRUE(f.inbox(n).empty());
  EXPECT_EQ(f.step(em).packets, 0u);
}

TEST(Notify, WavefrontMatchesBfsOnRandomGraphs) {
  Rng rng(99);
  for (int g = 0; g < 100; ++g) {
    const std::size_t n = 2 + rng.below(49);
    const auto t = random_connected(n, rng.below(n), rng);
    const NodeId origin = static_cast<NodeId>(rng.below(n));
    const auto v = static_cast<double>(1 + rng.below(8));
    const auto d = oracle_bfs(t, origin);
    const auto arrival = flood_arrival_steps(t, origin, v);
    for (NodeId i = 0; i < n; ++i) {
      if (d[i] <= v) EXPECT_EQ(arrival[i], d[i]) << "graph " << g << " node " << i;
      else EXPECT_EQ(arrival[i], kUnreachable) << "graph " << g << " node " << i;
    }
  }
}

TEST(Notify, ValueTwentyReachesTwentyHops) {
  std::vector<std::pair<NodeId, NodeId>> e;
  for (NodeId i = 0; i + 1 < 30; ++i) e.push_back({i, i + 1});
  const auto t = Topology::from_edges(std::vector<NodeRole>(30, NodeRole::router), e);
  const auto a = flood_arrival_steps(t, 0, 20);
  EXPECT_EQ(a[20], 20u);
  EXPECT_EQ(a[21], kUnreachable);
}

TEST(Notify, ReachRadiusMonotoneInValue) {
  Rng rng(5);
  for (int g = 0; g < 20; ++g) {
    const auto t = random_connected(40, 10, rng);
    std::size_t prev = 0;
    for (double v = 1; v <= 10; v += 0.5) {
      const auto a = flood_arrival_steps(t, 0, v);
      const auto reached = static_cast<std::size_t>(std::count_if(a.begin(), a.end(), [](auto x) { return x != kUnreachable; }));
      EXPECT_GE(reached, prev);
      prev = reached;
    }
  }
}

TEST(Notify, AtMostOnePacketPerLinkDirection) {
  Rng rng(8);
  for (int g = 0; g < 30; ++g) {
    const auto t = random_connected(40, 30, rng);
    NotificationFlood f(t);
    for (int step = 0; step < 30; ++step) {
      std::vector<std::optional<NotificationPacket>> em(t.node_count());
      for (NodeId n = 0; n < t.node_count(); ++n)
        if (rng.bernoulli(0.2)) em[n] = NotificationPacket{n, static_cast<double>(1 + rng.below(10)), std::nullopt};
      const auto s = f.step(em);
      EXPECT_LE(s.max_per_direction, 1u);
    }
  }
}
