#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <vector>

#include "cellnet/entity.hpp"
#include "cellnet/rng.hpp"

using namespace cellnet;

namespace {

Topology star(std::size_t leaves) {
  std::vector<std::pair<NodeId, NodeId>> e;
  for (NodeId i = 1; i <= leaves; ++i) e.push_back({0, i});
  return Topology::from_edges(std::vector<NodeRole>(leaves + 1, NodeRole::workstation), e);
}

Cell pc(NodeId at) { return Cell{0, 1, CellKind::packet_checker, at, 1.0}; }

auto no_select = [](NodeId, TypeId, Rng&) -> LinkId { throw std::logic_error("unused"); };

}  // namespace

TEST(Entity, NodeSecuritySums) {
  std::vector<Cell> three(3, pc(0));
  EXPECT_DOUBLE_EQ(node_security(three), 3.0);
  EXPECT_DOUBLE_EQ(node_security(std::span<const Cell>{}), 0.0);
  std::vector<Cell> many(25, pc(0));
  EXPECT_GE(node_security(many), 20.0);
}

TEST(Entity, NodeCheckersDoNotCount) {
  std::vector<Cell> cells{pc(0), Cell{1, 2, CellKind::node_checker, 0, 1.0}};
  EXPECT_DOUBLE_EQ(node_security(cells), 1.0);
}

TEST(Entity, MovementProbabilityShape) {
  MovementParams p;
  EXPECT_DOUBLE_EQ(movement_probability(p, 0), 0.1);
  EXPECT_DOUBLE_EQ(movement_probability(p, 20), 0.8);
  EXPECT_DOUBLE_EQ(movement_probability(p, 1e9), p.p_max);
  EXPECT_DOUBLE_EQ(movement_probability(p, 2), 0.2);
  EXPECT_THROW(movement_probability(p, -1), std::invalid_argument);
}

TEST(Entity, MovementProbabilityMonotoneProperty) {
  Rng rng(77);
  for (int trial = 0; trial < 2000; ++trial) {
    MovementParams p;
    p.p_max = rng.uniform01();
    p.p_base = rng.uniform01() * p.p_max;
    p.alpha = rng.uniform01();
    const double a = rng.uniform01() * 50, b = a + rng.uniform01() * 50;
    const double pa = movement_probability(p, a), pb = movement_probability(p, b);
    EXPECT_LE(pa, pb);
    EXPECT_GE(pa, p.p_base);
    EXPECT_LE(pb, p.p_max);
  }
}

TEST(Entity, ParamValidation) {
  MovementParams p;
  p.p_base = 0.9;
  EXPECT_THROW(validate(p), std::invalid_argument);
  p = {};
  p.alpha = -1;
  EXPECT_THROW(validate(p), std::invalid_argument);
}

TEST(Entity, PinnedWhenDeficientForAnyStream) {
  const auto t = star(4);
  MovementParams p;
  p.p_base = 1.0;
  p.p_max = 1.0;
  for (std::uint64_t s = 0; s < 500; ++s) {
    Rng rng(s);
    EXPECT_TRUE(is_stay(decide_move(pc(0), t, p, 0, 5.0, NotificationView{3, 2}, no_select, rng)));
  }
}

TEST(Entity, FollowsNotificationArrival) {
  const auto t = star(4);
  MovementParams p;
  const LinkId e = *t.find_link(0, 3);
  int moved = 0;
  for (std::uint64_t s = 0; s < 2000; ++s) {
    Rng rng(s);
    auto d = decide_move(pc(0), t, p, 0, 0.0, NotificationView{3, e}, no_select, rng);
    if (!is_stay(d)) {
      ++moved;
      EXPECT_EQ(std::get<MoveAlong>(d).link, e);
    }
  }
  // fires with f_m(3) = 0.25
  EXPECT_NEAR(moved / 2000.0, 0.25, 0.04);
}

TEST(Entity, UniformWithoutNotificationChiSquare) {
  const auto t = star(4);
  MovementParams p;
  p.p_base = 1.0;
  p.p_max = 1.0;
  Rng rng(2024);
  std::array<int, 4> counts{};
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    auto d = decide_move(pc(0), t, p, 0, 0.0, std::nullopt, no_select, rng);
    ASSERT_FALSE(is_stay(d));
    ++counts[t.connection(std::get<MoveAlong>(d).link).other(0) - 1];
  }
  double chi2 = 0;
  for (int c : counts) {
    EXPECT_NEAR(c / double(n), 0.25, 0.01);
    chi2 += (c - n / 4.0) * (c - n / 4.0) / (n / 4.0);
  }
  EXPECT_LT(chi2, 16.27);  // 3 dof, p = 0.001
}

TEST(Entity, NodeCheckerAlwaysMovesViaSelector) {
  const auto t = star(3);
  Cell nc{5, 2, CellKind::node_checker, 0, 1.0};
  Rng rng(1);
  auto d = decide_move(nc, t, MovementParams{}, 0, 7.0, std::nullopt,
                       [&](NodeId, TypeId, Rng&) { return *t.find_link(0, 2); }, rng);
  ASSERT_FALSE(is_stay(d));
  EXPECT_EQ(std::get<MoveAlong>(d).link, *t.find_link(0, 2));
}

TEST(Entity, IsolatedNodeStays) {
  const auto t = Topology::from_edges({NodeRole::workstation}, {});
  Rng rng(1);
  EXPECT_TRUE(is_stay(decide_move(pc(0), t, MovementParams{1, 0, 1}, 0, 0.0, std::nullopt, no_select, rng)));
}
