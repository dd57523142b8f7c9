#include <gtest/gtest.h>

#include <array>
#include <cmath>

#include "cellnet/trails.hpp"

using namespace cellnet;

namespace {

Topology star(std::size_t leaves) {
  std::vector<std::pair<NodeId, NodeId>> e;
  for (NodeId i = 1; i <= leaves; ++i) e.push_back({0, i});
  return Topology::from_edges(std::vector<NodeRole>(leaves + 1, NodeRole::router), e);
}

std::vector<std::size_t> draw_counts(const TrailTable& table, const Topology& t, NodeId node, int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::size_t> counts(t.degree(node), 0);
  for (int i = 0; i < n; ++i) ++counts[*t.local_index(node, table.select_next_hop(node, 1, rng))];
  return counts;
}

}  // namespace

TEST(Trails, IncreaseClosedForm) {
  TrailParams p;
  EXPECT_NEAR(trail_increase(0, p), 10.001, 1e-12);
  // 10 + e^10.001 / 1000, evaluated at 40 digits
  EXPECT_NEAR(trail_increase(10.001, p), 32.0485032775064162222935, 1e-6);
  EXPECT_NEAR(trail_increase(5, p), 10.14841315910257660342112, 1e-9);
  EXPECT_DOUBLE_EQ(trail_increase(p.exp_arg_cap + 100, p), std::min(p.c1 + p.c2 * std::exp(p.exp_arg_cap), 1000.0));
  EXPECT_THROW(trail_increase(-1, p), std::invalid_argument);
}

TEST(Trails, IncreaseRelativeErrorBelowClamp) {
  TrailParams p;
  for (double v = 0; v < 13.8; v += 0.01) {
    const double expect = p.c1 + p.c2 * std::exp(v);
    ASSERT_LT(expect, p.v_max);
    EXPECT_LE(std::abs(trail_increase(v, p) - expect) / expect, 1e-9);
  }
}

TEST(Trails, DecayExact) {
  TrailParams p;
  EXPECT_EQ(trail_decay(10, p), 8);
  EXPECT_EQ(trail_decay(1, p), 0);
  EXPECT_EQ(trail_decay(0, p), 0);
  for (double v = 0; v < 50; v += 0.37) EXPECT_EQ(trail_decay(v, p), std::max(0.0, v - 2.0));
}

TEST(Trails, FreshEntryReturnsToZero) {
  TrailParams p;
  double v = trail_increase(0, p);
  int steps = 0;
  while (v > 0) {
    v = trail_decay(v, p);
    ++steps;
  }
  EXPECT_EQ(steps, static_cast<int>(std::ceil(trail_increase(0, p) / p.c3)));
}

TEST(Trails, RouletteWeightsWorkedExample) {
  const std::vector<double> v{1, 5, 10, 100};
  const auto w = roulette_weights(v);
  EXPECT_EQ(w, (std::vector<std::uint64_t>{100, 96, 91, 1}));
  EXPECT_EQ(w[0] + w[1] + w[2] + w[3], 288u);
}

TEST(Trails, RoulettePickIntervals) {
  // k walks through [1, sum]; the interval boundaries are exact.
  const std::vector<std::uint64_t> w{100, 96, 91, 1};
  std::array<std::size_t, 4> seen{};
  Rng rng(1);
  for (int i = 0; i < 20000; ++i) ++seen[roulette_pick(w, rng)];
  for (auto s : seen) EXPECT_GT(s, 0u);
}

TEST(Trails, EqualValuesUniform) {
  const std::vector<double> v{7, 7, 7};
  EXPECT_EQ(roulette_weights(v), (std::vector<std::uint64_t>{1, 1, 1}));
}

TEST(Trails, SelectionMonotone) {
  Rng rng(4);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> v(2 + rng.below(4));
    for (auto& x : v) x = rng.uniform01() * 200;
    const auto w = roulette_weights(v);
    for (std::size_t a = 0; a < v.size(); ++a)
      for (std::size_t b = 0; b < v.size(); ++b)
        if (v[a] < v[b]) EXPECT_GE(w[a], w[b]);
  }
}

TEST(Trails, FrequenciesMatchWeightsWithin3Sigma) {
  Rng vals(12);
  for (std::size_t deg : {2u, 3u, 4u}) {
    const auto t = star(deg);
    TrailTable table(t, 1);
    std::vector<double> v(deg);
    for (std::size_t i = 0; i < deg; ++i) {
      v[i] = static_cast<double>(vals.below(101));
      table.set_value(0, t.neighbors(0)[i].link, 1, v[i]);
    }
    const auto w = roulette_weights(v);
    double total = 0;
    for (auto x : w) total += static_cast<double>(x);
    const int n = 1000000;
    const auto counts = draw_counts(table, t, 0, n, 100 + deg);
    for (std::size_t i = 0; i < deg; ++i) {
      const double p = static_cast<double>(w[i]) / total;
      const double sigma = std::sqrt(n * p * (1 - p));
      EXPECT_LE(std::abs(static_cast<double>(counts[i]) - n * p), 3 * sigma + 1e-9) << "deg " << deg << " link " << i;
    }
  }
}

TEST(Trails, BridgeFallbackUniformChiSquare) {
  const auto t = star(3);
  TrailTable table(t, 1);
  table.set_value(0, *t.find_link(0, 1), 1, 500);
  table.set_bridge_fallback(0, true);
  const int n = 100000;
  const auto counts = draw_counts(table, t, 0, n, 9);
  double chi2 = 0;
  for (auto c : counts) {
    EXPECT_NEAR(c / double(n), 1.0 / 3.0, 0.01);
    chi2 += (c - n / 3.0) * (c - n / 3.0) / (n / 3.0);
  }
  EXPECT_LT(chi2, 13.82);  // 2 dof, p = 0.001
}

TEST(Trails, RecordTraversal) {
  const auto t = star(3);
  TrailTable table(t, 3);
  const LinkId e = *t.find_link(0, 2);
  table.record_traversal(0, e, 2);
  std::size_t nonzero = 0;
  table.for_each([&](NodeId, LinkId, TypeId, double v) { nonzero += v > 0; });
  EXPECT_EQ(nonzero, 1u);
  EXPECT_DOUBLE_EQ(table.value(0, e, 2), trail_increase(0, table.params()));
  table.record_traversal(0, e, 2);
  EXPECT_DOUBLE_EQ(table.value(0, e, 2), trail_increase(trail_increase(0, table.params()), table.params()));
  EXPECT_EQ(table.value(0, e, 1), 0.0);
  EXPECT_EQ(table.value(0, e, 3), 0.0);
  EXPECT_EQ(table.value(2, e, 2), 0.0);
  EXPECT_THROW(table.record_traversal(1, *t.find_link(0, 3), 1), std::invalid_argument);
}

TEST(Trails, DecayAllNeverNegativeKeepsZeros) {
  const auto t = star(4);
  TrailTable table(t, 2);
  Rng rng(3);
  for (int i = 0; i < 10; ++i) table.record_traversal(0, t.neighbors(0)[rng.below(4)].link, 1 + rng.below(2));
  std::vector<double> before;
  table.for_each([&](NodeId, LinkId, TypeId, double v) { before.push_back(v); });
  table.decay_all();
  std::size_t i = 0;
  table.for_each([&](NodeId, LinkId, TypeId, double v) {
    EXPECT_GE(v, 0.0);
    if (before[i] == 0.0) EXPECT_EQ(v, 0.0);
    else EXPECT_EQ(v, std::max(0.0, before[i] - 2.0));
    ++i;
  });
}

TEST(Trails, DecayOverridePerNode) {
  const auto t = star(2);
  TrailTable table(t, 1);
  table.set_value(0, *t.find_link(0, 1), 1, 30);
  table.set_value(1, *t.find_link(0, 1), 1, 30);
  table.set_decay_override(0, 20);
  table.decay_all();
  EXPECT_EQ(table.value(0, *t.find_link(0, 1), 1), 10);
  EXPECT_EQ(table.value(1, *t.find_link(0, 1), 1), 28);
}

TEST(Trails, ValuesStayWithinClamp) {
  const auto t = star(2);
  TrailTable table(t, 1);
  for (int i = 0; i < 50; ++i) table.record_traversal(0, *t.find_link(0, 1), 1);
  EXPECT_LE(table.value(0, *t.find_link(0, 1), 1), table.params().v_max);
}

TEST(Trails, ParamValidation) {
  TrailParams p;
  p.c3 = 0;
  EXPECT_THROW(validate(p), std::invalid_argument);
}
