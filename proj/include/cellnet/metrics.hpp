#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "threat.hpp"
#include "topology.hpp"

namespace cellnet {

struct StepRow {
  std::uint64_t t = 0;
  std::uint64_t detections_cum = 0;
  std::uint64_t introduced_cum = 0;
  std::uint64_t deficient_nodes = 0;
  std::uint64_t notification_packets = 0;
  std::uint64_t checks = 0;
  std::uint64_t redundant_checks = 0;
  std::uint32_t max_cells_per_node = 0;
  std::uint32_t min_cells_per_node = 0;
};

class MetricsReport {
 public:
  MetricsReport() = default;
  MetricsReport(std::size_t node_count, std::uint32_t type_count, std::size_t link_count)
      : notifications_per_link(link_count, 0), nodes_(node_count), types_(type_count),
        check_times_(node_count * type_count) {}

  std::string strategy;
  std::uint64_t seed = 0;
  std::uint32_t duration = 0;
  double coverage_window = 1.0;
  double redundant_min_gap = 0.0;
  std::vector<std::uint32_t> node_fragment;
  std::vector<TypeId> checked_types;

  std::uint64_t packets_generated = 0;
  std::uint64_t introduced = 0;
  std::uint64_t detected = 0;
  std::uint64_t delivered_intrusions = 0;

  std::uint64_t notification_packets = 0;
  std::vector<std::uint64_t> notifications_per_link;
  std::uint64_t max_notifications_per_link_direction = 0;
  std::uint64_t centralized_moves = 0;
  std::uint64_t centralized_bandwidth = 0;

  std::uint64_t infections_created = 0;
  std::uint64_t infections_cleared = 0;
  std::uint64_t infections_active = 0;

  std::vector<StepRow> steps;

  std::size_t node_count() const { return nodes_; }
  std::uint32_t type_count() const { return types_; }

  double detection_rate() const {
    return introduced == 0 ? 0.0 : static_cast<double>(detected) / static_cast<double>(introduced);
  }

  // Notification packets plus centralized command/report traffic.
  std::uint64_t control_bandwidth() const { return notification_packets + centralized_bandwidth; }

  // Records a check; returns true when it came sooner than the redundancy
  // gap after the previous same-type check of the node.
  bool record_check(const CheckEvent& e) {
    auto& times = check_times_[index(e.node, e.type)];
    const bool redundant =
        !times.empty() && static_cast<double>(e.t - times.back()) < redundant_min_gap;
    times.push_back(static_cast<std::uint32_t>(e.t));
    if (redundant) ++redundant_checks_;
    ++checks_;
    return redundant;
  }

  std::span<const std::uint32_t> check_times(NodeId n, TypeId t) const {
    return check_times_[index(n, t)];
  }

  std::uint64_t checks() const { return checks_; }
  std::uint64_t redundant_check_count() const { return redundant_checks_; }

  std::uint64_t redundant_check_count(double min_gap) const {
    std::uint64_t count = 0;
    for (const auto& times : check_times_)
      for (std::size_t i = 1; i < times.size(); ++i)
        if (static_cast<double>(times[i] - times[i - 1]) < min_gap) ++count;
    return count;
  }

  // Fraction of (node, type) pairs, over types that have node checkers, that
  // are checked at least once in every window of the step range
  // [from, to]. The range is cut into consecutive windows of
  // floor(window) steps; a trailing partial window is ignored unless it is
  // the only one. `fragment` restricts the nodes considered.
  double checked_fraction(double window, std::uint64_t from, std::uint64_t to,
                          std::optional<std::uint32_t> fragment = std::nullopt) const {
    if (checked_types.empty() || to < from) return 0.0;
    const auto w = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::floor(window)));
    const std::uint64_t span = to - from + 1;
    const std::uint64_t windows = std::max<std::uint64_t>(1, span / w);
    const std::uint64_t effective = span < w ? span : w;
    std::uint64_t pairs = 0, covered = 0;
    std::vector<bool> hit(windows);
    for (NodeId n = 0; n < nodes_; ++n) {
      if (fragment && (n >= node_fragment.size() || node_fragment[n] != *fragment)) continue;
      for (TypeId t : checked_types) {
        ++pairs;
        std::fill(hit.begin(), hit.end(), false);
        for (auto ts : check_times(n, t)) {
          if (ts < from || ts > to) continue;
          const std::uint64_t k = (ts - from) / effective;
          if (k < windows) hit[k] = true;
        }
        if (std::all_of(hit.begin(), hit.end(), [](bool b) { return b; })) ++covered;
      }
    }
    return pairs == 0 ? 0.0 : static_cast<double>(covered) / static_cast<double>(pairs);
  }

  // Coverage over the second half of the run with the configured window.
  double checked_fraction_final_half(std::optional<std::uint32_t> fragment = std::nullopt) const {
    return checked_fraction(coverage_window, duration / 2 + 1, duration, fragment);
  }

  std::vector<std::uint64_t> deficiency_series() const {
    std::vector<std::uint64_t> out;
    out.reserve(steps.size());
    for (const auto& r : steps) out.push_back(r.deficient_nodes);
    return out;
  }

  // Cells per node after step t (1-based).
  std::span<const std::uint32_t> histogram(std::uint64_t t) const {
    return std::span<const std::uint32_t>(histogram_).subspan((t - 1) * nodes_, nodes_);
  }

  void add_step(const StepRow& row, std::span<const std::uint32_t> cells_per_node) {
    steps.push_back(row);
    histogram_.insert(histogram_.end(), cells_per_node.begin(), cells_per_node.end());
  }

 private:
  std::size_t index(NodeId n, TypeId t) const {
    return static_cast<std::size_t>(n) * types_ + (t - 1);
  }

  std::size_t nodes_ = 0;
  std::uint32_t types_ = 0;
  std::vector<std::vector<std::uint32_t>> check_times_;
  std::vector<std::uint32_t> histogram_;
  std::uint64_t checks_ = 0;
  std::uint64_t redundant_checks_ = 0;
};

}  // namespace cellnet
