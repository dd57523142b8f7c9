#pragma once

#include <cstdint>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "metrics.hpp"

namespace cellnet {

inline nlohmann::ordered_json summary_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["strategy"] = r.strategy;
  j["seed"] = r.seed;
  j["duration"] = r.duration;
  j["node_count"] = r.node_count();
  j["type_count"] = r.type_count();
  j["packets_generated"] = r.packets_generated;
  j["introduced"] = r.introduced;
  j["detected"] = r.detected;
  j["detection_rate"] = r.detection_rate();
  j["delivered_intrusions"] = r.delivered_intrusions;
  j["coverage_window"] = r.coverage_window;
  j["checked_fraction"] = r.checked_fraction_final_half();
  j["checks"] = r.checks();
  j["redundant_min_gap"] = r.redundant_min_gap;
  j["redundant_checks"] = r.redundant_check_count();
  j["notification_packets"] = r.notification_packets;
  j["max_notifications_per_link_direction"] = r.max_notifications_per_link_direction;
  j["centralized_moves"] = r.centralized_moves;
  j["centralized_bandwidth"] = r.centralized_bandwidth;
  j["control_bandwidth"] = r.control_bandwidth();
  j["infections_created"] = r.infections_created;
  j["infections_cleared"] = r.infections_cleared;
  j["infections_active"] = r.infections_active;
  j["final_deficient_nodes"] = r.steps.empty() ? 0 : r.steps.back().deficient_nodes;
  return j;
}

inline void write_summary_json(std::ostream& out, const MetricsReport& r) {
  out << summary_json(r).dump(2) << '\n';
}

inline void write_steps_csv(std::ostream& out, const MetricsReport& r) {
  out << "t,detections_cum,introduced_cum,deficient_nodes,notification_packets,checks,redundant_checks,"
         "max_cells_per_node,min_cells_per_node\n";
  for (const auto& s : r.steps)
    out << s.t << ',' << s.detections_cum << ',' << s.introduced_cum << ',' << s.deficient_nodes << ','
        << s.notification_packets << ',' << s.checks << ',' << s.redundant_checks << ','
        << s.max_cells_per_node << ',' << s.min_cells_per_node << '\n';
}

// Fixed formatting so sweep files diff cleanly.
inline std::string fmt_double(double v) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(6) << v;
  return ss.str();
}

inline void write_sweep_csv(std::ostream& out, const std::vector<MetricsReport>& runs) {
  out << "strategy,seed,detection_rate,checked_fraction,control_bandwidth,notification_packets,"
         "centralized_bandwidth,redundant_checks,checks,final_deficient_nodes\n";
  for (const auto& r : runs)
    out << r.strategy << ',' << r.seed << ',' << fmt_double(r.detection_rate()) << ','
        << fmt_double(r.checked_fraction_final_half()) << ',' << r.control_bandwidth() << ','
        << r.notification_packets << ',' << r.centralized_bandwidth << ',' << r.redundant_check_count() << ','
        << r.checks() << ',' << (r.steps.empty() ? 0 : r.steps.back().deficient_nodes) << '\n';
}

struct StrategyMeans {
  std::string strategy;
  std::size_t runs = 0;
  double detection_rate = 0;
  double checked_fraction = 0;
  double control_bandwidth = 0;
};

// Means per strategy, in strategy-name order.
inline std::vector<StrategyMeans> compare_strategies(const std::vector<MetricsReport>& runs) {
  std::map<std::string, StrategyMeans> by;
  for (const auto& r : runs) {
    auto& m = by[r.strategy];
    m.strategy = r.strategy;
    ++m.runs;
    m.detection_rate += r.detection_rate();
    m.checked_fraction += r.checked_fraction_final_half();
    m.control_bandwidth += static_cast<double>(r.control_bandwidth());
  }
  std::vector<StrategyMeans> out;
  for (auto& [name, m] : by) {
    const double n = static_cast<double>(m.runs);
    m.detection_rate /= n;
    m.checked_fraction /= n;
    m.control_bandwidth /= n;
    out.push_back(m);
  }
  return out;
}

inline void write_comparison_csv(std::ostream& out, const std::vector<StrategyMeans>& rows) {
  out << "strategy,runs,mean_detection_rate,mean_checked_fraction,mean_control_bandwidth\n";
  for (const auto& m : rows)
    out << m.strategy << ',' << m.runs << ',' << fmt_double(m.detection_rate) << ','
        << fmt_double(m.checked_fraction) << ',' << fmt_double(m.control_bandwidth) << '\n';
}

inline void write_comparison_table(std::ostream& out, const std::vector<StrategyMeans>& rows) {
  out << std::left << std::setw(14) << "strategy" << std::right << std::setw(6) << "runs" << std::setw(12)
      << "detection" << std::setw(12) << "checked" << std::setw(16) << "bandwidth" << '\n';
  for (const auto& m : rows)
    out << std::left << std::setw(14) << m.strategy << std::right << std::setw(6) << m.runs << std::setw(12)
        << fmt_double(m.detection_rate) << std::setw(12) << fmt_double(m.checked_fraction) << std::setw(16)
        << fmt_double(m.control_bandwidth) << '\n';
}

}  // namespace cellnet
