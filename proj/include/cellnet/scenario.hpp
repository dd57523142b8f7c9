#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "engine.hpp"
#include "topology.hpp"

namespace cellnet {

// Raised when a file cannot be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Scenario {
  SimulationConfig config;
  // Sweep lists; empty means "just config.seed" / "just config.strategy".
  std::vector<std::uint64_t> seeds;
  std::vector<Strategy> strategies;
  std::optional<std::string> output_dir;
  std::optional<std::string> topology_file;

  std::vector<std::uint64_t> sweep_seeds() const {
    return seeds.empty() ? std::vector<std::uint64_t>{config.seed} : seeds;
  }
  std::vector<Strategy> sweep_strategies() const {
    return strategies.empty() ? std::vector<Strategy>{config.strategy} : strategies;
  }
};

namespace detail {

using json = nlohmann::json;

inline std::string join_key(std::string_view prefix, std::string_view key) {
  return prefix.empty() ? std::string(key) : std::string(prefix) + "." + std::string(key);
}

inline void require_object(const json& j, const std::string& key) {
  if (!j.is_object()) throw ConfigError(key.empty() ? "<root>" : key, "expected an object");
}

inline void only_keys(const json& j, std::string_view prefix, std::initializer_list<std::string_view> allowed) {
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || k == a;
    if (!ok) throw ConfigError(join_key(prefix, k), "unknown key");
  }
}

inline double get_number(const json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError(key, "expected a number");
  return v.get<double>();
}

inline std::uint64_t get_uint(const json& v, const std::string& key) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) {
    if (v.get<std::int64_t>() < 0) throw ConfigError(key, "must be >= 0");
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  }
  throw ConfigError(key, "expected a non-negative integer");
}

inline std::uint32_t get_u32(const json& v, const std::string& key) {
  const auto x = get_uint(v, key);
  if (x > 0xffffffffu) throw ConfigError(key, "too large");
  return static_cast<std::uint32_t>(x);
}

inline bool get_bool(const json& v, const std::string& key) {
  if (!v.is_boolean()) throw ConfigError(key, "expected true or false");
  return v.get<bool>();
}

inline std::string get_string(const json& v, const std::string& key) {
  if (!v.is_string()) throw ConfigError(key, "expected a string");
  return v.get<std::string>();
}

inline NodeRole get_role(std::string_view name, const std::string& key) {
  auto r = parse_role(name);
  if (!r) throw ConfigError(key, "unknown role '" + std::string(name) + "'");
  return *r;
}

inline Strategy get_strategy(const json& v, const std::string& key) {
  const auto s = get_string(v, key);
  auto st = Strategy::parse(s);
  if (!st) throw ConfigError(key, "unknown strategy '" + s + "'");
  return *st;
}

inline void parse_topology(const json& j, const std::string& prefix, TopologyConfig& c,
                           std::optional<std::string>* file) {
  require_object(j, prefix);
  if (file)
    only_keys(j, prefix, {"node_count", "fragment_count", "bridges_per_fragment_pair", "gateway_count",
                          "segment_length", "seed", "role_mix", "file"});
  else
    only_keys(j, prefix, {"node_count", "fragment_count", "bridges_per_fragment_pair", "gateway_count",
                          "segment_length", "seed", "role_mix"});
  for (const auto& [k, v] : j.items()) {
    const auto key = join_key(prefix, k);
    if (k == "node_count") c.node_count = get_u32(v, key);
    else if (k == "fragment_count") c.fragment_count = get_u32(v, key);
    else if (k == "bridges_per_fragment_pair") c.bridges_per_fragment_pair = get_u32(v, key);
    else if (k == "gateway_count") c.gateway_count = get_u32(v, key);
    else if (k == "segment_length") c.segment_length = get_u32(v, key);
    else if (k == "seed") c.seed = get_uint(v, key);
    else if (k == "file") *file = get_string(v, key);
    else if (k == "role_mix") {
      require_object(v, key);
      only_keys(v, key, {"workstation", "server", "router", "gateway"});
      for (const auto& [rk, rv] : v.items()) {
        const auto rkey = join_key(key, rk);
        const double x = get_number(rv, rkey);
        if (rk == "workstation") c.role_mix.workstation = x;
        else if (rk == "server") c.role_mix.server = x;
        else if (rk == "router") c.role_mix.router = x;
        else c.role_mix.gateway = x;
      }
    }
  }
}

}  // namespace detail

// Topology generator settings, as a JSON object with the keys of the
// scenario's "topology" section (without "file").
inline TopologyConfig parse_topology_config(const nlohmann::json& j) {
  TopologyConfig c;
  detail::parse_topology(j, "", c, nullptr);
  try {
    validate(c);
  } catch (const TopologyError& e) {
    throw ConfigError("topology", e.what());
  }
  return c;
}

// Parses a scenario document. Unknown keys are rejected by full dotted
// name; every strategy in the sweep list is validated against the config.
inline Scenario parse_scenario(const nlohmann::json& j) {
  using namespace detail;
  require_object(j, "");
  only_keys(j, "",
            {"output_dir", "seed", "seeds", "strategy", "strategies", "duration", "topology",
             "topology_seed_from_master", "type_count", "packet_checkers_per_type", "node_checkers_per_type",
             "sec_value", "min_sec", "min_sec_by_role", "movement", "trails", "notify", "traffic", "pinning",
             "bridge_remedy", "bridge_decay", "node_checker_fragment", "coverage_window"});
  Scenario s;
  SimulationConfig& c = s.config;
  for (const auto& [k, v] : j.items()) {
    const std::string& key = k;
    if (k == "output_dir") s.output_dir = get_string(v, key);
    else if (k == "seed") c.seed = get_uint(v, key);
    else if (k == "seeds") {
      if (!v.is_array() || v.empty()) throw ConfigError(key, "expected a non-empty array");
      for (std::size_t i = 0; i < v.size(); ++i) s.seeds.push_back(get_uint(v[i], key));
    } else if (k == "strategy") c.strategy = get_strategy(v, key);
    else if (k == "strategies") {
      if (!v.is_array() || v.empty()) throw ConfigError(key, "expected a non-empty array");
      for (std::size_t i = 0; i < v.size(); ++i) s.strategies.push_back(get_strategy(v[i], key));
    } else if (k == "duration") c.duration = get_u32(v, key);
    else if (k == "topology") parse_topology(v, key, c.topology, &s.topology_file);
    else if (k == "topology_seed_from_master") c.topology_seed_from_master = get_bool(v, key);
    else if (k == "type_count") c.type_count = get_u32(v, key);
    else if (k == "packet_checkers_per_type") c.packet_checkers_per_type = get_u32(v, key);
    else if (k == "node_checkers_per_type") c.node_checkers_per_type = get_u32(v, key);
    else if (k == "sec_value") c.sec_value = get_number(v, key);
    else if (k == "min_sec") c.min_sec = get_number(v, key);
    else if (k == "min_sec_by_role") {
      require_object(v, key);
      for (const auto& [rk, rv] : v.items()) {
        const auto rkey = join_key(key, rk);
        c.min_sec_by_role[get_role(rk, rkey)] = get_number(rv, rkey);
      }
    } else if (k == "movement") {
      require_object(v, key);
      only_keys(v, key, {"p_base", "alpha", "p_max"});
      for (const auto& [mk, mv] : v.items()) {
        const double x = get_number(mv, join_key(key, mk));
        if (mk == "p_base") c.movement.p_base = x;
        else if (mk == "alpha") c.movement.alpha = x;
        else c.movement.p_max = x;
      }
    } else if (k == "trails") {
      require_object(v, key);
      only_keys(v, key, {"c1", "c2", "c3", "v_max", "exp_arg_cap", "mark_arrival"});
      for (const auto& [tk, tv] : v.items()) {
        const auto tkey = join_key(key, tk);
        if (tk == "mark_arrival") { c.trails.mark_arrival = get_bool(tv, tkey); continue; }
        const double x = get_number(tv, tkey);
        if (tk == "c1") c.trails.c1 = x;
        else if (tk == "c2") c.trails.c2 = x;
        else if (tk == "c3") c.trails.c3 = x;
        else if (tk == "v_max") c.trails.v_max = x;
        else c.trails.exp_arg_cap = x;
      }
    } else if (k == "notify") {
      require_object(v, key);
      only_keys(v, key, {"threshold", "decrement", "merge"});
      for (const auto& [nk, nv] : v.items()) {
        const auto nkey = join_key(key, nk);
        if (nk == "threshold") c.notify.threshold = get_number(nv, nkey);
        else if (nk == "decrement") c.notify.decrement = get_number(nv, nkey);
        else {
          const auto m = get_string(nv, nkey);
          if (m == "own_first") c.notify.merge = MergeRule::own_first;
          else if (m == "max_of_both") c.notify.merge = MergeRule::max_of_both;
          else throw ConfigError(nkey, "expected own_first or max_of_both");
        }
      }
    } else if (k == "traffic") {
      require_object(v, key);
      only_keys(v, key, {"packets_per_step", "infection_probability_per_packet", "internal_attack_rate",
                         "infections_per_step", "type_skew"});
      for (const auto& [tk, tv] : v.items()) {
        const auto tkey = join_key(key, tk);
        if (tk == "packets_per_step") c.traffic.packets_per_step = get_u32(tv, tkey);
        else if (tk == "infection_probability_per_packet") c.traffic.infection_probability_per_packet = get_number(tv, tkey);
        else if (tk == "internal_attack_rate") c.traffic.internal_attack_rate = get_number(tv, tkey);
        else if (tk == "infections_per_step") c.traffic.infections_per_step = get_number(tv, tkey);
        else c.traffic.type_skew = get_number(tv, tkey);
      }
    } else if (k == "pinning") {
      const auto p = get_string(v, key);
      if (p == "departure_aware") c.pinning = Pinning::departure_aware;
      else if (p == "current") c.pinning = Pinning::current;
      else throw ConfigError(key, "expected departure_aware or current");
    } else if (k == "bridge_remedy") {
      const auto b = get_string(v, key);
      if (b == "none") c.bridge_remedy = BridgeRemedy::none;
      else if (b == "uniform") c.bridge_remedy = BridgeRemedy::uniform;
      else if (b == "steep_decay") c.bridge_remedy = BridgeRemedy::steep_decay;
      else throw ConfigError(key, "expected none, uniform or steep_decay");
    } else if (k == "bridge_decay") c.bridge_decay = get_number(v, key);
    else if (k == "node_checker_fragment") c.node_checker_fragment = get_u32(v, key);
    else if (k == "coverage_window") c.coverage_window = get_number(v, key);
  }
  for (const auto& st : s.sweep_strategies()) {
    SimulationConfig probe = c;
    probe.strategy = st;
    validate(probe);
  }
  return s;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("cannot read " + path.string());
  return ss.str();
}

inline nlohmann::json parse_json_text(const std::string& text, const std::string& what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("<syntax>", what + ": " + e.what());
  }
}

// Loads a scenario file. A topology "file" is resolved relative to the
// scenario's directory and loaded into config.topology_override.
inline Scenario load_scenario(const std::filesystem::path& path) {
  auto s = parse_scenario(parse_json_text(read_file(path), path.string()));
  if (s.topology_file) {
    std::filesystem::path tp(*s.topology_file);
    if (tp.is_relative()) tp = path.parent_path() / tp;
    std::ifstream in(tp);
    if (!in) throw IoError("cannot open " + tp.string());
    try {
      s.config.topology_override = std::make_shared<const Topology>(read_topology(in));
    } catch (const TopologyError& e) {
      throw ConfigError("topology.file", e.what());
    }
  }
  return s;
}

}  // namespace cellnet
