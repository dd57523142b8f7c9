#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "cellnet/cellnet.hpp"

namespace fs = std::filesystem;
using namespace cellnet;

namespace {

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write " + p.string());
  return out;
}

void close_out(std::ofstream& out, const fs::path& p) {
  out.close();
  if (!out) throw IoError("failed writing " + p.string());
}

fs::path prepare_dir(const std::string& flag, const Scenario& s) {
  fs::path dir = !flag.empty() ? fs::path(flag) : fs::path(s.output_dir.value_or("out"));
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

int cmd_run(const std::string& file, const std::string& out_flag, bool verbose_trails, bool verbose_traffic) {
  const auto s = load_scenario(file);
  const auto dir = prepare_dir(out_flag, s);

  std::ofstream trails_out, traffic_out;
  TraceSinks sinks;
  if (verbose_trails) {
    trails_out = open_out(dir / "trails.csv");
    trails_out << "t,node,link,type,value\n";
    sinks.trail = [&](std::uint64_t t, NodeId n, LinkId l, TypeId ty, double v) {
      trails_out << t << ',' << n << ',' << l << ',' << ty << ',' << fmt_double(v) << '\n';
    };
  }
  if (verbose_traffic) {
    traffic_out = open_out(dir / "traffic.csv");
    traffic_out << "t,packet,source,destination,origin,payload,fate\n";
    sinks.traffic = [&](std::uint64_t t, const TrafficPacket& p, std::string_view fate) {
      traffic_out << t << ',' << p.id << ',' << p.source << ',' << p.destination << ','
                  << (p.origin == PacketOrigin::external ? "external" : "internal") << ','
                  << (p.payload ? std::to_string(*p.payload) : std::string()) << ',' << fate << '\n';
    };
  }

  const auto report = run(s.config, sinks);

  auto summary = open_out(dir / "summary.json");
  write_summary_json(summary, report);
  close_out(summary, dir / "summary.json");
  auto steps = open_out(dir / "steps.csv");
  write_steps_csv(steps, report);
  close_out(steps, dir / "steps.csv");
  if (verbose_trails) close_out(trails_out, dir / "trails.csv");
  if (verbose_traffic) close_out(traffic_out, dir / "traffic.csv");

  std::cout << report.strategy << " seed " << report.seed << ": detection_rate "
            << fmt_double(report.detection_rate()) << ", checked_fraction "
            << fmt_double(report.checked_fraction_final_half()) << ", control_bandwidth "
            << report.control_bandwidth() << "\n";
  return 0;
}

int cmd_sweep(const std::string& file, const std::string& out_flag, unsigned jobs) {
  const auto s = load_scenario(file);
  const auto dir = prepare_dir(out_flag, s);

  auto strategies = s.sweep_strategies();
  std::sort(strategies.begin(), strategies.end(),
            [](const Strategy& a, const Strategy& b) { return a.name() < b.name(); });
  auto seeds = s.sweep_seeds();
  std::sort(seeds.begin(), seeds.end());

  std::vector<SimulationConfig> configs;
  for (const auto& st : strategies)
    for (auto seed : seeds) {
      SimulationConfig c = s.config;
      c.strategy = st;
      c.seed = seed;
      configs.push_back(std::move(c));
    }

  std::vector<MetricsReport> reports(configs.size());
  std::vector<std::exception_ptr> errors(configs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < configs.size();) {
      try {
        reports[i] = run(configs[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(configs.size())));
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < n; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  auto sweep = open_out(dir / "sweep.csv");
  write_sweep_csv(sweep, reports);
  close_out(sweep, dir / "sweep.csv");
  const auto means = compare_strategies(reports);
  auto cmp = open_out(dir / "comparison.csv");
  write_comparison_csv(cmp, means);
  close_out(cmp, dir / "comparison.csv");
  write_comparison_table(std::cout, means);
  return 0;
}

int cmd_gen_topology(const std::string& config_file, const std::string& out_file) {
  const auto cfg = parse_topology_config(parse_json_text(read_file(config_file), config_file));
  const auto topo = generate_topology(cfg);
  auto out = open_out(out_file);
  write_topology(out, topo);
  close_out(out, out_file);
  return 0;
}

int cmd_validate(const std::string& file) {
  const auto s = load_scenario(file);
  std::cout << file << ": ok (" << s.sweep_strategies().size() << " strategies, " << s.sweep_seeds().size()
            << " seeds)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cellnet: artificial cell patrol simulator"};
  app.require_subcommand(1);

  std::string out_dir;
  bool verbose_trails = false, verbose_traffic = false;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  std::string scenario, topo_config, topo_out;

  auto* run_cmd = app.add_subcommand("run", "single run: summary.json and steps.csv");
  run_cmd->add_option("scenario", scenario, "scenario file")->required();
  run_cmd->add_option("--out-dir", out_dir, "output directory");
  run_cmd->add_flag("--verbose-trails", verbose_trails, "dump nonzero trail values every step");
  run_cmd->add_flag("--verbose-traffic", verbose_traffic, "log every packet leaving the network");

  auto* sweep_cmd = app.add_subcommand("sweep", "strategies x seeds: sweep.csv and comparison.csv");
  sweep_cmd->add_option("scenario", scenario, "scenario file")->required();
  sweep_cmd->add_option("--out-dir", out_dir, "output directory");
  sweep_cmd->add_option("--jobs", jobs, "parallel runs")->check(CLI::PositiveNumber);

  auto* gen_cmd = app.add_subcommand("gen-topology", "write a generated topology file");
  gen_cmd->add_option("config", topo_config, "topology config (JSON)")->required();
  gen_cmd->add_option("out", topo_out, "output topology file")->required();

  auto* val_cmd = app.add_subcommand("validate", "parse a scenario without running it");
  val_cmd->add_option("scenario", scenario, "scenario file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run_cmd) return cmd_run(scenario, out_dir, verbose_trails, verbose_traffic);
    if (*sweep_cmd) return cmd_sweep(scenario, out_dir, jobs);
    if (*gen_cmd) return cmd_gen_topology(topo_config, topo_out);
    if (*val_cmd) return cmd_validate(scenario);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return 2;
  } catch (const TopologyError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
