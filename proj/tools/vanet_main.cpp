#include <fcntl.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "vanet/control.hpp"
#include "vanet/simulation.hpp"
#include "vanet/udp_node.hpp"

extern char** environ;

namespace fs = std::filesystem;
using namespace vanet;

namespace {

// Every ScenarioConfig field as an optional override of the config file.
struct ScenarioFlags {
  std::optional<std::string> config;
  std::optional<std::string> mode;
  std::optional<std::string> transport;
  std::optional<std::size_t> n_followers;
  std::optional<double> duration_s;
  std::optional<std::uint64_t> seed;
  std::optional<double> range_m;
  std::optional<double> loss_max;
  std::optional<std::int64_t> per_hop_delay_ms;
  std::optional<std::uint64_t> medium_seed;
  std::optional<std::uint32_t> normal_ms, hello_ms, tc_ms, registry_read_ms, registry_write_s;
  std::optional<bool> scripted;
  std::vector<double> follower_lengths;
  std::optional<bool> deterministic_mpr;
  std::optional<std::uint32_t> form_timeout_ms;
  std::optional<double> join_stagger_s;
  std::optional<double> leave_at_s;
  std::optional<std::uint32_t> echo_every;
  std::optional<double> lead_x;
  std::vector<double> follower_x;
  std::optional<double> follower_speed;
  std::optional<std::string> registry_path;
  std::optional<std::uint16_t> base_port;
  std::optional<std::string> host;

  void add_to(CLI::App& app) {
    app.add_option("-c,--config", config, "Scenario file (YAML)")->check(CLI::ExistingFile);
    app.add_option("--mode", mode, "rba or mpr")->check(CLI::IsMember({"rba", "mpr"}));
    app.add_option("--transport", transport, "inproc or udp")->check(CLI::IsMember({"inproc", "udp"}));
    app.add_option("-n,--n-followers", n_followers, "Following vehicles (1..10)");
    app.add_option("-d,--duration", duration_s, "Simulated seconds");
    app.add_option("--seed", seed, "Run seed");
    app.add_option("--range", range_m, "Radio range in meters");
    app.add_option("--loss-max", loss_max, "Loss probability at the edge of the range");
    app.add_option("--per-hop-delay-ms", per_hop_delay_ms, "In-process per-hop delay");
    app.add_option("--medium-seed", medium_seed, "Seed of the medium's loss draws");
    app.add_option("--normal-ms", normal_ms, "NORMAL period and physics tick");
    app.add_option("--hello-ms", hello_ms, "HELLO period");
    app.add_option("--tc-ms", tc_ms, "TC period");
    app.add_option("--registry-read-ms", registry_read_ms, "Registry read period (udp)");
    app.add_option("--registry-write-s", registry_write_s, "Registry write period (udp)");
    app.add_flag("--scripted,!--interactive", scripted, "Run the join/leave script");
    app.add_option("--follower-lengths", follower_lengths, "Lengths of followers in id order (5 or 10)");
    app.add_flag("--deterministic-mpr", deterministic_mpr, "Break MPR ties by lowest id");
    app.add_option("--form-timeout-ms", form_timeout_ms, "FORM timeout and lead transaction timeout");
    app.add_option("--join-stagger", join_stagger_s, "Seconds between scripted JOINs");
    app.add_option("--leave-at", leave_at_s, "Scripted LEAVE time in seconds");
    app.add_option("--echo-every", echo_every, "Latency probe sampling (1 in N NORMALs)");
    app.add_option("--lead-x", lead_x, "Lead start position");
    app.add_option("--follower-x", follower_x, "Follower start positions in id order");
    app.add_option("--follower-speed", follower_speed, "Follower cruise speed (m/s)");
    app.add_option("--registry", registry_path, "Registry file (udp)");
    app.add_option("--base-port", base_port, "UDP port of node 1; node k uses base+k-1");
    app.add_option("--host", host, "Host for UDP sockets");
  }

  ScenarioConfig resolve() const {
    ScenarioConfig c = config ? load_scenario(*config) : ScenarioConfig{};
    if (mode) c.mode = *mode == "rba" ? Scheme::Rba : Scheme::Mpr;
    if (transport) c.transport = *transport == "udp" ? Transport::Udp : Transport::Inproc;
    if (n_followers) c.n_followers = *n_followers;
    if (duration_s) c.duration_s = *duration_s;
    if (seed) c.seed = *seed;
    if (range_m) c.medium.range_m = *range_m;
    if (loss_max) c.medium.loss_max = *loss_max;
    if (per_hop_delay_ms) c.medium.per_hop_delay = Millis{*per_hop_delay_ms};
    if (medium_seed) {
      c.medium.rng_seed = *medium_seed;
      c.medium_seed_set = true;
    }
    if (normal_ms) c.timers.normal_ms = *normal_ms;
    if (hello_ms) c.timers.hello_ms = *hello_ms;
    if (tc_ms) c.timers.tc_ms = *tc_ms;
    if (registry_read_ms) c.timers.registry_read_ms = *registry_read_ms;
    if (registry_write_s) c.timers.registry_write_s = *registry_write_s;
    if (scripted) c.scripted = *scripted;
    if (!follower_lengths.empty()) c.follower_lengths = follower_lengths;
    if (deterministic_mpr) c.deterministic_mpr = *deterministic_mpr;
    if (form_timeout_ms) c.form_timeout_ms = *form_timeout_ms;
    if (join_stagger_s) c.join_stagger_s = *join_stagger_s;
    if (leave_at_s) c.leave_at_s = *leave_at_s;
    if (echo_every) c.echo_every = *echo_every;
    if (lead_x) c.lead_x = *lead_x;
    if (!follower_x.empty()) c.follower_x = follower_x;
    if (follower_speed) c.follower_speed = *follower_speed;
    if (registry_path) c.registry_path = *registry_path;
    if (base_port) c.base_port = *base_port;
    if (host) c.host = *host;
    c.validate();
    return c;
  }
};

std::string num(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

// Flags a spawned node needs to reproduce the shared part of the scenario.
std::vector<std::string> shared_args(const ScenarioConfig& c, const fs::path& out_dir) {
  return {"--mode",           std::string(to_string(c.mode)),
          "--duration",       num(c.duration_s),
          "--seed",           std::to_string(c.seed),
          "--range",          num(c.medium.range_m),
          "--loss-max",       num(c.medium.loss_max),
          "--normal-ms",      std::to_string(c.timers.normal_ms),
          "--hello-ms",       std::to_string(c.timers.hello_ms),
          "--tc-ms",          std::to_string(c.timers.tc_ms),
          "--registry-read-ms", std::to_string(c.timers.registry_read_ms),
          "--registry-write-s", std::to_string(c.timers.registry_write_s),
          "--form-timeout-ms", std::to_string(c.form_timeout_ms),
          "--echo-every",     std::to_string(c.echo_every),
          "--registry",       c.registry_path,
          "--base-port",      std::to_string(c.base_port),
          "--host",           c.host,
          "--out-dir",        out_dir.string()};
}

pid_t spawn(const std::vector<std::string>& args) {
  std::vector<char*> argv;
  for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
  argv.push_back(nullptr);
  posix_spawn_file_actions_t fa;
  posix_spawn_file_actions_init(&fa);
  posix_spawn_file_actions_addopen(&fa, STDIN_FILENO, "/dev/null", O_RDONLY, 0);
  pid_t pid = 0;
  const int rc = posix_spawn(&pid, args[0].c_str(), &fa, nullptr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&fa);
  if (rc != 0) throw SpawnError("cannot spawn " + args[0] + ": " + std::strerror(rc));
  return pid;
}

int wait_exit(pid_t pid) {
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0) {
    if (errno != EINTR) return -1;
  }
  return WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
}

std::vector<NodeStats> load_stats(const fs::path& dir) {
  std::vector<NodeStats> out;
  if (!fs::is_directory(dir)) throw IoError(dir.string() + " is not a directory");
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (name.rfind("node", 0) != 0 || !name.ends_with(".stats.json")) continue;
    std::ifstream in(e.path());
    std::stringstream ss;
    ss << in.rdbuf();
    out.push_back(parse_stats(ss.str()));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

// Concatenates node*.log into merged.log ordered by timestamp, then node id.
void merge_logs(const fs::path& dir) {
  struct Line {
    long t;
    unsigned node;
    std::string text;
  };
  std::vector<Line> lines;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (name.rfind("node", 0) != 0 || e.path().extension() != ".log") continue;
    std::ifstream in(e.path());
    for (std::string l; std::getline(in, l);) {
      std::istringstream ls(l);
      Line x{0, 0, l};
      ls >> x.t >> x.node;
      lines.push_back(std::move(x));
    }
  }
  std::stable_sort(lines.begin(), lines.end(),
                   [](const Line& a, const Line& b) { return std::tie(a.t, a.node) < std::tie(b.t, b.node); });
  std::ofstream out(dir / "merged.log");
  for (const auto& l : lines) out << l.text << '\n';
}

void append_csv(const fs::path& path, const std::vector<RunReport>& rows) {
  const bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) throw IoError("cannot write " + path.string());
  if (fresh) out << csv_header() << '\n';
  for (const auto& r : rows) out << csv_row(r) << '\n';
}

void print_report(const RunReport& r, const std::optional<std::string>& csv) {
  std::cout << summary(r) << csv_header() << '\n' << csv_row(r) << '\n';
  if (csv) append_csv(*csv, {r});
}

int run_udp(const ScenarioConfig& c, const fs::path& out_dir, const std::string& self,
            const std::optional<std::string>& csv) {
  fs::create_directories(out_dir);
  for (const auto& e : fs::directory_iterator(out_dir)) {
    if (e.path().filename().string().rfind("node", 0) == 0) fs::remove(e.path());
  }
  const auto shared = shared_args(c, out_dir);
  auto command = [&](std::vector<std::string> head) {
    head.insert(head.begin(), {self, "node"});
    head.insert(head.end(), shared.begin(), shared.end());
    return head;
  };

  std::vector<pid_t> pids;
  pids.push_back(spawn(command({"--type", "leading", "--id", "1", "--x", num(c.lead_x)})));
  Registry reg(c.registry_path);
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(5);
  for (;;) {
    const auto entries = reg.read();
    if (std::any_of(entries.begin(), entries.end(), [](const auto& e) { return e.node == kLeadId; })) break;
    int status = 0;
    if (::waitpid(pids[0], &status, WNOHANG) == pids[0]) throw SpawnError("leading node exited during startup");
    if (std::chrono::steady_clock::now() > deadline) throw SpawnError("leading node did not register");
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  for (std::size_t i = 0; i < c.n_followers; ++i) {
    std::vector<std::string> a{"--type",   "follow",
                               "--id",     std::to_string(i + 2),
                               "--x",      num(c.follower_start_x(i)),
                               "--speed",  num(c.follower_speed),
                               "--length", num(c.follower_length(i))};
    if (c.scripted) {
      a.insert(a.end(), {"--join-at", num(c.join_stagger_s * static_cast<double>(i)), "--leave-at",
                         num(c.leave_time_s())});
    }
    pids.push_back(spawn(command(a)));
  }
  int failures = 0;
  for (pid_t p : pids) failures += wait_exit(p) != 0;
  if (failures) {
    spdlog::error("{} node process(es) failed", failures);
    return 1;
  }
  merge_logs(out_dir);
  print_report(merge_stats(load_stats(out_dir)), csv);
  return 0;
}

int run_inproc(const ScenarioConfig& c, const std::optional<std::string>& log_path,
               const std::optional<std::string>& csv, std::optional<std::uint16_t> control_port, bool console,
               double speed) {
  Simulation sim(c);
  if (control_port || console) {
    LiveRunner runner(sim, speed);
    std::unique_ptr<ControlServer> server;
    if (control_port) {
      server = std::make_unique<ControlServer>(runner, c.host, *control_port);
      server->start();
      std::cerr << "control: ws://" << c.host << ':' << server->port() << '/' << std::endl;
    }
    if (console) {
      std::thread([&runner] {
        serve_console(runner, std::cin, std::cout);
      }).detach();
    }
    runner.run();
    if (server) server->stop();
  } else {
    sim.run();
  }
  if (log_path) sim.events().write(*log_path);
  print_report(sim.report(), csv);
  if (sim.overlap_violations() || sim.range_violations()) {
    spdlog::error("{} overlap and {} range violations", sim.overlap_violations(), sim.range_violations());
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Platooning VANET emulator: RBA flooding and OLSR-style MPR broadcast"};
  app.require_subcommand(1);
  std::string level = "warn";
  app.add_option("--log-level", level, "trace, debug, info, warn, error")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error"}));

  auto* sim_cmd = app.add_subcommand("simulate", "Run a full scenario");
  ScenarioFlags sim_flags;
  sim_flags.add_to(*sim_cmd);
  std::optional<std::string> log_path, csv_path;
  std::optional<std::uint16_t> control_port;
  bool console = false;
  double speed = 1.0;
  std::string out_dir = "vanet_udp_run";
  sim_cmd->add_option("--log", log_path, "Write the event log here");
  sim_cmd->add_option("--csv", csv_path, "Append the report row to this CSV");
  sim_cmd->add_option("--control-port", control_port, "Serve the WebSocket control API (0 = any port)");
  sim_cmd->add_flag("--console", console, "Read JOIN/LEAVE/SNAPSHOT lines from stdin");
  sim_cmd->add_option("--speed", speed, "Simulated seconds per wall second in live runs (0 = unpaced)");
  sim_cmd->add_option("--out-dir", out_dir, "Per-node logs and stats (udp)");

  auto* node_cmd = app.add_subcommand("node", "Run one vehicle as a UDP process");
  ScenarioFlags node_flags;
  node_flags.add_to(*node_cmd);
  std::string type;
  std::optional<unsigned> node_id;
  double x = 0.0, node_speed = 30.0, length = 5.0;
  std::string lane = "left";
  std::optional<double> join_at;
  bool node_console = false;
  std::string node_out = ".";
  node_cmd->add_option("--type", type, "leading or follow")->required()->check(CLI::IsMember({"leading", "follow"}));
  node_cmd->add_option("--id", node_id, "Node id (followers default to the next free id)");
  node_cmd->add_option("--x", x, "Start position in meters");
  node_cmd->add_option("--speed", node_speed, "Cruise speed in m/s");
  node_cmd->add_option("--length", length, "Vehicle length (5 or 10)")->check(CLI::IsMember({5.0, 10.0}));
  node_cmd->add_option("--lane", lane, "Start lane of a follower")->check(CLI::IsMember({"left", "right"}));
  node_cmd->add_option("--join-at", join_at, "Seconds after start to request JOIN");
  node_cmd->add_flag("--console", node_console, "Read join/leave/snapshot lines from stdin");
  node_cmd->add_option("--out-dir", node_out, "Where node<id>.log and node<id>.stats.json go");

  auto* report_cmd = app.add_subcommand("report", "Merge per-node stats of UDP runs into CSV rows");
  std::vector<std::string> dirs;
  std::optional<std::string> report_csv;
  report_cmd->add_option("dirs", dirs, "Run directories")->required()->check(CLI::ExistingDirectory);
  report_cmd->add_option("--csv", report_csv, "Append the rows to this CSV");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(level));

  try {
    if (*sim_cmd) {
      const ScenarioConfig c = sim_flags.resolve();
      if (c.transport == Transport::Udp) {
        return run_udp(c, out_dir, fs::canonical("/proc/self/exe").string(), csv_path);
      }
      return run_inproc(c, log_path, csv_path, control_port, console, speed);
    }
    if (*node_cmd) {
      UdpNodeOptions o;
      o.scenario = node_flags.resolve();
      const bool lead = type == "leading";
      if (lead) {
        if (node_id && *node_id != 1) throw ConfigError("the leading node is always node 1");
        o.id = kLeadId;
      } else if (node_id) {
        if (*node_id < 2) throw ConfigError("follower ids start at 2");
        o.id = node(*node_id);
      } else {
        unsigned next = 2;
        for (const auto& e : Registry(o.scenario.registry_path).read()) next = std::max(next, raw(e.node) + 1u);
        o.id = node(next);
      }
      o.x = x;
      o.lane = lane == "right" ? Lane::Right : Lane::Left;
      o.speed = node_speed;
      o.length = length;
      o.join_at_s = join_at;
      o.leave_at_s = node_flags.leave_at_s;
      o.console = node_console;
      o.out_dir = node_out;
      UdpNode n(o);
      spdlog::info("node {} on port {}", raw(o.id), n.port());
      n.run();
      return 0;
    }
    if (*report_cmd) {
      std::vector<RunReport> rows;
      for (const auto& d : dirs) {
        merge_logs(d);
        rows.push_back(merge_stats(load_stats(d)));
      }
      std::cout << csv_header() << '\n';
      for (const auto& r : rows) std::cout << csv_row(r) << '\n';
      if (report_csv) append_csv(*report_csv, rows);
      return 0;
    }
  } catch (const SpawnError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
