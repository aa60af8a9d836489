#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vanet/medium.hpp"
#include "vanet/metrics.hpp"
#include "vanet/node.hpp"
#include "vanet/scenario.hpp"

namespace vanet {

/// Newline-delimited `<t_ms> <node> <text>` records. Node 0 marks run-level lines.
class EventLog {
 public:
  void add(Millis t, NodeId node, std::string text);
  const std::vector<std::string>& lines() const noexcept { return lines_; }
  std::string str() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> lines_;
};

struct VehicleSnapshot {
  NodeId id{};
  double x = 0.0;
  Lane lane = Lane::Right;
  double v = 0.0;
  double length = 0.0;
  VehicleMode mode = VehicleMode::Free;
  std::optional<NodeId> target;
  std::vector<NodeId> mprs;
  std::uint32_t table_seq = 0;
};

struct Snapshot {
  Millis t{0};
  Scheme mode = Scheme::Mpr;
  bool paused = false;
  std::vector<VehicleSnapshot> vehicles;
  std::vector<NodeId> train;
};

inline constexpr int kSnapshotSchema = 1;

std::string to_json(const Snapshot& s);

struct CommandReply {
  bool ok = false;
  /// "UnknownNode", "IllegalState" or "NoRoute" when !ok.
  std::string error;
  std::string detail;
  std::optional<Snapshot> snapshot;
};

std::string to_json(const ControlCommand& cmd, const CommandReply& reply);

/// Deterministic in-process run: one event loop, virtual clock in 1 ms steps.
class Simulation {
 public:
  explicit Simulation(ScenarioConfig cfg);
  ~Simulation();
  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  const ScenarioConfig& config() const noexcept { return cfg_; }
  Millis now() const noexcept { return now_; }
  Millis end() const noexcept { return end_; }
  bool finished() const noexcept { return now_ >= end_; }
  bool paused() const noexcept { return paused_; }

  /// Advances one millisecond unless paused.
  void step();
  void run_until(Millis t);
  /// Runs to the configured duration and returns the report.
  RunReport run();
  RunReport report() const;

  CommandReply handle_command(const ControlCommand& cmd);
  Snapshot snapshot() const;

  const EventLog& events() const noexcept { return log_; }
  const MetricsCollector& metrics() const noexcept { return metrics_; }
  const InprocMedium& medium() const noexcept { return medium_; }
  const std::vector<std::unique_ptr<VehicleNode>>& nodes() const noexcept { return nodes_; }
  const VehicleNode& vehicle(NodeId id) const;
  std::vector<NodeId> train() const;

  /// Called after every physics tick.
  void on_tick(std::function<void(const Simulation&)> f) { tick_hooks_.push_back(std::move(f)); }

  std::size_t overlap_violations() const noexcept { return overlaps_; }
  std::size_t range_violations() const noexcept { return range_violations_; }

 private:
  class SimLink;
  class SimObserver;
  struct ScriptState {
    bool managed = true;
    Millis next_try{0};
  };

  VehicleNode& mut(NodeId id);
  void physics_tick();
  void run_script();
  void check_overlap();
  void refresh_components();

  ScenarioConfig cfg_;
  Millis now_{0};
  Millis end_{0};
  Millis tick_{10};
  bool paused_ = false;
  InprocMedium medium_;
  MetricsCollector metrics_;
  EventLog log_;
  std::unique_ptr<SimLink> link_;
  std::unique_ptr<SimObserver> observer_;
  std::vector<std::unique_ptr<VehicleNode>> nodes_;
  std::vector<ScriptState> script_;
  std::vector<std::size_t> component_size_;
  std::size_t next_command_ = 0;
  std::vector<TimedCommand> trace_;
  std::vector<std::function<void(const Simulation&)>> tick_hooks_;
  std::size_t overlaps_ = 0;
  std::size_t range_violations_ = 0;
};

/// Builds the per-node configuration a scenario implies.
NodeConfig node_config(const ScenarioConfig& cfg);
platoon::Dynamics initial_dynamics(const ScenarioConfig& cfg, NodeId id);

}  // namespace vanet
