#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vanet/metrics.hpp"
#include "vanet/registry.hpp"
#include "vanet/scenario.hpp"

namespace vanet {

/// Counters one UDP node writes when it exits; `report` merges them.
struct NodeStats {
  NodeId id{};
  Scheme mode = Scheme::Mpr;
  double duration_s = 0.0;
  std::uint64_t total_tx = 0;
  std::uint64_t received_bytes = 0;
  std::uint64_t originated = 0;
  /// Sum over originations of the receivers reachable at that moment.
  std::uint64_t expected = 0;
  /// Distinct NORMALs from other nodes accepted here.
  std::uint64_t delivered = 0;
  std::uint64_t link_attempts = 0;
  std::uint64_t link_losses = 0;
  double link_loss_p_sum = 0.0;
  std::uint64_t decode_errors = 0;
  std::vector<EchoPair> echoes;
};

std::string to_json(const NodeStats& s);
/// Throws ParseError.
NodeStats parse_stats(const std::string& text);
/// Throws ParseError when `stats` is empty.
RunReport merge_stats(const std::vector<NodeStats>& stats);

struct UdpNodeOptions {
  /// Mode, medium, timers, registry, ports, seed and duration come from here.
  ScenarioConfig scenario;
  NodeId id = kLeadId;
  double x = 0.0;
  Lane lane = Lane::Left;
  double speed = 30.0;
  double length = 5.0;
  /// Follower script; unset means never.
  std::optional<double> join_at_s;
  std::optional<double> leave_at_s;
  /// node<id>.log and node<id>.stats.json are written here.
  std::filesystem::path out_dir = ".";
  /// Accept `join` / `leave` / `snapshot` lines on stdin.
  bool console = false;
};

std::uint16_t node_port(const ScenarioConfig& cfg, NodeId id);
/// Lane from a registry y coordinate (the lateral offset).
Lane lane_from_y(double y) noexcept;

/// One vehicle as its own process: a single-threaded loop over one UDP socket
/// with the shared registry file as the only directory of peers.
class UdpNode {
 public:
  /// Lead: truncates the registry. Follower: throws SpawnError when no lead
  /// is registered. Throws SpawnError when the port cannot be bound.
  explicit UdpNode(UdpNodeOptions opts);
  ~UdpNode();
  UdpNode(const UdpNode&) = delete;
  UdpNode& operator=(const UdpNode&) = delete;

  std::uint16_t port() const noexcept;
  /// Runs for the configured duration (wall clock) or until `stop` is set,
  /// then writes the log and stats files.
  NodeStats run(const std::atomic<bool>* stop = nullptr);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace vanet
