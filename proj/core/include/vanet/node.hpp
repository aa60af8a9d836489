#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "vanet/medium.hpp"
#include "vanet/olsr.hpp"
#include "vanet/platoon.hpp"
#include "vanet/rba.hpp"

namespace vanet {

struct Timers {
  Millis normal{10};
  Millis hello{20};
  Millis tc{30};
};

struct NodeConfig {
  Scheme scheme = Scheme::Mpr;
  Timers timers;
  olsr::Config olsr;
  platoon::FollowerConfig follower;
  platoon::LeadConfig lead;
  /// The lead's latency probe samples one NORMAL in this many.
  std::uint32_t echo_every = 10;
};

/// What a node needs from the network underneath it.
class Link {
 public:
  virtual ~Link() = default;
  /// `to` may be kBroadcast.
  virtual void send(NodeId from, NodeId to, const Packet& pkt, Millis now) = 0;
  /// Nodes currently within radio range (the neighbor relation used by flooding).
  virtual std::vector<NodeId> in_range(NodeId self) const = 0;
};

/// Hooks for event logging and measurement.
class NodeObserver {
 public:
  virtual ~NodeObserver() = default;
  virtual void event(Millis t, NodeId node, const std::string& text) = 0;
  virtual void normal_originated(NodeId source, std::uint32_t seq, Millis t) = 0;
  virtual void normal_accepted(NodeId receiver, NodeId source, std::uint32_t seq, Millis t) = 0;
  virtual void echo_returned(std::uint32_t seq, Millis sent, Millis back) = 0;
};

enum class CommandResult { Accepted, IllegalState, NoRoute, NotAFollower };

std::string_view to_string(CommandResult r);

/// One vehicle: protocol state, platooning logic and periodic traffic.
/// Transport-agnostic; the same class runs in-process and over UDP.
class VehicleNode {
 public:
  VehicleNode(NodeId id, NodeConfig cfg, platoon::Dynamics init, std::uint64_t seed, Link& link,
              NodeObserver& obs);

  NodeId id() const noexcept { return id_; }
  bool is_lead() const noexcept { return id_ == kLeadId; }
  const NodeConfig& config() const noexcept { return cfg_; }

  VehicleInfo info() const;
  Position position() const;
  VehicleMode mode() const;
  const platoon::Dynamics& dynamics() const;
  std::optional<NodeId> follow_target() const;
  /// Lead only; empty for followers.
  std::vector<NodeId> train() const;
  const platoon::Lead* lead() const { return std::get_if<platoon::Lead>(&role_); }
  const platoon::Follower* follower() const { return std::get_if<platoon::Follower>(&role_); }
  const olsr::State& olsr() const noexcept { return olsr_; }
  const platoon::PeerView& peers() const noexcept { return peers_; }

  void on_packet(const Packet& pkt, Millis now);
  /// Kinematics and application timeouts. Returns true if the lead crossed a zone boundary.
  bool physics(double dt, Millis now);
  /// Periodic NORMAL/HELLO/TC emission when due.
  void timers(Millis now);

  CommandResult join(Millis now);
  CommandResult leave(Millis now);

  /// True when MPR routing currently knows a way to `dest` (always true for flooding).
  bool has_route(NodeId dest, Millis now) const;

 private:
  void send_to_neighbors(const Packet& pkt, Millis now, NodeId except_a, NodeId except_b);
  std::vector<NodeId> forward_set(NodeId except_a, NodeId except_b) const;
  void originate_normal(Millis now);
  bool send_control(const platoon::Outgoing& o, Millis now);
  void flush(std::vector<platoon::Outgoing>& out, Millis now);
  void deliver(const Packet& pkt, Millis now);
  void on_normal(Packet pkt, Millis now);
  void on_control(Packet pkt, Millis now);
  void log_transitions(Millis now);
  void log(Millis now, const std::string& text) { obs_.event(now, id_, text); }

  NodeId id_;
  NodeConfig cfg_;
  Link& link_;
  NodeObserver& obs_;
  Rng rng_;
  SeqCounter seq_;
  olsr::State olsr_;
  rba::CacheTable data_cache_;
  rba::CacheTable control_cache_;
  platoon::PeerView peers_;
  std::variant<platoon::Lead, platoon::Follower> role_;
  Millis next_normal_{0};
  Millis next_hello_{0};
  Millis next_tc_{0};
  std::map<std::uint32_t, Millis> probes_;
};

}  // namespace vanet
