#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "vanet/medium.hpp"
#include "vanet/packet.hpp"

namespace vanet::olsr {

enum class TieBreak {
  Random,    // seeded per-node stream
  LowestId,  // deterministic, for golden traces
};

struct Config {
  /// One-hop entries live for five HELLO periods.
  Millis neighbor_hold{100};
  /// Topology entries live for three TC periods.
  Millis topology_hold{90};
  TieBreak tie_break = TieBreak::Random;
};

struct OneHopEntry {
  NodeId neighbor{};
  LinkStatus status = LinkStatus::Uni;
  Millis expires_at{0};
};

struct TwoHopEntry {
  NodeId neighbor{};
  /// Symmetric one-hop neighbors through which `neighbor` is reached. Never empty.
  std::set<NodeId> access_through;
};

struct NeighborTable {
  std::map<NodeId, OneHopEntry> one_hop;
  std::map<NodeId, TwoHopEntry> two_hop;
  std::uint32_t table_seq = 0;

  bool is_symmetric(NodeId n) const;
  std::vector<NodeId> symmetric_neighbors() const;
  std::set<NodeId> mprs() const;
};

struct TopologyEntry {
  NodeId originator{};
  std::set<NodeId> selectors;
  std::uint32_t last_seq = 0;
  Millis expires_at{0};
};

using TopologyTable = std::map<NodeId, TopologyEntry>;

struct RouteEntry {
  NodeId dest{};
  NodeId next_hop{};
  std::uint32_t distance = 0;

  friend bool operator==(const RouteEntry&, const RouteEntry&) = default;
};

using RoutingTable = std::map<NodeId, RouteEntry>;

/// Everything one node knows about its neighborhood and the network topology.
struct State {
  State(NodeId self, Config cfg) : self(self), cfg(cfg) {}

  NodeId self;
  Config cfg;
  NeighborTable neighbors;
  /// Neighbors that picked this node as one of their relays.
  std::set<NodeId> selectors;
  TopologyTable topology;
  /// Largest diffused sequence seen per source, per counter class.
  std::map<NodeId, std::uint32_t> data_seen;
  std::map<NodeId, std::uint32_t> tc_seen;
};

// --- neighbor sensing -------------------------------------------------------

/// Current one-hop view with statuses, in node order. Header seq is always 0.
Packet generate_hello(const State& st);

enum class HelloResult { Processed, IgnoredSelf };

struct HelloUpdate {
  HelloResult result = HelloResult::Processed;
  /// Neighbor table content changed (one-hop, two-hop, statuses or selectors).
  bool changed = false;
  /// MPR set, a link status, one-hop membership or the selector set changed;
  /// exactly the cases that bump table_seq.
  bool seq_bumped = false;
};

HelloUpdate process_hello(State& st, const Packet& hello, Millis now, Rng& rng);

/// Greedy cover of the strict two-hop set: the two-hop neighbor with the
/// fewest access-through links picks first.
std::set<NodeId> select_mprs(const NeighborTable& table, Rng& rng, TieBreak tie_break);

/// Drops one-hop entries past their holding time (and everything that hung off
/// them) and topology entries past theirs. Returns true if table_seq moved.
bool expire(State& st, Millis now, Rng& rng);

// --- diffusion --------------------------------------------------------------

enum class Forward { Drop, Consume, Retransmit };

/// Duplicate suppression plus the relay rule for NORMAL and TC packets.
/// Retransmit implies Consume.
Forward forward_decision(State& st, const Packet& pkt);

// --- topology control and routing -----------------------------------------

/// None when no neighbor has selected this node. tc_seq mirrors table_seq.
std::optional<Packet> generate_tc(const State& st, SeqCounter& seq);

enum class TcResult { Inserted, Replaced, Refreshed, Ignored };

TcResult process_tc(TopologyTable& topo, const Packet& tc, Millis now, Millis hold);

/// Breadth-first search over self's symmetric links plus every live
/// originator-selector pair, treated as undirected.
RoutingTable compute_routes(NodeId self, const NeighborTable& nb, const TopologyTable& topo,
                            Millis now);

enum class RouteKind { DeliverLocal, ForwardTo, NoRoute };

struct RouteDecision {
  RouteKind kind = RouteKind::NoRoute;
  NodeId next_hop{};
};

/// On ForwardTo the packet's prev_hop is rewritten to self.
RouteDecision route_unicast(const State& st, Packet& pkt, Millis now);

/// Two-section neighbor table listing, one-hop statuses then two-hop relays.
std::string dump_neighbor_table(const State& st);

}  // namespace vanet::olsr
