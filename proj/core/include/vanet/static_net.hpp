#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <vector>

#include "vanet/olsr.hpp"
#include "vanet/rba.hpp"

namespace vanet {

/// Undirected graph over nodes 1..size(); adjacency is symmetric.
class Graph {
 public:
  explicit Graph(std::size_t n) : n_(n), adj_(n * n, false) {}

  std::size_t size() const noexcept { return n_; }
  void connect(NodeId a, NodeId b);
  bool linked(NodeId a, NodeId b) const;
  std::vector<NodeId> neighbors(NodeId a) const;
  std::vector<NodeId> nodes() const;
  bool connected() const;

  /// Random geometric graph: points uniform in a width x height box, linked within `range`.
  static Graph random_geometric(std::size_t n, double width, double height, double range, Rng& rng);

 private:
  std::size_t idx(NodeId a) const { return raw(a) - 1u; }

  std::size_t n_;
  std::vector<bool> adj_;
};

enum class BroadcastMode { Flooding, Mpr };

struct DisseminationResult {
  std::size_t transmissions = 0;
  std::set<NodeId> reached;
  /// First-time accepts per node (ForwardNew under flooding, fresh under MPR).
  std::map<NodeId, int> fresh_accepts;
};

/// Protocol nodes on a fixed graph with lossless unit-delay links. Drives the
/// real HELLO/TC/RBA handlers, so convergence and dissemination exercise the
/// same code the simulator runs.
class StaticNetwork {
 public:
  StaticNetwork(Graph graph, olsr::Config cfg, std::uint64_t seed);

  const Graph& graph() const noexcept { return graph_; }
  olsr::State& state(NodeId id) { return nodes_.at(id).olsr; }
  const olsr::State& state(NodeId id) const { return nodes_.at(id).olsr; }

  /// Synchronous HELLO rounds: every node emits, then all copies are processed.
  /// `on_update` (if set) runs after each processed HELLO.
  template <typename F>
  void exchange_hellos(int rounds, F&& on_update);
  void exchange_hellos(int rounds) {
    exchange_hellos(rounds, [](NodeId, const olsr::HelloUpdate&) {});
  }

  /// Every node with selectors originates one TC, diffused through relays.
  void exchange_tcs(int rounds);

  DisseminationResult disseminate(NodeId origin, BroadcastMode mode);

  Millis now() const noexcept { return now_; }

 private:
  struct Node {
    explicit Node(NodeId id, olsr::Config cfg, std::uint64_t seed) : olsr(id, cfg), rng(seed) {}
    olsr::State olsr;
    rba::CacheTable cache;
    SeqCounter seq;
    Rng rng;
  };

  struct InFlight {
    NodeId to;
    Packet pkt;
  };

  void hello_round(const std::function<void(NodeId, const olsr::HelloUpdate&)>& on_update);

  Graph graph_;
  std::map<NodeId, Node> nodes_;
  Millis now_{0};
};

template <typename F>
void StaticNetwork::exchange_hellos(int rounds, F&& on_update) {
  for (int i = 0; i < rounds; ++i) hello_round(on_update);
}

}  // namespace vanet
