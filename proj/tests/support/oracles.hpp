#pragma once

// Independent reference computations used by the tests. None of these touch
// the protocol code paths they are checked against.

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "vanet/static_net.hpp"

namespace vanet::oracle {

using AccessMap = std::map<NodeId, std::set<NodeId>>;

/// Every labelled connected graph on n nodes (n <= 6 keeps this tractable).
std::vector<Graph> all_connected_graphs(std::size_t n);

/// Nodes exactly two hops from `self` in the true graph.
std::set<NodeId> strict_two_hop(const Graph& g, NodeId self);

bool covers(const std::set<NodeId>& relays, const AccessMap& two_hop);

/// Smallest relay set covering every two-hop entry, by exhaustive subset search.
/// Empty optional when some entry has no access point at all.
std::optional<std::size_t> min_cover_size(const AccessMap& two_hop);

inline constexpr int kUnreachable = std::numeric_limits<int>::max() / 4;

/// All-pairs hop counts (Floyd-Warshall) over an undirected edge list on ids 1..n.
std::vector<std::vector<int>> all_pairs_hops(std::size_t n,
                                             const std::set<std::pair<NodeId, NodeId>>& edges);

/// Nodes reachable from `src` (excluding it).
std::set<NodeId> reachable(const Graph& g, NodeId src);

}  // namespace vanet::oracle
