#include "oracles.hpp"

#include <algorithm>
#include <deque>

namespace vanet::oracle {

std::vector<Graph> all_connected_graphs(std::size_t n) {
  std::vector<std::pair<unsigned, unsigned>> pairs;
  for (unsigned i = 1; i <= n; ++i) {
    for (unsigned j = i + 1; j <= n; ++j) pairs.emplace_back(i, j);
  }
  std::vector<Graph> out;
  const std::uint64_t total = std::uint64_t{1} << pairs.size();
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    Graph g(n);
    for (std::size_t b = 0; b < pairs.size(); ++b) {
      if (mask & (std::uint64_t{1} << b)) g.connect(node(pairs[b].first), node(pairs[b].second));
    }
    if (g.connected()) out.push_back(std::move(g));
  }
  return out;
}

std::set<NodeId> strict_two_hop(const Graph& g, NodeId self) {
  std::set<NodeId> one;
  for (NodeId n : g.neighbors(self)) one.insert(n);
  std::set<NodeId> two;
  for (NodeId n : one) {
    for (NodeId m : g.neighbors(n)) {
      if (m != self && !one.contains(m)) two.insert(m);
    }
  }
  return two;
}

bool covers(const std::set<NodeId>& relays, const AccessMap& two_hop) {
  for (const auto& [id, access] : two_hop) {
    const bool hit = std::any_of(access.begin(), access.end(),
                                 [&](NodeId a) { return relays.contains(a); });
    if (!hit) return false;
  }
  return true;
}

std::optional<std::size_t> min_cover_size(const AccessMap& two_hop) {
  std::set<NodeId> pool;
  for (const auto& [id, access] : two_hop) {
    if (access.empty()) return std::nullopt;
    pool.insert(access.begin(), access.end());
  }
  const std::vector<NodeId> cand(pool.begin(), pool.end());
  std::optional<std::size_t> best;
  const std::uint64_t total = std::uint64_t{1} << cand.size();
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    std::set<NodeId> pick;
    for (std::size_t b = 0; b < cand.size(); ++b) {
      if (mask & (std::uint64_t{1} << b)) pick.insert(cand[b]);
    }
    if (covers(pick, two_hop) && (!best || pick.size() < *best)) best = pick.size();
  }
  return best;
}

std::vector<std::vector<int>> all_pairs_hops(std::size_t n,
                                             const std::set<std::pair<NodeId, NodeId>>& edges) {
  std::vector<std::vector<int>> d(n + 1, std::vector<int>(n + 1, kUnreachable));
  for (std::size_t i = 0; i <= n; ++i) d[i][i] = 0;
  for (const auto& [a, b] : edges) {
    if (a == b) continue;
    d[raw(a)][raw(b)] = 1;
    d[raw(b)][raw(a)] = 1;
  }
  for (std::size_t k = 1; k <= n; ++k) {
    for (std::size_t i = 1; i <= n; ++i) {
      for (std::size_t j = 1; j <= n; ++j) {
        d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
      }
    }
  }
  return d;
}

std::set<NodeId> reachable(const Graph& g, NodeId src) {
  std::set<NodeId> seen{src};
  std::deque<NodeId> q{src};
  while (!q.empty()) {
    const NodeId u = q.front();
    q.pop_front();
    for (NodeId v : g.neighbors(u)) {
      if (seen.insert(v).second) q.push_back(v);
    }
  }
  seen.erase(src);
  return seen;
}

}  // namespace vanet::oracle
