#include "vanet/static_net.hpp"

#include <cmath>
#include <deque>
#include <functional>

namespace vanet {

void Graph::connect(NodeId a, NodeId b) {
  if (a == b) return;
  adj_[idx(a) * n_ + idx(b)] = true;
  adj_[idx(b) * n_ + idx(a)] = true;
}

bool Graph::linked(NodeId a, NodeId b) const { return adj_[idx(a) * n_ + idx(b)]; }

std::vector<NodeId> Graph::neighbors(NodeId a) const {
  std::vector<NodeId> out;
  for (std::size_t j = 0; j < n_; ++j) {
    if (adj_[idx(a) * n_ + j]) out.push_back(node(static_cast<unsigned>(j + 1)));
  }
  return out;
}

std::vector<NodeId> Graph::nodes() const {
  std::vector<NodeId> out;
  for (std::size_t i = 1; i <= n_; ++i) out.push_back(node(static_cast<unsigned>(i)));
  return out;
}

bool Graph::connected() const {
  if (n_ == 0) return true;
  std::vector<bool> seen(n_, false);
  std::deque<std::size_t> q{0};
  seen[0] = true;
  std::size_t count = 1;
  while (!q.empty()) {
    const std::size_t u = q.front();
    q.pop_front();
    for (std::size_t v = 0; v < n_; ++v) {
      if (adj_[u * n_ + v] && !seen[v]) {
        seen[v] = true;
        ++count;
        q.push_back(v);
      }
    }
  }
  return count == n_;
}

Graph Graph::random_geometric(std::size_t n, double width, double height, double range, Rng& rng) {
  std::vector<std::pair<double, double>> pts(n);
  for (auto& p : pts) p = {uniform01(rng) * width, uniform01(rng) * height};
  Graph g(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = std::hypot(pts[i].first - pts[j].first, pts[i].second - pts[j].second);
      if (d <= range) g.connect(node(static_cast<unsigned>(i + 1)), node(static_cast<unsigned>(j + 1)));
    }
  }
  return g;
}

StaticNetwork::StaticNetwork(Graph graph, olsr::Config cfg, std::uint64_t seed)
    : graph_(std::move(graph)) {
  // Static links never age out here.
  cfg.neighbor_hold = Millis{1'000'000'000};
  cfg.topology_hold = Millis{1'000'000'000};
  for (NodeId id : graph_.nodes()) nodes_.emplace(id, Node(id, cfg, derive_seed(seed, raw(id))));
}

void StaticNetwork::hello_round(
    const std::function<void(NodeId, const olsr::HelloUpdate&)>& on_update) {
  std::vector<Packet> hellos;
  for (auto& [id, n] : nodes_) hellos.push_back(olsr::generate_hello(n.olsr));
  now_ += Millis{20};
  for (const Packet& h : hellos) {
    for (NodeId r : graph_.neighbors(h.header.source)) {
      Node& rx = nodes_.at(r);
      const auto up = olsr::process_hello(rx.olsr, h, now_, rx.rng);
      on_update(r, up);
    }
  }
}

void StaticNetwork::exchange_tcs(int rounds) {
  for (int i = 0; i < rounds; ++i) {
    std::deque<InFlight> queue;
    for (auto& [id, n] : nodes_) {
      if (auto tc = olsr::generate_tc(n.olsr, n.seq)) {
        for (NodeId nb : n.olsr.neighbors.symmetric_neighbors()) queue.push_back({nb, *tc});
      }
    }
    now_ += Millis{30};
    while (!queue.empty()) {
      InFlight f = std::move(queue.front());
      queue.pop_front();
      Node& rx = nodes_.at(f.to);
      const NodeId from = f.pkt.header.prev_hop;
      const auto fwd = olsr::forward_decision(rx.olsr, f.pkt);
      if (fwd == olsr::Forward::Drop) continue;
      olsr::process_tc(rx.olsr.topology, f.pkt, now_, rx.olsr.cfg.topology_hold);
      if (fwd == olsr::Forward::Retransmit) {
        f.pkt.header.prev_hop = f.to;
        for (NodeId nb : rx.olsr.neighbors.symmetric_neighbors()) {
          if (nb != from && nb != f.pkt.header.source) queue.push_back({nb, f.pkt});
        }
      }
    }
  }
}

DisseminationResult StaticNetwork::disseminate(NodeId origin, BroadcastMode mode) {
  DisseminationResult res;
  Node& src = nodes_.at(origin);
  const Packet pkt = make_packet(PacketKind::Normal, src.seq.next(PacketKind::Normal), origin,
                                 kBroadcast, VehicleInfo{});

  std::deque<InFlight> queue;
  auto send = [&](NodeId to, const Packet& p) {
    ++res.transmissions;
    queue.push_back({to, p});
  };

  const std::vector<NodeId> first_hops = mode == BroadcastMode::Mpr
                                             ? src.olsr.neighbors.symmetric_neighbors()
                                             : graph_.neighbors(origin);
  for (NodeId nb : first_hops) send(nb, pkt);

  while (!queue.empty()) {
    InFlight f = std::move(queue.front());
    queue.pop_front();
    Node& rx = nodes_.at(f.to);
    if (f.to != origin) res.reached.insert(f.to);

    if (mode == BroadcastMode::Flooding) {
      const auto out = rba::on_receive(f.to, rx.cache, f.pkt, rx.rng);
      if (out.decision == rba::Decision::ForwardNew) ++res.fresh_accepts[f.to];
      if (!out.forwards()) continue;
      for (NodeId nb : graph_.neighbors(f.to)) {
        if (nb != out.received_from) send(nb, f.pkt);
      }
    } else {
      const NodeId from = f.pkt.header.prev_hop;
      const auto fwd = olsr::forward_decision(rx.olsr, f.pkt);
      if (fwd == olsr::Forward::Drop) continue;
      ++res.fresh_accepts[f.to];
      if (fwd != olsr::Forward::Retransmit) continue;
      f.pkt.header.prev_hop = f.to;
      for (NodeId nb : rx.olsr.neighbors.symmetric_neighbors()) {
        if (nb != from && nb != f.pkt.header.source) send(nb, f.pkt);
      }
    }
  }
  return res;
}

}  // namespace vanet
