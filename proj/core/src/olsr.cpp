#include "vanet/olsr.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

namespace vanet::olsr {

bool NeighborTable::is_symmetric(NodeId n) const {
  auto it = one_hop.find(n);
  return it != one_hop.end() && vanet::is_symmetric(it->second.status);
}

std::vector<NodeId> NeighborTable::symmetric_neighbors() const {
  std::vector<NodeId> out;
  for (const auto& [id, e] : one_hop) {
    if (vanet::is_symmetric(e.status)) out.push_back(id);
  }
  return out;
}

std::set<NodeId> NeighborTable::mprs() const {
  std::set<NodeId> out;
  for (const auto& [id, e] : one_hop) {
    if (e.status == LinkStatus::Mpr) out.insert(id);
  }
  return out;
}

namespace {

using StatusMap = std::map<NodeId, LinkStatus>;

StatusMap statuses(const NeighborTable& t) {
  StatusMap out;
  for (const auto& [id, e] : t.one_hop) out.emplace(id, e.status);
  return out;
}

void drop_access_point(NeighborTable& t, NodeId via) {
  for (auto it = t.two_hop.begin(); it != t.two_hop.end();) {
    it->second.access_through.erase(via);
    it = it->second.access_through.empty() ? t.two_hop.erase(it) : std::next(it);
  }
}

/// Reselects relays and relabels symmetric links. Returns true if table_seq moved.
bool reselect(State& st, const StatusMap& before, const std::set<NodeId>& selectors_before,
              Rng& rng) {
  NeighborTable& t = st.neighbors;
  const std::set<NodeId> chosen = select_mprs(t, rng, st.cfg.tie_break);
  for (auto& [id, e] : t.one_hop) {
    if (vanet::is_symmetric(e.status)) e.status = chosen.contains(id) ? LinkStatus::Mpr : LinkStatus::Bi;
  }
  const bool bump = statuses(t) != before || st.selectors != selectors_before;
  if (bump) ++t.table_seq;
  return bump;
}

}  // namespace

Packet generate_hello(const State& st) {
  HelloPayload h;
  h.neighbors.reserve(st.neighbors.one_hop.size());
  for (const auto& [id, e] : st.neighbors.one_hop) h.neighbors.push_back({id, e.status});
  return make_packet(PacketKind::Hello, 0, st.self, kBroadcast, std::move(h));
}

HelloUpdate process_hello(State& st, const Packet& hello, Millis now, Rng& rng) {
  HelloUpdate up;
  const NodeId sender = hello.header.source;
  if (sender == st.self) {
    up.result = HelloResult::IgnoredSelf;
    return up;
  }
  expire(st, now, rng);

  NeighborTable& t = st.neighbors;
  const auto& listed = std::get<HelloPayload>(hello.payload).neighbors;
  const StatusMap status_before = statuses(t);
  const std::set<NodeId> selectors_before = st.selectors;
  const std::map<NodeId, TwoHopEntry> two_hop_before = t.two_hop;

  // (1) the sender is one hop away now, whatever it was before
  t.two_hop.erase(sender);

  // (2) link to the sender and the selector bit
  bool self_listed = false;
  bool self_as_mpr = false;
  for (const auto& e : listed) {
    if (e.neighbor == st.self) {
      self_listed = true;
      self_as_mpr = e.status == LinkStatus::Mpr;
    }
  }
  auto [slot, inserted] = t.one_hop.try_emplace(sender);
  OneHopEntry& link = slot->second;
  const bool was_symmetric = !inserted && vanet::is_symmetric(link.status);
  link.neighbor = sender;
  link.expires_at = now + st.cfg.neighbor_hold;
  if (!self_listed) {
    link.status = LinkStatus::Uni;
  } else if (!was_symmetric) {
    link.status = LinkStatus::Bi;
  }
  if (self_as_mpr) {
    st.selectors.insert(sender);
  } else {
    st.selectors.erase(sender);
  }

  // (3) withdraw the sender as access point for two-hop nodes it no longer reaches
  if (!self_listed) {
    drop_access_point(t, sender);
  } else if (was_symmetric) {
    std::set<NodeId> reachable;
    for (const auto& e : listed) {
      if (vanet::is_symmetric(e.status)) reachable.insert(e.neighbor);
    }
    for (auto it = t.two_hop.begin(); it != t.two_hop.end();) {
      if (!reachable.contains(it->first)) it->second.access_through.erase(sender);
      it = it->second.access_through.empty() ? t.two_hop.erase(it) : std::next(it);
    }
  }

  // (4) the sender's symmetric neighbors become (or stay) two-hop via the sender
  if (self_listed) {
    for (const auto& e : listed) {
      if (!vanet::is_symmetric(e.status) || e.neighbor == st.self) continue;
      if (t.one_hop.contains(e.neighbor)) continue;
      auto& two = t.two_hop[e.neighbor];
      two.neighbor = e.neighbor;
      two.access_through.insert(sender);
    }
  }

  // (5) relays are reselected only when something moved
  auto two_hop_changed = [&] {
    if (two_hop_before.size() != t.two_hop.size()) return true;
    for (const auto& [id, e] : t.two_hop) {
      auto it = two_hop_before.find(id);
      if (it == two_hop_before.end() || it->second.access_through != e.access_through) return true;
    }
    return false;
  };
  up.changed = statuses(t) != status_before || st.selectors != selectors_before || two_hop_changed();
  if (up.changed) up.seq_bumped = reselect(st, status_before, selectors_before, rng);
  return up;
}

std::set<NodeId> select_mprs(const NeighborTable& table, Rng& rng, TieBreak tie_break) {
  struct Candidate {
    NodeId id;
    std::vector<NodeId> access;
  };
  std::vector<Candidate> order;
  order.reserve(table.two_hop.size());
  for (const auto& [id, e] : table.two_hop) {
    Candidate c{id, {}};
    for (NodeId a : e.access_through) {
      if (table.is_symmetric(a)) c.access.push_back(a);
    }
    if (!c.access.empty()) order.push_back(std::move(c));
  }
  std::stable_sort(order.begin(), order.end(), [](const Candidate& a, const Candidate& b) {
    return a.access.size() != b.access.size() ? a.access.size() < b.access.size() : a.id < b.id;
  });

  std::set<NodeId> chosen;
  for (const auto& c : order) {
    const bool covered =
        std::any_of(c.access.begin(), c.access.end(), [&](NodeId a) { return chosen.contains(a); });
    if (covered) continue;
    if (tie_break == TieBreak::LowestId) {
      chosen.insert(c.access.front());
    } else {
      const auto pick = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(c.access.size()));
      chosen.insert(c.access[std::min(pick, c.access.size() - 1)]);
    }
  }
  return chosen;
}

bool expire(State& st, Millis now, Rng& rng) {
  for (auto it = st.topology.begin(); it != st.topology.end();) {
    it = it->second.expires_at <= now ? st.topology.erase(it) : std::next(it);
  }

  NeighborTable& t = st.neighbors;
  std::vector<NodeId> gone;
  for (const auto& [id, e] : t.one_hop) {
    if (e.expires_at <= now) gone.push_back(id);
  }
  if (gone.empty()) return false;

  const StatusMap status_before = statuses(t);
  const std::set<NodeId> selectors_before = st.selectors;
  for (NodeId id : gone) {
    t.one_hop.erase(id);
    st.selectors.erase(id);
    drop_access_point(t, id);
  }
  return reselect(st, status_before, selectors_before, rng);
}

Forward forward_decision(State& st, const Packet& pkt) {
  const PacketHeader& h = pkt.header;
  if (h.source == st.self) return Forward::Drop;
  auto& seen = h.kind == PacketKind::Tc ? st.tc_seen : st.data_seen;
  auto [it, inserted] = seen.try_emplace(h.source, h.seq);
  if (!inserted) {
    if (h.seq <= it->second) return Forward::Drop;
    it->second = h.seq;
  }
  return st.selectors.contains(h.prev_hop) ? Forward::Retransmit : Forward::Consume;
}

std::optional<Packet> generate_tc(const State& st, SeqCounter& seq) {
  if (st.selectors.empty()) return std::nullopt;
  TcPayload tc;
  tc.tc_seq = st.neighbors.table_seq;
  tc.selectors.assign(st.selectors.begin(), st.selectors.end());
  return make_packet(PacketKind::Tc, seq.next(PacketKind::Tc), st.self, kBroadcast, std::move(tc));
}

TcResult process_tc(TopologyTable& topo, const Packet& tc, Millis now, Millis hold) {
  const auto& body = std::get<TcPayload>(tc.payload);
  const NodeId origin = tc.header.source;
  auto it = topo.find(origin);
  if (it == topo.end()) {
    topo.emplace(origin, TopologyEntry{origin, {body.selectors.begin(), body.selectors.end()},
                                       body.tc_seq, now + hold});
    return TcResult::Inserted;
  }
  TopologyEntry& e = it->second;
  if (body.tc_seq > e.last_seq) {
    e.selectors = {body.selectors.begin(), body.selectors.end()};
    e.last_seq = body.tc_seq;
    e.expires_at = now + hold;
    return TcResult::Replaced;
  }
  if (body.tc_seq == e.last_seq) {
    e.expires_at = now + hold;
    return TcResult::Refreshed;
  }
  return TcResult::Ignored;
}

RoutingTable compute_routes(NodeId self, const NeighborTable& nb, const TopologyTable& topo,
                            Millis now) {
  std::map<NodeId, std::set<NodeId>> adj;
  for (const auto& [origin, e] : topo) {
    if (e.expires_at <= now) continue;
    for (NodeId s : e.selectors) {
      if (s == origin) continue;
      adj[origin].insert(s);
      adj[s].insert(origin);
    }
  }

  RoutingTable routes;
  std::deque<NodeId> frontier;
  for (NodeId n : nb.symmetric_neighbors()) {
    if (nb.one_hop.at(n).expires_at <= now) continue;
    routes.emplace(n, RouteEntry{n, n, 1});
    frontier.push_back(n);
  }
  while (!frontier.empty()) {
    const NodeId u = frontier.front();
    frontier.pop_front();
    auto it = adj.find(u);
    if (it == adj.end()) continue;
    const RouteEntry via = routes.at(u);
    for (NodeId v : it->second) {
      if (v == self || routes.contains(v)) continue;
      routes.emplace(v, RouteEntry{v, via.next_hop, via.distance + 1});
      frontier.push_back(v);
    }
  }
  return routes;
}

RouteDecision route_unicast(const State& st, Packet& pkt, Millis now) {
  if (pkt.header.dest == st.self) return {RouteKind::DeliverLocal, st.self};
  const RoutingTable routes = compute_routes(st.self, st.neighbors, st.topology, now);
  auto it = routes.find(pkt.header.dest);
  if (it == routes.end()) return {RouteKind::NoRoute, {}};
  pkt.header.prev_hop = st.self;
  return {RouteKind::ForwardTo, it->second.next_hop};
}

std::string dump_neighbor_table(const State& st) {
  std::ostringstream out;
  const std::string self = to_string(st.self);
  out << "Node " << self << "'s One-Hop Neighbors\n";
  out << "Node ID\tStatus\n";
  for (const auto& [id, e] : st.neighbors.one_hop) out << raw(id) << '\t' << to_string(e.status) << '\n';
  out << "Node " << self << "'s TWO-Hop Neighbors\n";
  out << "Node ID\tAccess Through (MPR)\n";
  const std::set<NodeId> mprs = st.neighbors.mprs();
  for (const auto& [id, e] : st.neighbors.two_hop) {
    out << raw(id) << '\t';
    bool first = true;
    for (NodeId a : e.access_through) {
      if (!mprs.contains(a)) continue;
      out << (first ? "" : " ") << raw(a);
      first = false;
    }
    out << '\n';
  }
  out << "Sequence\t" << st.neighbors.table_seq << '\n';
  return out.str();
}

}  // namespace vanet::olsr
