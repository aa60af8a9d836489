#include <gtest/gtest.h>

#include <algorithm>

#include "oracles.hpp"
#include "printers.hpp"
#include "vanet/olsr.hpp"
#include "vanet/static_net.hpp"

namespace vanet {
namespace {


constexpr Millis kNow{1000};

Packet hello(unsigned from, std::vector<HelloEntry> entries) {
  return make_packet(PacketKind::Hello, 0, node(from), kBroadcast, HelloPayload{std::move(entries)});
}

olsr::NeighborTable table_with(std::map<unsigned, std::set<unsigned>> two_hop) {
  olsr::NeighborTable t;
  for (const auto& [id, access] : two_hop) {
    olsr::TwoHopEntry e{node(id), {}};
    for (unsigned a : access) {
      e.access_through.insert(node(a));
      t.one_hop[node(a)] = {node(a), LinkStatus::Bi, Millis{1'000'000}};
    }
    t.two_hop[node(id)] = e;
  }
  return t;
}

olsr::State make_state(unsigned self) {
  olsr::Config cfg;
  cfg.tie_break = olsr::TieBreak::LowestId;
  return olsr::State(node(self), cfg);
}

// --- neighbor sensing -------------------------------------------------------

TEST(Hello, EmptyTableGivesEmptyHello) {
  const auto st = make_state(1);
  const Packet h = olsr::generate_hello(st);
  EXPECT_EQ(h.header.kind, PacketKind::Hello);
  EXPECT_EQ(h.header.seq, 0u);
  EXPECT_TRUE(std::get<HelloPayload>(h.payload).neighbors.empty());
}

TEST(Hello, TableStateIsListedWithStatuses) {
  auto st = make_state(4);
  st.neighbors = table_with({{1, {3}}, {2, {3}}, {10, {5}}});
  for (unsigned n : {6u, 7u, 8u, 9u}) st.neighbors.one_hop[node(n)] = {node(n), LinkStatus::Bi, Millis{1'000'000}};
  st.neighbors.one_hop[node(3)].status = LinkStatus::Mpr;
  st.neighbors.one_hop[node(5)].status = LinkStatus::Mpr;
  const Packet h = olsr::generate_hello(st);
  const auto& listed = std::get<HelloPayload>(h.payload).neighbors;
  const std::vector<HelloEntry> expect{{node(3), LinkStatus::Mpr}, {node(5), LinkStatus::Mpr},
                                       {node(6), LinkStatus::Bi},  {node(7), LinkStatus::Bi},
                                       {node(8), LinkStatus::Bi},  {node(9), LinkStatus::Bi}};
  EXPECT_EQ(listed, expect);
}

TEST(Hello, UnknownSenderWithoutSelfIsUni) {
  auto st = make_state(1);
  Rng rng(1);
  olsr::process_hello(st, hello(2, {}), kNow, rng);
  ASSERT_TRUE(st.neighbors.one_hop.contains(node(2)));
  EXPECT_EQ(st.neighbors.one_hop.at(node(2)).status, LinkStatus::Uni);
}

TEST(Hello, UniBecomesBiWhenListed) {
  auto st = make_state(1);
  Rng rng(1);
  olsr::process_hello(st, hello(2, {}), kNow, rng);
  olsr::process_hello(st, hello(2, {{node(1), LinkStatus::Uni}}), kNow, rng);
  EXPECT_EQ(st.neighbors.one_hop.at(node(2)).status, LinkStatus::Bi);
}

TEST(Hello, SymmetricNeighborsOfSenderBecomeTwoHop) {
  auto st = make_state(1);
  Rng rng(1);
  olsr::process_hello(st, hello(2, {{node(1), LinkStatus::Bi}}), kNow, rng);
  olsr::process_hello(st, hello(2, {{node(1), LinkStatus::Bi}, {node(3), LinkStatus::Bi}}), kNow, rng);
  ASSERT_TRUE(st.neighbors.two_hop.contains(node(3)));
  EXPECT_EQ(st.neighbors.two_hop.at(node(3)).access_through, std::set<NodeId>{node(2)});
  EXPECT_EQ(st.neighbors.one_hop.at(node(2)).status, LinkStatus::Mpr);
}

TEST(Hello, UniListedNeighborIsNotTwoHop) {
  auto st = make_state(1);
  Rng rng(1);
  olsr::process_hello(st, hello(2, {{node(1), LinkStatus::Bi}, {node(3), LinkStatus::Uni}}), kNow, rng);
  EXPECT_FALSE(st.neighbors.two_hop.contains(node(3)));
}

TEST(Hello, SenderLeavesTwoHopWhenHeardDirectly) {
  auto st = make_state(1);
  Rng rng(1);
  olsr::process_hello(st, hello(2, {{node(1), LinkStatus::Bi}, {node(3), LinkStatus::Bi}}), kNow, rng);
  ASSERT_TRUE(st.neighbors.two_hop.contains(node(3)));
  olsr::process_hello(st, hello(3, {}), kNow, rng);
  EXPECT_FALSE(st.neighbors.two_hop.contains(node(3)));
  EXPECT_TRUE(st.neighbors.one_hop.contains(node(3)));
}

TEST(Hello, LostLinkWithdrawsAccessPoint) {
  auto st = make_state(1);
  Rng rng(1);
  olsr::process_hello(st, hello(2, {{node(1), LinkStatus::Bi}, {node(3), LinkStatus::Bi}}), kNow, rng);
  olsr::process_hello(st, hello(2, {{node(1), LinkStatus::Bi}}), kNow, rng);
  EXPECT_FALSE(st.neighbors.two_hop.contains(node(3)));
  EXPECT_TRUE(olsr::select_mprs(st.neighbors, rng, olsr::TieBreak::LowestId).empty());
  EXPECT_EQ(st.neighbors.one_hop.at(node(2)).status, LinkStatus::Bi);
}

TEST(Hello, SelectorBitFollowsSendersListing) {
  auto st = make_state(1);
  Rng rng(1);
  olsr::process_hello(st, hello(2, {{node(1), LinkStatus::Mpr}}), kNow, rng);
  EXPECT_TRUE(st.selectors.contains(node(2)));
  olsr::process_hello(st, hello(2, {{node(1), LinkStatus::Bi}}), kNow, rng);
  EXPECT_FALSE(st.selectors.contains(node(2)));
}

TEST(Hello, OwnHelloIsIgnored) {
  auto st = make_state(1);
  Rng rng(1);
  const auto up = olsr::process_hello(st, hello(1, {}), kNow, rng);
  EXPECT_EQ(up.result, olsr::HelloResult::IgnoredSelf);
  EXPECT_TRUE(st.neighbors.one_hop.empty());
}

TEST(Hello, NextHelloReflectsNewMprStatus) {
  auto st = make_state(1);
  Rng rng(1);
  olsr::process_hello(st, hello(2, {{node(1), LinkStatus::Bi}}), kNow, rng);
  auto before = std::get<HelloPayload>(olsr::generate_hello(st).payload).neighbors;
  EXPECT_EQ(before, (std::vector<HelloEntry>{{node(2), LinkStatus::Bi}}));
  olsr::process_hello(st, hello(2, {{node(1), LinkStatus::Bi}, {node(5), LinkStatus::Bi}}), kNow, rng);
  auto after = std::get<HelloPayload>(olsr::generate_hello(st).payload).neighbors;
  EXPECT_EQ(after, (std::vector<HelloEntry>{{node(2), LinkStatus::Mpr}}));
}

TEST(Hello, ExpiredNeighborsArePurged) {
  auto st = make_state(1);
  Rng rng(1);
  olsr::process_hello(st, hello(2, {{node(1), LinkStatus::Bi}, {node(3), LinkStatus::Bi}}), kNow, rng);
  const auto seq = st.neighbors.table_seq;
  EXPECT_TRUE(olsr::expire(st, kNow + st.cfg.neighbor_hold, rng));
  EXPECT_TRUE(st.neighbors.one_hop.empty());
  EXPECT_TRUE(st.neighbors.two_hop.empty());
  EXPECT_GT(st.neighbors.table_seq, seq);
}

// --- relay selection --------------------------------------------------------

TEST(SelectMprs, TableExample) {
  Rng rng(1);
  const auto t = table_with({{1, {3}}, {2, {3}}, {10, {5}}});
  EXPECT_EQ(olsr::select_mprs(t, rng, olsr::TieBreak::Random), (std::set<NodeId>{node(3), node(5)}));
}

TEST(SelectMprs, NoTwoHopGivesEmptySet) {
  Rng rng(1);
  EXPECT_TRUE(olsr::select_mprs(olsr::NeighborTable{}, rng, olsr::TieBreak::Random).empty());
}

TEST(SelectMprs, FewestAccessPicksFirst) {
  Rng rng(1);
  // A=20 via {x=11, y=12}; B=21 via {x}
  const auto t = table_with({{20, {11, 12}}, {21, {11}}});
  const auto chosen = olsr::select_mprs(t, rng, olsr::TieBreak::Random);
  EXPECT_EQ(chosen, std::set<NodeId>{node(11)});
  oracle::AccessMap access{{node(20), {node(11), node(12)}}, {node(21), {node(11)}}};
  EXPECT_TRUE(oracle::covers(chosen, access));
  EXPECT_EQ(oracle::min_cover_size(access), 1u);
}

TEST(SelectMprs, UniAccessPointsAreNotCandidates) {
  Rng rng(1);
  auto t = table_with({{20, {11, 12}}});
  t.one_hop[node(11)].status = LinkStatus::Uni;
  EXPECT_EQ(olsr::select_mprs(t, rng, olsr::TieBreak::Random), std::set<NodeId>{node(12)});
}

// --- diffusion --------------------------------------------------------------

Packet normal(unsigned src, std::uint32_t seq, unsigned prev) {
  Packet p = make_packet(PacketKind::Normal, seq, node(src), kBroadcast, VehicleInfo{});
  p.header.prev_hop = node(prev);
  return p;
}

TEST(ForwardDecision, SelectorPrevHopRetransmits) {
  auto st = make_state(2);
  st.selectors = {node(1)};
  EXPECT_EQ(olsr::forward_decision(st, normal(1, 1, 1)), olsr::Forward::Retransmit);
}

TEST(ForwardDecision, OtherPrevHopConsumesOnly) {
  auto st = make_state(2);
  st.selectors = {node(1)};
  EXPECT_EQ(olsr::forward_decision(st, normal(3, 1, 3)), olsr::Forward::Consume);
}

TEST(ForwardDecision, StaleSeqDrops) {
  auto st = make_state(2);
  EXPECT_EQ(olsr::forward_decision(st, normal(3, 5, 3)), olsr::Forward::Consume);
  EXPECT_EQ(olsr::forward_decision(st, normal(3, 5, 4)), olsr::Forward::Drop);
  EXPECT_EQ(olsr::forward_decision(st, normal(3, 4, 3)), olsr::Forward::Drop);
  EXPECT_EQ(olsr::forward_decision(st, normal(2, 9, 3)), olsr::Forward::Drop);
}

TEST(ForwardDecision, TcAndDataSequencesAreIndependent) {
  auto st = make_state(2);
  EXPECT_EQ(olsr::forward_decision(st, normal(3, 5, 3)), olsr::Forward::Consume);
  Packet tc = make_packet(PacketKind::Tc, 1, node(3), kBroadcast, TcPayload{});
  EXPECT_EQ(olsr::forward_decision(st, tc), olsr::Forward::Consume);
}

// --- topology control -------------------------------------------------------

TEST(Tc, NoSelectorsNoTc) {
  const auto st = make_state(1);
  SeqCounter seq;
  EXPECT_FALSE(olsr::generate_tc(st, seq));
}

TEST(Tc, DeclaresSelectorsWithTableSeq) {
  auto st = make_state(1);
  st.selectors = {node(2), node(7)};
  st.neighbors.table_seq = 12;
  SeqCounter seq;
  const auto tc = olsr::generate_tc(st, seq);
  ASSERT_TRUE(tc);
  const auto& body = std::get<TcPayload>(tc->payload);
  EXPECT_EQ(body.tc_seq, 12u);
  EXPECT_EQ(body.selectors, (std::vector<NodeId>{node(2), node(7)}));
  const auto again = olsr::generate_tc(st, seq);
  EXPECT_EQ(std::get<TcPayload>(again->payload).tc_seq, 12u);
  EXPECT_GT(again->header.seq, tc->header.seq);
}

Packet tc_from(unsigned orig, std::uint32_t tc_seq, std::vector<NodeId> sel) {
  return make_packet(PacketKind::Tc, 1, node(orig), kBroadcast, TcPayload{tc_seq, std::move(sel)});
}

TEST(Tc, ProcessInsertReplaceRefreshIgnore) {
  olsr::TopologyTable topo;
  const Millis hold{90};
  EXPECT_EQ(olsr::process_tc(topo, tc_from(3, 5, {node(1)}), Millis{0}, hold), olsr::TcResult::Inserted);
  EXPECT_EQ(topo.at(node(3)).expires_at, Millis{90});

  EXPECT_EQ(olsr::process_tc(topo, tc_from(3, 4, {node(9)}), Millis{10}, hold), olsr::TcResult::Ignored);
  EXPECT_EQ(topo.at(node(3)).selectors, std::set<NodeId>{node(1)});
  EXPECT_EQ(topo.at(node(3)).expires_at, Millis{90});

  EXPECT_EQ(olsr::process_tc(topo, tc_from(3, 5, {node(9)}), Millis{20}, hold), olsr::TcResult::Refreshed);
  EXPECT_EQ(topo.at(node(3)).selectors, std::set<NodeId>{node(1)});
  EXPECT_EQ(topo.at(node(3)).expires_at, Millis{110});

  EXPECT_EQ(olsr::process_tc(topo, tc_from(3, 6, {node(9)}), Millis{30}, hold), olsr::TcResult::Replaced);
  EXPECT_EQ(topo.at(node(3)).selectors, std::set<NodeId>{node(9)});
  EXPECT_EQ(topo.at(node(3)).last_seq, 6u);
}

// --- routing ----------------------------------------------------------------

Graph chain(std::size_t n) {
  Graph g(n);
  for (unsigned i = 1; i < n; ++i) g.connect(node(i), node(i + 1));
  return g;
}

TEST(Routes, OneHopNeighbor) {
  olsr::NeighborTable nb;
  nb.one_hop[node(2)] = {node(2), LinkStatus::Bi, Millis{100}};
  const auto r = olsr::compute_routes(node(1), nb, {}, Millis{0});
  ASSERT_TRUE(r.contains(node(2)));
  EXPECT_EQ(r.at(node(2)), (olsr::RouteEntry{node(2), node(2), 1}));
}

TEST(Routes, ChainOfFour) {
  StaticNetwork net(chain(4), olsr::Config{}, 1);
  net.exchange_hellos(4);
  net.exchange_tcs(3);
  EXPECT_EQ(net.state(node(1)).neighbors.mprs(), std::set<NodeId>{node(2)});
  EXPECT_EQ(net.state(node(4)).neighbors.mprs(), std::set<NodeId>{node(3)});
  const auto r = olsr::compute_routes(node(1), net.state(node(1)).neighbors, net.state(node(1)).topology,
                                      net.now());
  ASSERT_TRUE(r.contains(node(4)));
  EXPECT_EQ(r.at(node(4)), (olsr::RouteEntry{node(4), node(2), 3}));

  const auto hops = oracle::all_pairs_hops(4, {{node(1), node(2)}, {node(2), node(3)}, {node(3), node(4)}});
  EXPECT_EQ(static_cast<int>(r.at(node(4)).distance), hops[1][4]);

  Packet join = make_packet(PacketKind::Join, 1, node(4), kLeadId, VehicleInfo{});
  const auto d = olsr::route_unicast(net.state(node(4)), join, net.now());
  EXPECT_EQ(d.kind, olsr::RouteKind::ForwardTo);
  EXPECT_EQ(d.next_hop, node(3));
  EXPECT_EQ(join.header.prev_hop, node(4));
}

TEST(Routes, DisconnectedNodeHasNoRoute) {
  Graph g(3);
  g.connect(node(1), node(2));
  StaticNetwork net(g, olsr::Config{}, 1);
  net.exchange_hellos(3);
  net.exchange_tcs(2);
  const auto& st = net.state(node(1));
  EXPECT_FALSE(olsr::compute_routes(node(1), st.neighbors, st.topology, net.now()).contains(node(3)));
  Packet p = make_packet(PacketKind::Ok, 1, node(1), node(3), OkPayload{});
  EXPECT_EQ(olsr::route_unicast(st, p, net.now()).kind, olsr::RouteKind::NoRoute);
  Packet self = make_packet(PacketKind::Ok, 1, node(2), node(1), OkPayload{});
  EXPECT_EQ(olsr::route_unicast(st, self, net.now()).kind, olsr::RouteKind::DeliverLocal);
}

TEST(Routes, ExpiredEntriesAreIgnored) {
  olsr::NeighborTable nb;
  nb.one_hop[node(2)] = {node(2), LinkStatus::Bi, Millis{100}};
  olsr::TopologyTable topo;
  topo[node(2)] = {node(2), {node(3)}, 1, Millis{50}};
  EXPECT_TRUE(olsr::compute_routes(node(1), nb, topo, Millis{10}).contains(node(3)));
  EXPECT_FALSE(olsr::compute_routes(node(1), nb, topo, Millis{60}).contains(node(3)));
  EXPECT_TRUE(olsr::compute_routes(node(1), nb, topo, Millis{100}).empty());
}

TEST(Dump, TwoSectionFormat) {
  auto st = make_state(4);
  st.neighbors = table_with({{1, {3}}, {2, {3}}, {10, {5}}});
  st.neighbors.one_hop[node(3)].status = LinkStatus::Mpr;
  st.neighbors.one_hop[node(5)].status = LinkStatus::Mpr;
  const std::string out = olsr::dump_neighbor_table(st);
  EXPECT_NE(out.find("Node 4's One-Hop Neighbors"), std::string::npos);
  EXPECT_NE(out.find("3\tMPR\n"), std::string::npos);
  EXPECT_NE(out.find("Node 4's TWO-Hop Neighbors"), std::string::npos);
  EXPECT_NE(out.find("10\t5\n"), std::string::npos);
}

// --- properties -------------------------------------------------------------

void check_table_invariants(const olsr::State& st) {
  const auto& t = st.neighbors;
  const auto mprs = t.mprs();
  oracle::AccessMap access;
  for (const auto& [id, e] : t.two_hop) {
    ASSERT_FALSE(t.one_hop.contains(id)) << "node both one- and two-hop";
    ASSERT_FALSE(e.access_through.empty());
    for (NodeId a : e.access_through) ASSERT_TRUE(t.is_symmetric(a));
    access[id] = e.access_through;
  }
  ASSERT_TRUE(oracle::covers(mprs, access));
  const auto min = oracle::min_cover_size(access);
  ASSERT_TRUE(min.has_value());
  ASSERT_GE(mprs.size(), *min);
}

TEST(OlsrProperty, CoverageAndSequenceOnRandomTraces) {
  Rng topo(7);
  for (int trace = 0; trace < 300; ++trace) {
    const std::size_t n = 3 + trace % 8;
    Graph g = Graph::random_geometric(n, 250, 250, 100, topo);
    olsr::Config cfg;
    StaticNetwork net(g, cfg, 500 + trace);
    std::map<NodeId, std::uint32_t> seq_before;
    for (NodeId id : g.nodes()) seq_before[id] = 0;
    net.exchange_hellos(5, [&](NodeId r, const olsr::HelloUpdate& up) {
      const auto& st = net.state(r);
      check_table_invariants(st);
      if (up.seq_bumped) {
        EXPECT_GT(st.neighbors.table_seq, seq_before[r]);
      } else {
        EXPECT_EQ(st.neighbors.table_seq, seq_before[r]);
      }
      seq_before[r] = st.neighbors.table_seq;
    });
    for (NodeId id : g.nodes()) {
      std::set<NodeId> two;
      for (const auto& [m, e] : net.state(id).neighbors.two_hop) two.insert(m);
      EXPECT_EQ(two, oracle::strict_two_hop(g, id));
    }
  }
}

TEST(OlsrProperty, RoutesMatchShortestPaths) {
  Rng topo(99);
  for (int k = 0; k < 100; ++k) {
    const std::size_t n = 3 + k % 8;
    Graph g = Graph::random_geometric(n, 300, 150, 100, topo);
    StaticNetwork net(g, olsr::Config{}, 900 + k);
    net.exchange_hellos(5);
    net.exchange_tcs(static_cast<int>(n));

    std::set<std::pair<NodeId, NodeId>> full;
    for (NodeId a : g.nodes()) {
      for (NodeId b : g.neighbors(a)) full.insert({a, b});
    }
    const auto truth = oracle::all_pairs_hops(n, full);
    for (NodeId self : g.nodes()) {
      const auto& st = net.state(self);
      const auto routes = olsr::compute_routes(self, st.neighbors, st.topology, net.now());
      for (NodeId d : g.nodes()) {
        if (d == self) continue;
        const int want = truth[raw(self)][raw(d)];
        if (want == oracle::kUnreachable) {
          EXPECT_FALSE(routes.contains(d));
          continue;
        }
        ASSERT_TRUE(routes.contains(d)) << "graph " << k << " " << raw(self) << "->" << raw(d);
        EXPECT_EQ(static_cast<int>(routes.at(d).distance), want);
        EXPECT_TRUE(g.linked(self, routes.at(d).next_hop));
      }
    }
  }
}

TEST(OlsrProperty, MprDeliversEverywhereWithNoMoreTransmissionsThanFlooding) {
  for (std::size_t n = 2; n <= 5; ++n) {
    for (const Graph& g : oracle::all_connected_graphs(n)) {
      StaticNetwork net(g, olsr::Config{}, 3);
      net.exchange_hellos(4);
      for (NodeId origin : g.nodes()) {
        const auto mpr = net.disseminate(origin, BroadcastMode::Mpr);
        const auto flood = net.disseminate(origin, BroadcastMode::Flooding);
        EXPECT_EQ(mpr.reached, oracle::reachable(g, origin));
        EXPECT_LE(mpr.transmissions, flood.transmissions);
      }
    }
  }
}

}  // namespace
}  // namespace vanet
