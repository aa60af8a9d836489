#include <benchmark/benchmark.h>

#include "vanet/olsr.hpp"
#include "vanet/packet.hpp"
#include "vanet/rba.hpp"
#include "vanet/simulation.hpp"
#include "vanet/static_net.hpp"

namespace vanet {
namespace {

Packet sample_hello(std::size_t entries) {
  HelloPayload p;
  for (std::size_t i = 0; i < entries; ++i) {
    p.neighbors.push_back({node(static_cast<unsigned>(i + 2)), LinkStatus::Bi});
  }
  return make_packet(PacketKind::Hello, 0, node(1), kBroadcast, p);
}

void BM_EncodeHello(benchmark::State& state) {
  const Packet pkt = sample_hello(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(encode(pkt));
}
BENCHMARK(BM_EncodeHello)->Arg(1)->Arg(10);

void BM_DecodeHello(benchmark::State& state) {
  const Bytes wire = encode(sample_hello(static_cast<std::size_t>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(decode(wire));
}
BENCHMARK(BM_DecodeHello)->Arg(1)->Arg(10);

void BM_SelectMprs(benchmark::State& state) {
  Rng topo(3);
  const auto n = static_cast<std::size_t>(state.range(0));
  StaticNetwork net(Graph::random_geometric(n, 200, 100, 100, topo), olsr::Config{}, 1);
  net.exchange_hellos(4);
  NodeId busiest = node(1);
  for (NodeId id : net.graph().nodes()) {
    if (net.state(id).neighbors.two_hop.size() > net.state(busiest).neighbors.two_hop.size()) busiest = id;
  }
  const auto& table = net.state(busiest).neighbors;
  state.counters["two_hop"] = static_cast<double>(table.two_hop.size());
  Rng rng(5);
  for (auto _ : state) benchmark::DoNotOptimize(olsr::select_mprs(table, rng, olsr::TieBreak::Random));
}
BENCHMARK(BM_SelectMprs)->Arg(6)->Arg(10);

void BM_RbaOnReceive(benchmark::State& state) {
  rba::CacheTable table;
  Rng rng(1);
  std::uint32_t seq = 0;
  for (auto _ : state) {
    Packet p = make_packet(PacketKind::Normal, ++seq / 2, node(1 + seq % 8), kBroadcast, VehicleInfo{});
    p.header.prev_hop = node(9);
    benchmark::DoNotOptimize(rba::on_receive(node(10), table, p, rng));
  }
}
BENCHMARK(BM_RbaOnReceive);

void BM_SimulatedSecond(benchmark::State& state) {
  ScenarioConfig c;
  c.mode = state.range(0) == 0 ? Scheme::Mpr : Scheme::Rba;
  c.n_followers = static_cast<std::size_t>(state.range(1));
  c.duration_s = 3600;
  Simulation sim(c);
  for (auto _ : state) sim.run_until(sim.now() + Millis{1000});
  state.SetLabel(c.mode == Scheme::Mpr ? "mpr" : "rba");
}
BENCHMARK(BM_SimulatedSecond)->Args({0, 4})->Args({1, 4})->Args({0, 10})->Args({1, 10})->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace vanet

BENCHMARK_MAIN();
