#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <limits>

#include "printers.hpp"
#include "vanet/medium.hpp"
#include "vanet/metrics.hpp"

namespace vanet {
namespace {

Packet normal(unsigned src, unsigned prev, std::uint32_t seq) {
  Packet p = make_packet(PacketKind::Normal, seq, node(src), kBroadcast, VehicleInfo{});
  p.header.prev_hop = node(prev);
  return p;
}

TEST(EchoDecision, DirectFromLeadIsEchoed) { EXPECT_TRUE(echo_decision(normal(1, 1, 20), kLeadId, 10)); }

TEST(EchoDecision, RelayedCopyIsNotEchoed) { EXPECT_FALSE(echo_decision(normal(1, 3, 20), kLeadId, 10)); }

TEST(EchoDecision, ControlKindsAreNotEchoed) {
  const Packet j = make_packet(PacketKind::Join, 20, kLeadId, node(2), VehicleInfo{});
  EXPECT_FALSE(echo_decision(j, kLeadId, 10));
}

TEST(EchoDecision, SamplesOneInEvery) {
  int echoed = 0;
  for (std::uint32_t s = 1; s <= 100; ++s) echoed += echo_decision(normal(1, 1, s), kLeadId, 10);
  EXPECT_EQ(echoed, 10);
  EXPECT_FALSE(echo_decision(normal(2, 2, 10), kLeadId, 10));
}

TEST(AvgLatency, SinglePair) {
  const std::array<EchoPair, 1> p{{{Millis{0}, Millis{4}}}};
  EXPECT_DOUBLE_EQ(avg_latency_ms(p), 4.0);
}

TEST(AvgLatency, MeanOfPairs) {
  const std::array<EchoPair, 2> p{{{Millis{10}, Millis{14}}, {Millis{20}, Millis{26}}}};
  EXPECT_DOUBLE_EQ(avg_latency_ms(p), 5.0);
}

TEST(AvgLatency, NoEchoesThrows) { EXPECT_THROW(avg_latency_ms({}), NoSamples); }

TEST(Throughput, BytesOverTime) {
  std::vector<ReceiveRecord> rec(10);
  for (auto& r : rec) r.size_bytes = 100;
  EXPECT_DOUBLE_EQ(throughput(rec, 1.0), 1000.0);
  EXPECT_DOUBLE_EQ(throughput(std::uint64_t{1000}, 2.0), 500.0);
}

TEST(Throughput, NothingReceivedIsZero) { EXPECT_DOUBLE_EQ(throughput(std::span<const ReceiveRecord>{}, 5.0), 0.0); }

TEST(Throughput, RejectsNonPositiveDuration) {
  EXPECT_THROW(throughput(std::uint64_t{1}, 0.0), std::invalid_argument);
  EXPECT_THROW(throughput(std::uint64_t{1}, std::numeric_limits<double>::quiet_NaN()), std::invalid_argument);
}

TEST(LossRate, FullDeliveryIsZero) { EXPECT_DOUBLE_EQ(loss_rate(40, 40), 0.0); }

TEST(LossRate, NothingDeliveredIsOne) { EXPECT_DOUBLE_EQ(loss_rate(0, 40), 1.0); }

TEST(LossRate, ClampedToUnitInterval) { EXPECT_DOUBLE_EQ(loss_rate(50, 40), 0.0); }

TEST(LossRate, RecordsCountDistinctReceptions) {
  std::vector<SendRecord> sent{{node(1), 1, PacketKind::Normal, Millis{0}, 66},
                               {node(1), 2, PacketKind::Normal, Millis{10}, 66}};
  std::vector<ReceiveRecord> got{{node(2), node(1), 1, PacketKind::Normal, Millis{1}, 66},
                                 {node(2), node(1), 1, PacketKind::Normal, Millis{2}, 66},
                                 {node(3), node(1), 1, PacketKind::Normal, Millis{2}, 66},
                                 {node(2), node(1), 9, PacketKind::Normal, Millis{2}, 66},
                                 {node(2), node(1), 2, PacketKind::Join, Millis{2}, 66}};
  EXPECT_DOUBLE_EQ(loss_rate(sent, got, 2), 0.5);
}

// Two nodes 50 m apart with loss_max 0.2: the law gives p = 0.1.
TEST(LossRate, MatchesMediumStatisticsAtFiftyMeters) {
  MediumConfig cfg;
  cfg.loss_max = 0.2;
  cfg.rng_seed = 99;
  InprocMedium m(cfg);
  m.place(node(1), {0.0, Lane::Right});
  m.place(node(2), {50.0, Lane::Right});
  MetricsCollector c;
  const std::uint32_t n = 20'000;
  for (std::uint32_t seq = 1; seq <= n; ++seq) {
    const Packet p = normal(1, 1, seq);
    c.originated(node(1), seq, 1);
    for (const auto& o : m.transmit(node(1), node(2), p, Millis{seq})) {
      c.link_attempt(o.loss_p, o.delivered);
      if (o.delivered) c.accepted(node(2), node(1), seq);
    }
  }
  const auto r = c.report(Scheme::Mpr, 2, 1.0);
  EXPECT_NEAR(r.loss_rate, 0.1, 0.02);
  EXPECT_NEAR(r.expected_link_loss, 0.1, 1e-12);
  EXPECT_NEAR(r.link_loss_rate(), 0.1, 0.02);
}

TEST(Collector, DuplicatesAndUnknownPacketsDoNotCount) {
  MetricsCollector c;
  c.originated(node(1), 5, 2);
  c.accepted(node(2), node(1), 5);
  c.accepted(node(2), node(1), 5);
  c.accepted(node(3), node(1), 6);
  c.accepted(node(1), node(1), 5);
  const auto r = c.report(Scheme::Rba, 3, 1.0);
  EXPECT_EQ(r.normal_expected, 2u);
  EXPECT_EQ(r.normal_delivered, 1u);
  EXPECT_DOUBLE_EQ(r.loss_rate, 0.5);
}

TEST(Collector, OutOfRangeAttemptsAreNotLinkAttempts) {
  MetricsCollector c;
  c.link_attempt(1.0, false);
  c.link_attempt(0.1, true);
  c.link_attempt(0.3, false);
  const auto r = c.report(Scheme::Mpr, 2, 1.0);
  EXPECT_EQ(r.link_attempts, 2u);
  EXPECT_EQ(r.link_losses, 1u);
  EXPECT_DOUBLE_EQ(r.expected_link_loss, 0.2);
}

TEST(Collector, ReportWithoutEchoesHasZeroLatency) {
  MetricsCollector c;
  c.transmitted(3);
  c.delivered(66);
  const auto r = c.report(Scheme::Mpr, 2, 2.0);
  EXPECT_EQ(r.latency_samples, 0u);
  EXPECT_EQ(r.avg_latency_ms, 0.0);
  EXPECT_EQ(r.total_tx, 3u);
  EXPECT_DOUBLE_EQ(r.throughput_Bps, 33.0);
  EXPECT_TRUE(std::isfinite(r.loss_rate));
}

TEST(Csv, HeaderColumns) { EXPECT_EQ(csv_header(), "mode,n,avg_latency_ms,throughput_Bps,loss_rate,total_tx"); }

TEST(Csv, RowRoundTrip) {
  RunReport r;
  r.mode = Scheme::Rba;
  r.n_vehicles = 6;
  r.avg_latency_ms = 2.25;
  r.throughput_Bps = 123456.5;
  r.loss_rate = 0.0125;
  r.total_tx = 987654;
  const std::string row = csv_row(r);
  EXPECT_EQ(row, "rba,6,2.250000,123456.500000,0.012500,987654");
  const RunReport back = parse_csv_row(row);
  EXPECT_EQ(back.mode, r.mode);
  EXPECT_EQ(back.n_vehicles, r.n_vehicles);
  EXPECT_DOUBLE_EQ(back.avg_latency_ms, r.avg_latency_ms);
  EXPECT_DOUBLE_EQ(back.throughput_Bps, r.throughput_Bps);
  EXPECT_DOUBLE_EQ(back.loss_rate, r.loss_rate);
  EXPECT_EQ(back.total_tx, r.total_tx);
}

TEST(Csv, MalformedRowsThrow) {
  EXPECT_THROW(parse_csv_row("mpr,2,1,2,3"), ParseError);
  EXPECT_THROW(parse_csv_row("aodv,2,1,2,3,4"), ParseError);
  EXPECT_THROW(parse_csv_row("mpr,x,1,2,3,4"), ParseError);
}

}  // namespace
}  // namespace vanet
