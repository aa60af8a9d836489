#include <gtest/gtest.h>

#include <cmath>

#include "printers.hpp"
#include "vanet/medium.hpp"

namespace vanet {
namespace {

Packet normal_from(NodeId src) {
  return make_packet(PacketKind::Normal, 1, src, kBroadcast, VehicleInfo{});
}

TEST(Distance, IdentityAndLaneOffset) {
  EXPECT_DOUBLE_EQ(distance({0, Lane::Right}, {0, Lane::Right}), 0.0);
  EXPECT_DOUBLE_EQ(distance({0, Lane::Right}, {0, Lane::Left}), 5.0);
}

TEST(Distance, DiagonalAcrossLanes) {
  const double expect = std::sqrt(40.0 * 40.0 + 5.0 * 5.0);
  EXPECT_NEAR(distance({30, Lane::Right}, {70, Lane::Left}), expect, 1e-12);
  EXPECT_NEAR(expect, 40.311, 1e-3);
}

TEST(Distance, SymmetricAndNonNegative) {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    Position a{uniform01(rng) * 10000, rng() % 2 ? Lane::Left : Lane::Right};
    Position b{uniform01(rng) * 10000, rng() % 2 ? Lane::Left : Lane::Right};
    EXPECT_EQ(distance(a, b), distance(b, a));
    EXPECT_GE(distance(a, b), 0.0);
    EXPECT_EQ(distance(a, b) == 0.0, a == b);
  }
}

TEST(LossProbability, LinearLaw) {
  MediumConfig cfg;
  EXPECT_DOUBLE_EQ(loss_probability(0, cfg), 0.0);
  EXPECT_DOUBLE_EQ(loss_probability(100, cfg), 0.2);
  EXPECT_DOUBLE_EQ(loss_probability(50, cfg), 0.1);
  EXPECT_DOUBLE_EQ(loss_probability(150, cfg), 1.0);
}

TEST(MediumConfig, Validation) {
  MediumConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.range_m = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = MediumConfig{};
  cfg.loss_max = 1.5;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(InprocMedium, ZeroLossInRangeDelivers) {
  MediumConfig cfg;
  cfg.loss_max = 0;
  InprocMedium m(cfg);
  m.place(node(1), {0, Lane::Right});
  m.place(node(2), {50, Lane::Right});
  const auto out = m.transmit(node(1), kBroadcast, normal_from(node(1)), Millis{0});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_TRUE(out[0].delivered);
  EXPECT_FALSE(m.pop_due(Millis{0}));
  auto d = m.pop_due(Millis{1});
  ASSERT_TRUE(d);
  EXPECT_EQ(d->receiver, node(2));
  EXPECT_EQ(d->at, Millis{1});
  EXPECT_TRUE(m.idle());
}

TEST(InprocMedium, OutOfRangeNeverDelivers) {
  MediumConfig cfg;
  cfg.loss_max = 0;
  InprocMedium m(cfg);
  m.place(node(1), {0, Lane::Right});
  m.place(node(2), {120, Lane::Right});
  const auto out = m.transmit(node(1), node(2), normal_from(node(1)), Millis{0});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_FALSE(out[0].delivered);
  EXPECT_TRUE(m.idle());
  EXPECT_TRUE(m.neighbors_in_range(node(1)).empty());
}

TEST(InprocMedium, CertainLossDeliversNothing) {
  MediumConfig cfg;
  cfg.loss_max = 1;
  InprocMedium m(cfg);
  m.place(node(1), {0, Lane::Right});
  m.place(node(2), {100, Lane::Right});
  int delivered = 0;
  for (int i = 0; i < 1000; ++i) {
    for (const auto& o : m.transmit(node(1), node(2), normal_from(node(1)), Millis{i})) delivered += o.delivered;
  }
  EXPECT_EQ(delivered, 0);
}

TEST(InprocMedium, UnknownEndpointsThrow) {
  InprocMedium m(MediumConfig{});
  m.place(node(1), {0, Lane::Right});
  EXPECT_THROW(m.transmit(node(9), kBroadcast, normal_from(node(9)), Millis{0}), UnknownNode);
  EXPECT_THROW(m.transmit(node(1), node(9), normal_from(node(1)), Millis{0}), UnknownNode);
}

TEST(InprocMedium, LossStatisticsAtFiftyMetres) {
  MediumConfig cfg;
  cfg.rng_seed = 77;
  InprocMedium m(cfg);
  m.place(node(1), {0, Lane::Right});
  m.place(node(2), {50, Lane::Right});
  const int trials = 20000;
  int lost = 0;
  for (int i = 0; i < trials; ++i) {
    for (const auto& o : m.transmit(node(1), node(2), normal_from(node(1)), Millis{0})) lost += !o.delivered;
  }
  EXPECT_NEAR(static_cast<double>(lost) / trials, 0.1, 0.02);
}

TEST(InprocMedium, SameSeedSameOutcomes) {
  auto run = [](std::uint64_t seed) {
    MediumConfig cfg;
    cfg.rng_seed = seed;
    InprocMedium m(cfg);
    for (unsigned i = 1; i <= 5; ++i) m.place(node(i), {i * 20.0, Lane::Right});
    std::vector<bool> v;
    for (int t = 0; t < 200; ++t) {
      for (const auto& o : m.transmit(node(1 + t % 5), kBroadcast, normal_from(node(1)), Millis{t})) v.push_back(o.delivered);
    }
    return v;
  };
  EXPECT_EQ(run(11), run(11));
  EXPECT_NE(run(11), run(12));
}

TEST(InprocMedium, DeliveriesComeOutInTimeOrder) {
  MediumConfig cfg;
  cfg.loss_max = 0;
  cfg.per_hop_delay = Millis{3};
  InprocMedium m(cfg);
  m.place(node(1), {0, Lane::Right});
  m.place(node(2), {10, Lane::Right});
  m.place(node(3), {20, Lane::Right});
  m.transmit(node(1), kBroadcast, normal_from(node(1)), Millis{5});
  m.transmit(node(3), kBroadcast, normal_from(node(3)), Millis{2});
  ASSERT_EQ(m.next_due(), Millis{5});
  Millis last{0};
  int count = 0;
  while (auto d = m.pop_due(Millis{100})) {
    EXPECT_GE(d->at, last);
    last = d->at;
    ++count;
  }
  EXPECT_EQ(count, 4);
}

TEST(DeriveSeed, StreamsDiffer) {
  EXPECT_NE(derive_seed(1, 1), derive_seed(1, 2));
  EXPECT_NE(derive_seed(1, 1), derive_seed(2, 1));
  EXPECT_EQ(derive_seed(9, 4), derive_seed(9, 4));
}

}  // namespace
}  // namespace vanet
