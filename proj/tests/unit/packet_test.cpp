#include <gtest/gtest.h>

#include <random>

#include "printers.hpp"
#include "vanet/medium.hpp"
#include "vanet/packet.hpp"

namespace vanet {
namespace {

Packet hello_from_4() {
  HelloPayload h;
  h.neighbors = {{node(3), LinkStatus::Mpr}, {node(5), LinkStatus::Mpr}, {node(6), LinkStatus::Bi}};
  return make_packet(PacketKind::Hello, 0, node(4), kBroadcast, h);
}

TEST(Packet, HelloListingRoundTrips) {
  const Packet p = hello_from_4();
  EXPECT_EQ(decode(encode(p)), p);
}

TEST(Packet, EmptyTcRoundTrips) {
  const Packet p = make_packet(PacketKind::Tc, 3, node(2), kBroadcast, TcPayload{7, {}});
  const Packet back = decode(encode(p));
  EXPECT_EQ(back, p);
  EXPECT_TRUE(std::get<TcPayload>(back.payload).selectors.empty());
}

TEST(Packet, OneByteInputIsRejected) {
  const std::vector<std::uint8_t> one{0x56};
  EXPECT_THROW(decode(one), DecodeError);
}

TEST(Packet, BadMagicVersionKindAreRejected) {
  Bytes b = encode(hello_from_4());
  Bytes bad = b;
  bad[0] = 0x00;
  EXPECT_THROW(decode(bad), DecodeError);
  bad = b;
  bad[2] = 9;
  EXPECT_THROW(decode(bad), DecodeError);
  bad = b;
  bad[3] = 0;
  EXPECT_THROW(decode(bad), DecodeError);
  bad = b;
  bad[3] = 42;
  EXPECT_THROW(decode(bad), DecodeError);
}

TEST(Packet, TruncatedPayloadIsRejected) {
  Bytes b = encode(hello_from_4());
  for (std::size_t n = 0; n < b.size(); ++n) {
    EXPECT_THROW(decode(std::span<const std::uint8_t>(b.data(), n)), DecodeError) << n;
  }
}

TEST(Packet, DuplicateHelloNeighborIsRejected) {
  HelloPayload h;
  h.neighbors = {{node(3), LinkStatus::Bi}, {node(3), LinkStatus::Mpr}};
  const Bytes b = encode(make_packet(PacketKind::Hello, 0, node(4), kBroadcast, h));
  EXPECT_THROW(decode(b), DecodeError);
}

TEST(Packet, KindPayloadMismatchThrows) {
  Packet p = make_packet(PacketKind::Normal, 1, node(1), kBroadcast, TcPayload{});
  EXPECT_THROW(encode(p), std::invalid_argument);
}

TEST(Packet, NormalLayoutIsByteExact) {
  VehicleInfo v;
  v.x = 1.0;
  v.lane = Lane::Left;
  v.velocity = 30.0;
  v.length = 10.0;
  v.mode = VehicleMode::Lead;
  Packet p = make_packet(PacketKind::Normal, 0x01020304, node(1), kBroadcast, v);
  p.header.prev_hop = node(3);
  const Bytes b = encode(p);
  ASSERT_EQ(b.size(), kHeaderSize + kVehicleInfoSize);
  EXPECT_EQ(b.size(), 66u);
  EXPECT_EQ(wire_size(p), b.size());
  const Bytes head{0x56, 0x01, 0x01, 0x03, 0x01, 0x02, 0x03, 0x04,
                   0x00, 0x01, 0x00, 0x03, 0xFF, 0xFF, 0x00, 50};
  EXPECT_TRUE(std::equal(head.begin(), head.end(), b.begin()));
  // x = 1.0 as binary64 big-endian
  const Bytes one{0x3F, 0xF0, 0, 0, 0, 0, 0, 0};
  EXPECT_TRUE(std::equal(one.begin(), one.end(), b.begin() + 16));
  EXPECT_EQ(b[16 + 8], 0x01);  // lane
}

TEST(SeqCounter, DataIsMonotoneFromOne) {
  SeqCounter c;
  EXPECT_EQ(c.next(PacketKind::Normal), 1u);
  EXPECT_EQ(c.next(PacketKind::Normal), 2u);
  EXPECT_EQ(c.next(PacketKind::Normal), 3u);
}

TEST(SeqCounter, HelloIsAlwaysZero) {
  SeqCounter c;
  for (int i = 0; i < 5; ++i) EXPECT_EQ(c.next(PacketKind::Hello), 0u);
  EXPECT_EQ(c.next(PacketKind::Normal), 1u);
}

TEST(SeqCounter, TcAndDataAreSeparateClasses) {
  SeqCounter c;
  EXPECT_EQ(c.next(PacketKind::Tc), 1u);
  EXPECT_EQ(c.next(PacketKind::Join), 1u);
  EXPECT_EQ(c.next(PacketKind::Normal), 2u);
  EXPECT_EQ(c.next(PacketKind::Tc), 2u);
}

Packet random_packet(Rng& rng) {
  auto u16 = [&] { return static_cast<std::uint16_t>(rng()); };
  auto f64 = [&] { return (uniform01(rng) - 0.5) * 1e6; };
  const auto kind = static_cast<PacketKind>(1 + rng() % 8);
  Payload pl;
  switch (kind) {
    case PacketKind::Hello: {
      HelloPayload h;
      const std::size_t n = rng() % 12;
      for (std::size_t i = 0; i < n; ++i) {
        h.neighbors.push_back({node(static_cast<unsigned>(i * 7 + 1)), static_cast<LinkStatus>(rng() % 3)});
      }
      pl = h;
      break;
    }
    case PacketKind::Tc: {
      TcPayload t;
      t.tc_seq = static_cast<std::uint32_t>(rng());
      const std::size_t n = rng() % 12;
      for (std::size_t i = 0; i < n; ++i) t.selectors.push_back(node(u16()));
      pl = t;
      break;
    }
    case PacketKind::Normal:
    case PacketKind::Join: {
      VehicleInfo v;
      v.x = f64();
      v.lane = static_cast<Lane>(rng() % 2);
      v.velocity = f64();
      v.acceleration = f64();
      v.brake = uniform01(rng);
      v.throttle = uniform01(rng);
      v.length = rng() % 2 ? 5.0 : 10.0;
      v.mode = static_cast<VehicleMode>(rng() % 4);
      pl = v;
      break;
    }
    case PacketKind::Leave:
      pl = LeavePayload{static_cast<std::uint8_t>(rng())};
      break;
    case PacketKind::AckJoin:
      pl = AckJoinPayload{node(u16()), f64()};
      break;
    case PacketKind::Notify:
      pl = NotifyPayload{static_cast<NotifyPurpose>(rng() % 2), node(u16()), f64()};
      break;
    case PacketKind::Ok:
      pl = OkPayload{node(u16())};
      break;
  }
  Packet p = make_packet(kind, static_cast<std::uint32_t>(rng()), node(u16()), node(u16()), std::move(pl));
  p.header.prev_hop = node(u16());
  return p;
}

TEST(PacketProperty, RandomPacketsRoundTrip) {
  Rng rng(20240501);
  for (int i = 0; i < 20000; ++i) {
    const Packet p = random_packet(rng);
    const Bytes b = encode(p);
    ASSERT_EQ(b.size(), wire_size(p));
    ASSERT_EQ(decode(b), p) << "case " << i;
  }
}

TEST(PacketProperty, NormalSizeIsFixed) {
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    Packet p = random_packet(rng);
    if (p.header.kind != PacketKind::Normal) continue;
    EXPECT_EQ(encode(p).size(), 66u);
  }
}

TEST(PacketKinds, RoutedAndDiffusedClasses) {
  EXPECT_TRUE(is_routed_unicast(PacketKind::Join));
  EXPECT_TRUE(is_routed_unicast(PacketKind::Ok));
  EXPECT_FALSE(is_routed_unicast(PacketKind::Normal));
  EXPECT_TRUE(is_diffused(PacketKind::Tc));
  EXPECT_FALSE(is_diffused(PacketKind::Hello));
  EXPECT_EQ(to_string(PacketKind::AckJoin), "ACK_JOIN");
}

}  // namespace
}  // namespace vanet
