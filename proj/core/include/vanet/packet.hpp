#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "vanet/types.hpp"

namespace vanet {

enum class PacketKind : std::uint8_t {
  Hello = 1,
  Tc = 2,
  Normal = 3,
  Join = 4,
  Leave = 5,
  AckJoin = 6,
  Notify = 7,
  Ok = 8,
};

std::string_view to_string(PacketKind kind);

/// JOIN, LEAVE, ACK_JOIN, NOTIFY and OK carry a destination and are routed.
constexpr bool is_routed_unicast(PacketKind k) noexcept {
  return k == PacketKind::Join || k == PacketKind::Leave || k == PacketKind::AckJoin ||
         k == PacketKind::Notify || k == PacketKind::Ok;
}

/// TC and NORMAL are diffused network-wide; HELLO never leaves one hop.
constexpr bool is_diffused(PacketKind k) noexcept {
  return k == PacketKind::Tc || k == PacketKind::Normal;
}

enum class LinkStatus : std::uint8_t { Uni = 0, Bi = 1, Mpr = 2 };

std::string_view to_string(LinkStatus s);

constexpr bool is_symmetric(LinkStatus s) noexcept { return s != LinkStatus::Uni; }

enum class VehicleMode : std::uint8_t { Free = 0, Form = 1, Follow = 2, Lead = 3 };

std::string_view to_string(VehicleMode m);

struct PacketHeader {
  PacketKind kind = PacketKind::Normal;
  std::uint32_t seq = 0;
  NodeId source{};
  NodeId prev_hop{};
  NodeId dest = kBroadcast;

  friend bool operator==(const PacketHeader&, const PacketHeader&) = default;
};

/// Sensor snapshot carried by NORMAL packets and JOIN requests.
struct VehicleInfo {
  double x = 0.0;
  Lane lane = Lane::Right;
  double velocity = 0.0;
  double acceleration = 0.0;
  double brake = 0.0;
  double throttle = 0.0;
  double length = 5.0;
  VehicleMode mode = VehicleMode::Free;

  friend bool operator==(const VehicleInfo&, const VehicleInfo&) = default;
};

struct HelloEntry {
  NodeId neighbor{};
  LinkStatus status = LinkStatus::Uni;

  friend bool operator==(const HelloEntry&, const HelloEntry&) = default;
};

struct HelloPayload {
  std::vector<HelloEntry> neighbors;

  friend bool operator==(const HelloPayload&, const HelloPayload&) = default;
};

struct TcPayload {
  std::uint32_t tc_seq = 0;
  std::vector<NodeId> selectors;

  friend bool operator==(const TcPayload&, const TcPayload&) = default;
};

/// Sent by the lead to admit a requester, and echoed back by the requester
/// once it has taken its place in the train.
struct AckJoinPayload {
  NodeId follow{};
  double gap_m = 0.0;

  friend bool operator==(const AckJoinPayload&, const AckJoinPayload&) = default;
};

enum class NotifyPurpose : std::uint8_t {
  Refollow = 0,   // target replaces the departed predecessor
  MakeSpace = 1,  // open `spacing_m` ahead, then follow `target` once it arrives
};

struct NotifyPayload {
  NotifyPurpose purpose = NotifyPurpose::Refollow;
  NodeId target{};
  double spacing_m = 0.0;

  friend bool operator==(const NotifyPayload&, const NotifyPayload&) = default;
};

struct OkPayload {
  NodeId requester{};

  friend bool operator==(const OkPayload&, const OkPayload&) = default;
};

struct LeavePayload {
  std::uint8_t attempt = 1;

  friend bool operator==(const LeavePayload&, const LeavePayload&) = default;
};

using Payload = std::variant<std::monostate, HelloPayload, TcPayload, VehicleInfo, AckJoinPayload,
                             NotifyPayload, OkPayload, LeavePayload>;

struct Packet {
  PacketHeader header;
  Payload payload;

  friend bool operator==(const Packet&, const Packet&) = default;
};

// Wire layout, all integers big-endian:
//   magic[2] = 0x56 0x01 | version u8 | kind u8 | seq u32 | source u16 |
//   prev_hop u16 | dest u16 (0xFFFF broadcast) | payload_len u16 | payload
inline constexpr std::uint8_t kWireMagic0 = 0x56;
inline constexpr std::uint8_t kWireMagic1 = 0x01;
inline constexpr std::uint8_t kWireVersion = 1;
inline constexpr std::size_t kHeaderSize = 16;
inline constexpr std::size_t kVehicleInfoSize = 6 * 8 + 2;

using Bytes = std::vector<std::uint8_t>;

/// Throws std::invalid_argument when the payload alternative does not match the kind.
Bytes encode(const Packet& pkt);
/// Throws DecodeError on truncation, bad magic/version, unknown kind or malformed payload.
Packet decode(std::span<const std::uint8_t> bytes);
/// Equal to encode(pkt).size() without materialising the buffer.
std::size_t wire_size(const Packet& pkt);

Packet make_packet(PacketKind kind, std::uint32_t seq, NodeId source, NodeId dest, Payload payload);

/// Per-source sequence numbers. HELLO is exempt (always 0); TC and the data
/// kinds each have their own strictly increasing counter.
class SeqCounter {
 public:
  std::uint32_t next(PacketKind kind) noexcept;

 private:
  std::uint32_t tc_ = 0;
  std::uint32_t data_ = 0;
};

}  // namespace vanet
