#include "vanet/packet.hpp"

#include <bit>
#include <set>
#include <stdexcept>

namespace vanet {

std::string to_string(NodeId id) { return std::to_string(raw(id)); }

std::string_view to_string(Lane lane) { return lane == Lane::Left ? "LEFT" : "RIGHT"; }

std::string_view to_string(Scheme s) { return s == Scheme::Rba ? "rba" : "mpr"; }

std::string_view to_string(PacketKind kind) {
  switch (kind) {
    case PacketKind::Hello: return "HELLO";
    case PacketKind::Tc: return "TC";
    case PacketKind::Normal: return "NORMAL";
    case PacketKind::Join: return "JOIN";
    case PacketKind::Leave: return "LEAVE";
    case PacketKind::AckJoin: return "ACK_JOIN";
    case PacketKind::Notify: return "NOTIFY";
    case PacketKind::Ok: return "OK";
  }
  return "?";
}

std::string_view to_string(LinkStatus s) {
  switch (s) {
    case LinkStatus::Uni: return "UNI";
    case LinkStatus::Bi: return "BI";
    case LinkStatus::Mpr: return "MPR";
  }
  return "?";
}

std::string_view to_string(VehicleMode m) {
  switch (m) {
    case VehicleMode::Free: return "FREE";
    case VehicleMode::Form: return "FORM";
    case VehicleMode::Follow: return "FOLLOW";
    case VehicleMode::Lead: return "LEAD";
  }
  return "?";
}

namespace {

class Writer {
 public:
  explicit Writer(Bytes& out) : out_(out) {}

  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    out_.push_back(static_cast<std::uint8_t>(v >> 8));
    out_.push_back(static_cast<std::uint8_t>(v));
  }
  void u32(std::uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8) out_.push_back(static_cast<std::uint8_t>(v >> shift));
  }
  void f64(double d) {
    const auto v = std::bit_cast<std::uint64_t>(d);
    for (int shift = 56; shift >= 0; shift -= 8) out_.push_back(static_cast<std::uint8_t>(v >> shift));
  }
  void id(NodeId n) { u16(raw(n)); }

 private:
  Bytes& out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t u8() {
    need(1);
    return in_[pos_++];
  }
  std::uint16_t u16() {
    need(2);
    const auto v = static_cast<std::uint16_t>((in_[pos_] << 8) | in_[pos_ + 1]);
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | in_[pos_++];
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | in_[pos_++];
    return std::bit_cast<double>(v);
  }
  NodeId id() { return NodeId{u16()}; }

  std::size_t remaining() const noexcept { return in_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (remaining() < n) throw DecodeError("truncated packet");
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

Lane lane_from(std::uint8_t v) {
  if (v > 1) throw DecodeError("bad lane");
  return static_cast<Lane>(v);
}

VehicleMode mode_from(std::uint8_t v) {
  if (v > 3) throw DecodeError("bad vehicle mode");
  return static_cast<VehicleMode>(v);
}

LinkStatus status_from(std::uint8_t v) {
  if (v > 2) throw DecodeError("bad link status");
  return static_cast<LinkStatus>(v);
}

void write_info(Writer& w, const VehicleInfo& v) {
  w.f64(v.x);
  w.u8(static_cast<std::uint8_t>(v.lane));
  w.f64(v.velocity);
  w.f64(v.acceleration);
  w.f64(v.brake);
  w.f64(v.throttle);
  w.f64(v.length);
  w.u8(static_cast<std::uint8_t>(v.mode));
}

VehicleInfo read_info(Reader& r) {
  VehicleInfo v;
  v.x = r.f64();
  v.lane = lane_from(r.u8());
  v.velocity = r.f64();
  v.acceleration = r.f64();
  v.brake = r.f64();
  v.throttle = r.f64();
  v.length = r.f64();
  v.mode = mode_from(r.u8());
  return v;
}

template <typename T>
const T& expect(const Packet& pkt) {
  const T* p = std::get_if<T>(&pkt.payload);
  if (p == nullptr) {
    throw std::invalid_argument(std::string("payload does not match kind ") +
                                std::string(to_string(pkt.header.kind)));
  }
  return *p;
}

std::size_t payload_size(const Packet& pkt) {
  switch (pkt.header.kind) {
    case PacketKind::Hello: return 2 + 3 * expect<HelloPayload>(pkt).neighbors.size();
    case PacketKind::Tc: return 4 + 2 + 2 * expect<TcPayload>(pkt).selectors.size();
    case PacketKind::Normal:
    case PacketKind::Join: expect<VehicleInfo>(pkt); return kVehicleInfoSize;
    case PacketKind::Leave: expect<LeavePayload>(pkt); return 1;
    case PacketKind::AckJoin: expect<AckJoinPayload>(pkt); return 2 + 8;
    case PacketKind::Notify: expect<NotifyPayload>(pkt); return 1 + 2 + 8;
    case PacketKind::Ok: expect<OkPayload>(pkt); return 2;
  }
  throw std::invalid_argument("unknown packet kind");
}

void write_payload(Writer& w, const Packet& pkt) {
  switch (pkt.header.kind) {
    case PacketKind::Hello: {
      const auto& h = std::get<HelloPayload>(pkt.payload);
      w.u16(static_cast<std::uint16_t>(h.neighbors.size()));
      for (const auto& e : h.neighbors) {
        w.id(e.neighbor);
        w.u8(static_cast<std::uint8_t>(e.status));
      }
      break;
    }
    case PacketKind::Tc: {
      const auto& tc = std::get<TcPayload>(pkt.payload);
      w.u32(tc.tc_seq);
      w.u16(static_cast<std::uint16_t>(tc.selectors.size()));
      for (NodeId s : tc.selectors) w.id(s);
      break;
    }
    case PacketKind::Normal:
    case PacketKind::Join: write_info(w, std::get<VehicleInfo>(pkt.payload)); break;
    case PacketKind::Leave: w.u8(std::get<LeavePayload>(pkt.payload).attempt); break;
    case PacketKind::AckJoin: {
      const auto& a = std::get<AckJoinPayload>(pkt.payload);
      w.id(a.follow);
      w.f64(a.gap_m);
      break;
    }
    case PacketKind::Notify: {
      const auto& n = std::get<NotifyPayload>(pkt.payload);
      w.u8(static_cast<std::uint8_t>(n.purpose));
      w.id(n.target);
      w.f64(n.spacing_m);
      break;
    }
    case PacketKind::Ok: w.id(std::get<OkPayload>(pkt.payload).requester); break;
  }
}

Payload read_payload(PacketKind kind, Reader& r) {
  switch (kind) {
    case PacketKind::Hello: {
      HelloPayload h;
      const std::uint16_t n = r.u16();
      h.neighbors.reserve(n);
      std::set<NodeId> seen;
      for (std::uint16_t i = 0; i < n; ++i) {
        HelloEntry e;
        e.neighbor = r.id();
        e.status = status_from(r.u8());
        if (!seen.insert(e.neighbor).second) throw DecodeError("duplicate HELLO neighbor");
        h.neighbors.push_back(e);
      }
      return h;
    }
    case PacketKind::Tc: {
      TcPayload tc;
      tc.tc_seq = r.u32();
      const std::uint16_t n = r.u16();
      tc.selectors.reserve(n);
      for (std::uint16_t i = 0; i < n; ++i) tc.selectors.push_back(r.id());
      return tc;
    }
    case PacketKind::Normal:
    case PacketKind::Join: return read_info(r);
    case PacketKind::Leave: return LeavePayload{r.u8()};
    case PacketKind::AckJoin: {
      AckJoinPayload a;
      a.follow = r.id();
      a.gap_m = r.f64();
      return a;
    }
    case PacketKind::Notify: {
      NotifyPayload n;
      const std::uint8_t purpose = r.u8();
      if (purpose > 1) throw DecodeError("bad notify purpose");
      n.purpose = static_cast<NotifyPurpose>(purpose);
      n.target = r.id();
      n.spacing_m = r.f64();
      return n;
    }
    case PacketKind::Ok: return OkPayload{r.id()};
  }
  throw DecodeError("bad kind");
}

}  // namespace

std::size_t wire_size(const Packet& pkt) { return kHeaderSize + payload_size(pkt); }

Bytes encode(const Packet& pkt) {
  const std::size_t body = payload_size(pkt);
  if (body > 0xFFFF) throw std::invalid_argument("payload exceeds one datagram");
  Bytes out;
  out.reserve(kHeaderSize + body);
  Writer w(out);
  w.u8(kWireMagic0);
  w.u8(kWireMagic1);
  w.u8(kWireVersion);
  w.u8(static_cast<std::uint8_t>(pkt.header.kind));
  w.u32(pkt.header.seq);
  w.id(pkt.header.source);
  w.id(pkt.header.prev_hop);
  w.id(pkt.header.dest);
  w.u16(static_cast<std::uint16_t>(body));
  write_payload(w, pkt);
  return out;
}

Packet decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderSize) throw DecodeError("truncated header");
  Reader r(bytes);
  if (r.u8() != kWireMagic0 || r.u8() != kWireMagic1) throw DecodeError("bad magic");
  if (r.u8() != kWireVersion) throw DecodeError("unsupported version");
  const std::uint8_t kind = r.u8();
  if (kind < 1 || kind > 8) throw DecodeError("unknown packet kind");

  Packet pkt;
  pkt.header.kind = static_cast<PacketKind>(kind);
  pkt.header.seq = r.u32();
  pkt.header.source = r.id();
  pkt.header.prev_hop = r.id();
  pkt.header.dest = r.id();
  const std::uint16_t len = r.u16();
  if (r.remaining() != len) throw DecodeError("payload length mismatch");
  pkt.payload = read_payload(pkt.header.kind, r);
  if (r.remaining() != 0) throw DecodeError("trailing bytes in payload");
  return pkt;
}

Packet make_packet(PacketKind kind, std::uint32_t seq, NodeId source, NodeId dest, Payload payload) {
  Packet p;
  p.header.kind = kind;
  p.header.seq = seq;
  p.header.source = source;
  p.header.prev_hop = source;
  p.header.dest = dest;
  p.payload = std::move(payload);
  return p;
}

std::uint32_t SeqCounter::next(PacketKind kind) noexcept {
  switch (kind) {
    case PacketKind::Hello: return 0;
    case PacketKind::Tc: return ++tc_;
    default: return ++data_;
  }
}

}  // namespace vanet
