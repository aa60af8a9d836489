#include "vanet/rba.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vanet::rba {

const CacheEntry* CacheTable::find(NodeId source) const {
  auto it = entries_.find(source);
  return it == entries_.end() ? nullptr : &it->second;
}

CacheEntry& CacheTable::upsert(NodeId source) {
  auto [it, inserted] = entries_.try_emplace(source);
  if (inserted) it->second.source = source;
  return it->second;
}

double rebroadcast_probability(std::uint32_t bn) {
  return std::ldexp(1.0, -static_cast<int>(std::min<std::uint32_t>(bn, 1100)));
}

Outcome on_receive(NodeId self, CacheTable& table, Packet& pkt, Rng& rng) {
  Outcome out;
  out.received_from = pkt.header.prev_hop;
  if (pkt.header.source == self) {
    out.decision = Decision::Discard;
    return out;
  }

  const CacheEntry* existing = table.find(pkt.header.source);
  if (existing == nullptr || existing->max_seq < pkt.header.seq) {
    CacheEntry& e = table.upsert(pkt.header.source);
    e.max_seq = pkt.header.seq;
    e.broadcast_number = 1;
    pkt.header.prev_hop = self;
    out.decision = Decision::ForwardNew;
    return out;
  }

  // Any copy at or below the cached sequence bumps the count, stale ones included.
  CacheEntry& e = table.upsert(pkt.header.source);
  const double p = rebroadcast_probability(e.broadcast_number);
  if (e.broadcast_number < std::numeric_limits<std::uint32_t>::max()) ++e.broadcast_number;
  if (uniform01(rng) < p) {
    pkt.header.prev_hop = self;
    out.decision = Decision::ForwardDuplicate;
  } else {
    out.decision = Decision::DropDuplicate;
  }
  return out;
}

}  // namespace vanet::rba
