#pragma once

#include <cstdint>
#include <map>
#include <optional>

#include "vanet/medium.hpp"
#include "vanet/packet.hpp"

namespace vanet::rba {

struct CacheEntry {
  NodeId source{};
  std::uint32_t max_seq = 0;
  /// How many times the packet with max_seq has been broadcast by this node.
  std::uint32_t broadcast_number = 1;

  friend bool operator==(const CacheEntry&, const CacheEntry&) = default;
};

/// Largest sequence number seen per source, plus its broadcast count.
class CacheTable {
 public:
  const CacheEntry* find(NodeId source) const;
  CacheEntry& upsert(NodeId source);
  std::size_t size() const noexcept { return entries_.size(); }
  const std::map<NodeId, CacheEntry>& entries() const noexcept { return entries_; }

 private:
  std::map<NodeId, CacheEntry> entries_;
};

enum class Decision { Discard, ForwardNew, ForwardDuplicate, DropDuplicate };

struct Outcome {
  Decision decision = Decision::Discard;
  /// Neighbor the copy came from; forwarding fans out to everyone else.
  NodeId received_from{};

  bool forwards() const noexcept {
    return decision == Decision::ForwardNew || decision == Decision::ForwardDuplicate;
  }
};

/// Probability that a packet already broadcast `bn` times is sent again: 2^-bn.
double rebroadcast_probability(std::uint32_t bn);

/// Cache update and forwarding decision for one received copy. On any forward
/// decision the packet's prev_hop is rewritten to `self`.
Outcome on_receive(NodeId self, CacheTable& table, Packet& pkt, Rng& rng);

}  // namespace vanet::rba
