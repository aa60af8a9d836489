#include "vanet/medium.hpp"

#include <cassert>
#include <cmath>

namespace vanet {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void MediumConfig::validate() const {
  if (!(range_m > 0.0)) throw ConfigError("medium.range_m must be > 0");
  if (!(loss_max >= 0.0 && loss_max <= 1.0)) throw ConfigError("medium.loss_max must be in [0,1]");
  if (per_hop_delay.count() < 0) throw ConfigError("medium.per_hop_delay_ms must be >= 0");
}

double distance(const Position& a, const Position& b) noexcept {
  return std::hypot(a.x - b.x, lateral_offset(a.lane) - lateral_offset(b.lane));
}

double loss_probability(double distance_m, const MediumConfig& cfg) noexcept {
  if (distance_m > cfg.range_m) return 1.0;
  return cfg.loss_max * distance_m / cfg.range_m;
}

InprocMedium::InprocMedium(MediumConfig cfg) : cfg_(cfg), rng_(cfg.rng_seed) { cfg_.validate(); }

void InprocMedium::place(NodeId id, Position pos) { positions_[id] = pos; }

const Position& InprocMedium::position(NodeId id) const {
  auto it = positions_.find(id);
  if (it == positions_.end()) throw UnknownNode(id);
  return it->second;
}

std::vector<NodeId> InprocMedium::neighbors_in_range(NodeId id) const {
  const Position& self = position(id);
  std::vector<NodeId> out;
  for (const auto& [other, pos] : positions_) {
    if (other != id && distance(self, pos) <= cfg_.range_m) out.push_back(other);
  }
  return out;
}

DeliveryOutcome InprocMedium::attempt(NodeId from, NodeId to, const Packet& pkt, Millis now) {
  DeliveryOutcome out;
  out.receiver = to;
  out.distance_m = distance(position(from), position(to));
  out.loss_p = loss_probability(out.distance_m, cfg_);
  if (out.distance_m <= cfg_.range_m) {
    out.delivered = uniform01(rng_) >= out.loss_p;
  }
  if (out.delivered) {
    assert(out.distance_m <= cfg_.range_m);
    queue_.push(PendingDelivery{now + cfg_.per_hop_delay, order_++, from, to, pkt});
  }
  return out;
}

std::vector<DeliveryOutcome> InprocMedium::transmit(NodeId from, NodeId to, const Packet& pkt,
                                                    Millis now) {
  if (!registered(from)) throw UnknownNode(from);
  std::vector<DeliveryOutcome> outcomes;
  if (to == kBroadcast) {
    outcomes.reserve(positions_.size());
    for (const auto& entry : positions_) {
      if (entry.first != from) outcomes.push_back(attempt(from, entry.first, pkt, now));
    }
    return outcomes;
  }
  if (!registered(to)) throw UnknownNode(to);
  if (to != from) outcomes.push_back(attempt(from, to, pkt, now));
  return outcomes;
}

std::optional<PendingDelivery> InprocMedium::pop_due(Millis now) {
  if (queue_.empty() || queue_.top().at > now) return std::nullopt;
  // Moving out of top() is safe: ordering keys are trivially copyable.
  PendingDelivery d = std::move(const_cast<PendingDelivery&>(queue_.top()));
  queue_.pop();
  return d;
}

std::optional<Millis> InprocMedium::next_due() const {
  if (queue_.empty()) return std::nullopt;
  return queue_.top().at;
}

}  // namespace vanet
