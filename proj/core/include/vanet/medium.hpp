#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <vector>

#include "vanet/packet.hpp"
#include "vanet/types.hpp"

namespace vanet {

using Rng = std::mt19937_64;

/// Uniform draw in [0, 1) built from the top 53 bits, identical on every platform.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Independent stream seed for `stream` under a run seed (splitmix64 finaliser).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept;

struct MediumConfig {
  double range_m = 100.0;
  double loss_max = 0.2;
  Millis per_hop_delay{1};
  std::uint64_t rng_seed = 1;

  void validate() const;
};

/// Euclidean distance over the longitudinal axis and the lane offset.
double distance(const Position& a, const Position& b) noexcept;

/// Linear loss law: loss_max * d / range inside the range, 1 outside it.
double loss_probability(double distance_m, const MediumConfig& cfg) noexcept;

struct DeliveryOutcome {
  NodeId receiver{};
  double distance_m = 0.0;
  double loss_p = 1.0;
  bool delivered = false;
};

struct PendingDelivery {
  Millis at{0};
  std::uint64_t order = 0;
  NodeId sender{};
  NodeId receiver{};
  Packet packet;
};

/// Deterministic single-loop medium. Loss and range are applied at transmit
/// time; surviving copies are queued for delivery one hop delay later.
class InprocMedium {
 public:
  explicit InprocMedium(MediumConfig cfg);

  const MediumConfig& config() const noexcept { return cfg_; }

  void place(NodeId id, Position pos);
  bool registered(NodeId id) const { return positions_.contains(id); }
  const Position& position(NodeId id) const;
  const std::map<NodeId, Position>& positions() const noexcept { return positions_; }

  /// Nodes within range of `id` (the range relation used by flooding).
  std::vector<NodeId> neighbors_in_range(NodeId id) const;

  /// `to` may be kBroadcast. Throws UnknownNode for unregistered endpoints.
  std::vector<DeliveryOutcome> transmit(NodeId from, NodeId to, const Packet& pkt, Millis now);

  /// Pops the earliest delivery due at or before `now`.
  std::optional<PendingDelivery> pop_due(Millis now);
  std::optional<Millis> next_due() const;
  bool idle() const noexcept { return queue_.empty(); }

 private:
  DeliveryOutcome attempt(NodeId from, NodeId to, const Packet& pkt, Millis now);

  struct Later {
    bool operator()(const PendingDelivery& a, const PendingDelivery& b) const noexcept {
      return a.at != b.at ? a.at > b.at : a.order > b.order;
    }
  };

  MediumConfig cfg_;
  Rng rng_;
  std::map<NodeId, Position> positions_;
  std::priority_queue<PendingDelivery, std::vector<PendingDelivery>, Later> queue_;
  std::uint64_t order_ = 0;
};

}  // namespace vanet
