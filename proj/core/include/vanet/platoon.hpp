#pragma once

#include <deque>
#include <map>
#include <optional>
#include <vector>

#include "vanet/medium.hpp"
#include "vanet/packet.hpp"

namespace vanet::platoon {

inline constexpr double kLeadLengthM = 10.0;
inline constexpr double kCruiseSpeed = 30.0;
inline constexpr double kZoneSpeed = 20.0;
inline constexpr double kZoneStartM = 4000.0;
inline constexpr double kZoneEndM = 5000.0;

/// Nominal speed at x: 20 m/s inside [4000, 5000), 30 m/s elsewhere.
double speed_zone(double x) noexcept;

struct GapPolicy {
  double min_gap_m = 10.0;
  double max_gap_m = 20.0;
  double catch_up_boost = 5.0;
  double fallback_drop = 5.0;
  /// Gap behind the tail when joining at the end of the train.
  double join_gap_m = 15.0;
  /// Extra room opened for a middle join on top of the requester's length;
  /// split evenly ahead of and behind the requester.
  double make_space_extra_m = 21.0;
};

struct Dynamics {
  Position pos;
  double velocity = 0.0;
  double acceleration = 0.0;
  double brake = 0.0;
  double throttle = 0.0;
  double length = 5.0;
};

/// Sets a new velocity (never negative), deriving acceleration and the
/// mutually exclusive brake/throttle fractions from the change over dt.
void set_velocity(Dynamics& d, double v, double dt) noexcept;
/// x += v*dt, clamped to the highway.
void advance(Dynamics& d, double dt) noexcept;

/// Bumper-to-bumper gap from `self` to a vehicle ahead whose front is at x_ahead.
constexpr double gap_to(double x_ahead, double len_ahead, double x_self) noexcept {
  return x_ahead - len_ahead - x_self;
}

VehicleInfo to_info(const Dynamics& d, VehicleMode mode) noexcept;

/// Latest vehicle information heard from every other node.
class PeerView {
 public:
  void update(NodeId id, const VehicleInfo& info, Millis heard_at);
  bool knows(NodeId id) const { return peers_.contains(id); }
  /// Position extrapolated to `now` at the reported velocity.
  std::optional<VehicleInfo> at(NodeId id, Millis now) const;
  std::optional<Millis> heard_at(NodeId id) const;
  const auto& all() const noexcept { return peers_; }

 private:
  struct Entry {
    VehicleInfo info;
    Millis heard_at{0};
  };
  std::map<NodeId, Entry> peers_;
};

/// A control packet the application wants sent; the node picks the transport.
struct Outgoing {
  PacketKind kind;
  NodeId dest{};
  Payload payload;
};

enum class CommandStatus { Accepted, IllegalState };

// --- following vehicles -----------------------------------------------------

struct FollowerConfig {
  GapPolicy gap;
  Millis form_timeout{10'000};
  /// How long a vehicle that opened space waits for the newcomer before
  /// going back to its old target.
  Millis make_space_timeout{2'000};
  /// Cruise speed while FREE, capped by the speed zone.
  double cruise_speed = kCruiseSpeed;
  /// Peer information older than this is not trusted for gap keeping.
  Millis stale_after{500};
  /// JOIN (while FORM) and OK (while holding) are repeated this often.
  Millis retry_every{500};
};

enum class FollowPhase {
  None,
  Maneuvering,  // admitted, waiting for the slot to exist on the highway
  Tracking,     // ordinary gap keeping
  MakingSpace,  // falling back to open room for a newcomer
  Holding,      // room open, waiting for the newcomer to slot in
};

struct Transition {
  VehicleMode from;
  VehicleMode to;
};

class Follower {
 public:
  Follower(NodeId self, FollowerConfig cfg, Dynamics init);

  NodeId id() const noexcept { return self_; }
  VehicleMode mode() const noexcept { return mode_; }
  FollowPhase phase() const noexcept { return phase_; }
  std::optional<NodeId> target() const noexcept { return target_; }
  const Dynamics& dynamics() const noexcept { return dyn_; }
  Dynamics& dynamics() noexcept { return dyn_; }
  VehicleInfo info() const noexcept { return to_info(dyn_, mode_); }

  /// FREE -> FORM and one JOIN for the lead.
  CommandStatus request_join(Millis now, std::vector<Outgoing>& out);
  /// FOLLOW -> FREE, left lane, three LEAVEs for the lead.
  CommandStatus request_leave(Millis now, std::vector<Outgoing>& out);

  /// Admission from the lead. Ignored unless FORM.
  bool on_ack_join(const AckJoinPayload& ack, Millis now);
  /// Refollow or make-space instruction from the lead. Ignored unless FOLLOW.
  bool on_notify(const NotifyPayload& n, Millis now);

  /// Timeouts, maneuvers and kinematics for one tick.
  void step(double dt, Millis now, const PeerView& peers, std::vector<Outgoing>& out);

  /// Mode changes since the last call, in order.
  std::vector<Transition> take_transitions();

 private:
  void enter(VehicleMode m);
  void free_drive(double dt, Millis now, const PeerView& peers);
  void follow_drive(double dt, Millis now, const PeerView& peers, std::vector<Outgoing>& out);
  std::optional<VehicleInfo> fresh(const PeerView& peers, NodeId id, Millis now) const;

  NodeId self_;
  FollowerConfig cfg_;
  Dynamics dyn_;
  VehicleMode mode_ = VehicleMode::Free;
  FollowPhase phase_ = FollowPhase::None;
  std::optional<NodeId> target_;
  Millis form_deadline_{0};
  Millis next_retry_{0};
  double join_gap_ = 0.0;
  // make-space state
  NodeId newcomer_{};
  double spacing_ = 0.0;
  Millis hold_deadline_{0};
  std::vector<Transition> transitions_;
};

// --- lead truck -------------------------------------------------------------

struct LeadConfig {
  GapPolicy gap;
  /// A join transaction that has not completed by then is abandoned.
  Millis transaction_timeout{10'000};
};

enum class Awaiting { None, SpaceOk, RequesterAck };

struct PendingJoin {
  NodeId requester{};
  NodeId insert_after{};
  std::optional<NodeId> successor;
  Awaiting awaiting = Awaiting::None;
  Millis started_at{0};
  double spacing_m = 0.0;
  double gap_m = 0.0;
  /// When the admitting ACK_JOIN went out.
  Millis admitted_at{0};
};

/// Resent: a repeated JOIN from the pending requester; the last step was sent again.
enum class JoinDisposition { Started, Queued, Resent, Ignored };

class Lead {
 public:
  Lead(LeadConfig cfg, Dynamics init);

  const Dynamics& dynamics() const noexcept { return dyn_; }
  Dynamics& dynamics() noexcept { return dyn_; }
  VehicleInfo info() const noexcept { return to_info(dyn_, VehicleMode::Lead); }
  const std::vector<NodeId>& train() const noexcept { return train_; }
  const std::optional<PendingJoin>& pending() const noexcept { return pending_; }
  std::size_t queued() const noexcept { return queue_.size(); }

  JoinDisposition on_join(NodeId requester, const VehicleInfo& at_request, Millis now,
                          const PeerView& peers, std::vector<Outgoing>& out);
  void on_ok(NodeId from, const OkPayload& ok, Millis now, const PeerView& peers,
             std::vector<Outgoing>& out);
  /// Confirmation from a requester that has taken its place. A requester heard
  /// in FOLLOW on the right lane after admission counts as the same thing.
  void on_ack_join(NodeId from, const AckJoinPayload& ack, Millis now, const PeerView& peers,
                   std::vector<Outgoing>& out);
  void on_leave(NodeId k, Millis now, const PeerView& peers, std::vector<Outgoing>& out);

  /// Drops the current transaction (lost route, timeout) and starts the next one.
  void abort_pending(Millis now, const PeerView& peers, std::vector<Outgoing>& out);

  /// Random-walk cruise with speed-zone overrides, plus transaction timeout.
  /// Returns true when a zone boundary was crossed this tick.
  bool step(double dt, Millis now, Rng& rng, const PeerView& peers, std::vector<Outgoing>& out);

  /// Direction guard; every vehicle here travels the same way.
  static bool same_direction(const VehicleInfo&) noexcept { return true; }

 private:
  struct Request {
    NodeId requester{};
    VehicleInfo info;
    Millis received_at{0};
  };

  void start(const Request& r, Millis now, const PeerView& peers, std::vector<Outgoing>& out);
  void start_next(Millis now, const PeerView& peers, std::vector<Outgoing>& out);
  void admit(Millis now, std::vector<Outgoing>& out);
  void complete(Millis now, const PeerView& peers, std::vector<Outgoing>& out);
  double member_x(NodeId id, Millis now, const PeerView& peers) const;

  LeadConfig cfg_;
  Dynamics dyn_;
  std::vector<NodeId> train_{kLeadId};
  std::optional<PendingJoin> pending_;
  std::deque<Request> queue_;
};

}  // namespace vanet::platoon
