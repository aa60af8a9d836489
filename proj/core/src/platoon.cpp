#include "vanet/platoon.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace vanet::platoon {

namespace {

constexpr double kFullActuation = 5.0;  // m/s^2 that maps to a fraction of 1

}  // namespace

double speed_zone(double x) noexcept {
  return x >= kZoneStartM && x < kZoneEndM ? kZoneSpeed : kCruiseSpeed;
}

void set_velocity(Dynamics& d, double v, double dt) noexcept {
  v = std::max(0.0, v);
  d.acceleration = dt > 0 ? (v - d.velocity) / dt : 0.0;
  d.velocity = v;
  d.throttle = d.acceleration > 0 ? std::min(1.0, d.acceleration / kFullActuation) : 0.0;
  d.brake = d.acceleration < 0 ? std::min(1.0, -d.acceleration / kFullActuation) : 0.0;
}

void advance(Dynamics& d, double dt) noexcept {
  d.pos.x = std::clamp(d.pos.x + d.velocity * dt, 0.0, kHighwayLengthM);
}

VehicleInfo to_info(const Dynamics& d, VehicleMode mode) noexcept {
  VehicleInfo v;
  v.x = d.pos.x;
  v.lane = d.pos.lane;
  v.velocity = d.velocity;
  v.acceleration = d.acceleration;
  v.brake = d.brake;
  v.throttle = d.throttle;
  v.length = d.length;
  v.mode = mode;
  return v;
}

void PeerView::update(NodeId id, const VehicleInfo& info, Millis heard_at) {
  auto& e = peers_[id];
  if (heard_at < e.heard_at) return;
  e.info = info;
  e.heard_at = heard_at;
}

std::optional<VehicleInfo> PeerView::at(NodeId id, Millis now) const {
  auto it = peers_.find(id);
  if (it == peers_.end()) return std::nullopt;
  VehicleInfo v = it->second.info;
  const double age = std::chrono::duration<double>(now - it->second.heard_at).count();
  v.x = std::clamp(v.x + v.velocity * std::max(0.0, age), 0.0, kHighwayLengthM);
  return v;
}

std::optional<Millis> PeerView::heard_at(NodeId id) const {
  auto it = peers_.find(id);
  if (it == peers_.end()) return std::nullopt;
  return it->second.heard_at;
}

// --- Follower ---------------------------------------------------------------

Follower::Follower(NodeId self, FollowerConfig cfg, Dynamics init)
    : self_(self), cfg_(cfg), dyn_(init) {}

void Follower::enter(VehicleMode m) {
  if (m == mode_ && m != VehicleMode::Follow) return;
  transitions_.push_back({mode_, m});
  mode_ = m;
}

std::vector<Transition> Follower::take_transitions() { return std::exchange(transitions_, {}); }

CommandStatus Follower::request_join(Millis now, std::vector<Outgoing>& out) {
  if (mode_ != VehicleMode::Free) return CommandStatus::IllegalState;
  enter(VehicleMode::Form);
  form_deadline_ = now + cfg_.form_timeout;
  next_retry_ = now + cfg_.retry_every;
  out.push_back({PacketKind::Join, kLeadId, info()});
  return CommandStatus::Accepted;
}

CommandStatus Follower::request_leave(Millis, std::vector<Outgoing>& out) {
  if (mode_ != VehicleMode::Follow) return CommandStatus::IllegalState;
  for (std::uint8_t i = 1; i <= 3; ++i) out.push_back({PacketKind::Leave, kLeadId, LeavePayload{i}});
  enter(VehicleMode::Free);
  phase_ = FollowPhase::None;
  target_.reset();
  dyn_.pos.lane = Lane::Left;
  return CommandStatus::Accepted;
}

bool Follower::on_ack_join(const AckJoinPayload& ack, Millis) {
  if (mode_ != VehicleMode::Form) return false;
  enter(VehicleMode::Follow);
  target_ = ack.follow;
  join_gap_ = ack.gap_m;
  phase_ = FollowPhase::Maneuvering;
  return true;
}

bool Follower::on_notify(const NotifyPayload& n, Millis) {
  if (mode_ != VehicleMode::Follow || phase_ == FollowPhase::Maneuvering) return false;
  if (n.purpose == NotifyPurpose::Refollow) {
    if (target_ != n.target) enter(VehicleMode::Follow);
    target_ = n.target;
    phase_ = FollowPhase::Tracking;
  } else {
    const bool busy = phase_ == FollowPhase::MakingSpace || phase_ == FollowPhase::Holding;
    if (busy && newcomer_ == n.target) return true;
    newcomer_ = n.target;
    spacing_ = n.spacing_m;
    phase_ = FollowPhase::MakingSpace;
  }
  return true;
}

std::optional<VehicleInfo> Follower::fresh(const PeerView& peers, NodeId id, Millis now) const {
  const auto heard = peers.heard_at(id);
  if (!heard || now - *heard > cfg_.stale_after) return std::nullopt;
  return peers.at(id, now);
}

void Follower::free_drive(double dt, Millis now, const PeerView& peers) {
  double v = std::min(cfg_.cruise_speed, speed_zone(dyn_.pos.x));
  std::optional<VehicleInfo> ahead;
  for (const auto& [id, e] : peers.all()) {
    if (id == self_) continue;
    const auto p = fresh(peers, id, now);
    if (!p || p->lane != dyn_.pos.lane || p->x <= dyn_.pos.x) continue;
    if (!ahead || p->x < ahead->x) ahead = p;
  }
  if (ahead && gap_to(ahead->x, ahead->length, dyn_.pos.x) < cfg_.gap.min_gap_m) {
    v = std::min(v, ahead->velocity - cfg_.gap.fallback_drop);
  }
  set_velocity(dyn_, v, dt);
}

void Follower::follow_drive(double dt, Millis now, const PeerView& peers, std::vector<Outgoing>& out) {
  const auto t = fresh(peers, *target_, now);

  if (phase_ == FollowPhase::Maneuvering) {
    const double slot = t ? gap_to(t->x, t->length, 0.0) - join_gap_ : -1.0;
    if (!t || slot < 0.0) {
      free_drive(dt, now, peers);
      return;
    }
    dyn_.pos = {slot, Lane::Right};
    set_velocity(dyn_, t->velocity, dt);
    phase_ = FollowPhase::Tracking;
    out.push_back({PacketKind::AckJoin, kLeadId, AckJoinPayload{*target_, join_gap_}});
    return;
  }
  if (!t) {
    set_velocity(dyn_, dyn_.velocity, dt);
    return;
  }

  const double g = gap_to(t->x, t->length, dyn_.pos.x);
  const GapPolicy& gp = cfg_.gap;
  switch (phase_) {
    case FollowPhase::MakingSpace:
      if (g >= spacing_) {
        phase_ = FollowPhase::Holding;
        hold_deadline_ = now + cfg_.make_space_timeout;
        next_retry_ = now + cfg_.retry_every;
        out.push_back({PacketKind::Ok, kLeadId, OkPayload{newcomer_}});
        set_velocity(dyn_, t->velocity, dt);
      } else {
        set_velocity(dyn_, t->velocity - gp.fallback_drop, dt);
      }
      return;
    case FollowPhase::Holding: {
      const auto n = fresh(peers, newcomer_, now);
      if (n && n->mode == VehicleMode::Follow && n->lane == Lane::Right && n->x > dyn_.pos.x) {
        enter(VehicleMode::Follow);
        target_ = newcomer_;
        phase_ = FollowPhase::Tracking;
        const double ng = gap_to(n->x, n->length, dyn_.pos.x);
        set_velocity(dyn_, ng > gp.max_gap_m  ? n->velocity + gp.catch_up_boost
                           : ng < gp.min_gap_m ? n->velocity - gp.fallback_drop
                                               : n->velocity,
                     dt);
        return;
      }
      if (now >= hold_deadline_) {
        phase_ = FollowPhase::Tracking;
      } else if (now >= next_retry_) {
        next_retry_ = now + cfg_.retry_every;
        out.push_back({PacketKind::Ok, kLeadId, OkPayload{newcomer_}});
      }
      set_velocity(dyn_, t->velocity, dt);
      return;
    }
    default:
      break;
  }

  double v = t->velocity;
  if (g > gp.max_gap_m) {
    v += gp.catch_up_boost;
  } else if (g < gp.min_gap_m) {
    v -= gp.fallback_drop;
  }
  set_velocity(dyn_, v, dt);
}

void Follower::step(double dt, Millis now, const PeerView& peers, std::vector<Outgoing>& out) {
  if (mode_ == VehicleMode::Form && now >= form_deadline_) enter(VehicleMode::Free);
  if (mode_ == VehicleMode::Form && now >= next_retry_) {
    next_retry_ = now + cfg_.retry_every;
    out.push_back({PacketKind::Join, kLeadId, info()});
  }
  if (mode_ == VehicleMode::Follow && target_) {
    follow_drive(dt, now, peers, out);
  } else {
    free_drive(dt, now, peers);
  }
  advance(dyn_, dt);
}

// --- Lead -------------------------------------------------------------------

Lead::Lead(LeadConfig cfg, Dynamics init) : cfg_(cfg), dyn_(init) {}

double Lead::member_x(NodeId id, Millis now, const PeerView& peers) const {
  if (id == kLeadId) return dyn_.pos.x;
  const auto p = peers.at(id, now);
  return p ? p->x : -1.0;
}

JoinDisposition Lead::on_join(NodeId requester, const VehicleInfo& at_request, Millis now,
                              const PeerView& peers, std::vector<Outgoing>& out) {
  if (requester == kLeadId || !same_direction(at_request)) return JoinDisposition::Ignored;
  if (std::find(train_.begin(), train_.end(), requester) != train_.end()) return JoinDisposition::Ignored;
  if (pending_ && pending_->requester == requester) {
    if (pending_->awaiting == Awaiting::SpaceOk) {
      out.push_back({PacketKind::Notify, *pending_->successor,
                     NotifyPayload{NotifyPurpose::MakeSpace, requester, pending_->spacing_m}});
    } else {
      out.push_back({PacketKind::AckJoin, requester, AckJoinPayload{pending_->insert_after, pending_->gap_m}});
    }
    return JoinDisposition::Resent;
  }
  Request r{requester, at_request, now};
  if (pending_) {
    auto it = std::find_if(queue_.begin(), queue_.end(),
                           [&](const Request& q) { return q.requester == requester; });
    if (it != queue_.end()) {
      *it = r;
    } else {
      queue_.push_back(r);
    }
    return JoinDisposition::Queued;
  }
  start(r, now, peers, out);
  return JoinDisposition::Started;
}

void Lead::start(const Request& r, Millis now, const PeerView& peers, std::vector<Outgoing>& out) {
  const auto latest = peers.at(r.requester, now);
  const double rx = latest && *peers.heard_at(r.requester) >= r.received_at ? latest->x : r.info.x;

  NodeId insert_after = kLeadId;
  double best = 0.0;
  bool found = false;
  for (NodeId m : train_) {
    const double mx = member_x(m, now, peers);
    if (mx > rx && (!found || mx < best)) {
      best = mx;
      insert_after = m;
      found = true;
    }
  }

  PendingJoin p;
  p.requester = r.requester;
  p.insert_after = insert_after;
  p.started_at = now;
  auto pos = std::find(train_.begin(), train_.end(), insert_after);
  if (pos + 1 != train_.end()) p.successor = *(pos + 1);

  pending_ = p;
  if (p.successor) {
    pending_->awaiting = Awaiting::SpaceOk;
    pending_->spacing_m = r.info.length + cfg_.gap.make_space_extra_m;
    pending_->gap_m = cfg_.gap.make_space_extra_m / 2.0;
    out.push_back({PacketKind::Notify, *p.successor,
                   NotifyPayload{NotifyPurpose::MakeSpace, r.requester, pending_->spacing_m}});
  } else {
    pending_->gap_m = cfg_.gap.join_gap_m;
    admit(now, out);
  }
}

void Lead::admit(Millis now, std::vector<Outgoing>& out) {
  pending_->awaiting = Awaiting::RequesterAck;
  pending_->admitted_at = now;
  out.push_back({PacketKind::AckJoin, pending_->requester, AckJoinPayload{pending_->insert_after, pending_->gap_m}});
}

void Lead::complete(Millis now, const PeerView& peers, std::vector<Outgoing>& out) {
  auto pos = std::find(train_.begin(), train_.end(), pending_->insert_after);
  if (pos != train_.end()) train_.insert(pos + 1, pending_->requester);
  pending_.reset();
  start_next(now, peers, out);
}

void Lead::start_next(Millis now, const PeerView& peers, std::vector<Outgoing>& out) {
  while (!pending_ && !queue_.empty()) {
    const Request r = queue_.front();
    queue_.pop_front();
    if (now - r.received_at > cfg_.transaction_timeout) continue;
    if (std::find(train_.begin(), train_.end(), r.requester) != train_.end()) continue;
    start(r, now, peers, out);
  }
}

void Lead::on_ok(NodeId from, const OkPayload& ok, Millis now, const PeerView&, std::vector<Outgoing>& out) {
  if (!pending_ || pending_->awaiting != Awaiting::SpaceOk) return;
  if (pending_->successor != from || ok.requester != pending_->requester) return;
  admit(now, out);
}

void Lead::on_ack_join(NodeId from, const AckJoinPayload&, Millis now, const PeerView& peers,
                       std::vector<Outgoing>& out) {
  if (!pending_ || pending_->awaiting != Awaiting::RequesterAck || pending_->requester != from) return;
  complete(now, peers, out);
}

void Lead::on_leave(NodeId k, Millis now, const PeerView& peers, std::vector<Outgoing>& out) {
  std::erase_if(queue_, [&](const Request& q) { return q.requester == k; });
  auto pos = std::find(train_.begin(), train_.end(), k);
  if (k == kLeadId || pos == train_.end()) return;
  const NodeId pred = *(pos - 1);
  const std::optional<NodeId> succ = pos + 1 != train_.end() ? std::optional<NodeId>(*(pos + 1)) : std::nullopt;
  train_.erase(pos);
  if (succ) out.push_back({PacketKind::Notify, *succ, NotifyPayload{NotifyPurpose::Refollow, pred, 0.0}});
  if (pending_ && (pending_->requester == k || pending_->insert_after == k || pending_->successor == k)) {
    abort_pending(now, peers, out);
  }
}

void Lead::abort_pending(Millis now, const PeerView& peers, std::vector<Outgoing>& out) {
  pending_.reset();
  start_next(now, peers, out);
}

bool Lead::step(double dt, Millis now, Rng& rng, const PeerView& peers, std::vector<Outgoing>& out) {
  if (pending_ && pending_->awaiting == Awaiting::RequesterAck) {
    const auto heard = peers.heard_at(pending_->requester);
    const auto p = peers.at(pending_->requester, now);
    if (heard && *heard > pending_->admitted_at && p->mode == VehicleMode::Follow && p->lane == Lane::Right) {
      complete(now, peers, out);
    }
  }
  if (pending_ && now - pending_->started_at >= cfg_.transaction_timeout) abort_pending(now, peers, out);

  const double before = speed_zone(dyn_.pos.x);
  const double jitter = (2.0 * uniform01(rng) - 1.0) * dt;
  set_velocity(dyn_, std::clamp(dyn_.velocity + jitter, before - 1.0, before + 1.0), dt);
  advance(dyn_, dt);
  const double after = speed_zone(dyn_.pos.x);
  if (after != before) {
    set_velocity(dyn_, after, dt);
    return true;
  }
  return false;
}

}  // namespace vanet::platoon
