#include "vanet/node.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

#include "vanet/metrics.hpp"

namespace vanet {

std::string_view to_string(CommandResult r) {
  switch (r) {
    case CommandResult::Accepted: return "Accepted";
    case CommandResult::IllegalState: return "IllegalState";
    case CommandResult::NoRoute: return "NoRoute";
    case CommandResult::NotAFollower: return "NotAFollower";
  }
  return "?";
}

namespace {

std::string describe(const Packet& p) {
  std::ostringstream out;
  out << to_string(p.header.kind) << " seq=" << p.header.seq << " src=" << raw(p.header.source)
      << " dest=" << raw(p.header.dest);
  std::visit(
      [&](const auto& body) {
        using T = std::decay_t<decltype(body)>;
        if constexpr (std::is_same_v<T, AckJoinPayload>) {
          out << " follow=" << raw(body.follow) << " gap=" << body.gap_m;
        } else if constexpr (std::is_same_v<T, NotifyPayload>) {
          out << " purpose=" << (body.purpose == NotifyPurpose::Refollow ? "REFOLLOW" : "MAKE_SPACE")
              << " target=" << raw(body.target) << " spacing=" << body.spacing_m;
        } else if constexpr (std::is_same_v<T, OkPayload>) {
          out << " requester=" << raw(body.requester);
        } else if constexpr (std::is_same_v<T, LeavePayload>) {
          out << " attempt=" << static_cast<int>(body.attempt);
        }
      },
      p.payload);
  return out.str();
}

std::string join_ids(const std::vector<NodeId>& ids) {
  std::string s;
  for (NodeId id : ids) {
    if (!s.empty()) s += ',';
    s += to_string(id);
  }
  return s;
}

}  // namespace

VehicleNode::VehicleNode(NodeId id, NodeConfig cfg, platoon::Dynamics init, std::uint64_t seed,
                         Link& link, NodeObserver& obs)
    : id_(id),
      cfg_(cfg),
      link_(link),
      obs_(obs),
      rng_(seed),
      olsr_(id, cfg.olsr),
      role_(id == kLeadId ? decltype(role_)(platoon::Lead(cfg.lead, init))
                          : decltype(role_)(platoon::Follower(id, cfg.follower, init))) {}

VehicleInfo VehicleNode::info() const {
  return std::visit([](const auto& r) { return r.info(); }, role_);
}

const platoon::Dynamics& VehicleNode::dynamics() const {
  return std::visit([](const auto& r) -> const platoon::Dynamics& { return r.dynamics(); }, role_);
}

Position VehicleNode::position() const { return dynamics().pos; }

VehicleMode VehicleNode::mode() const {
  if (const auto* f = follower()) return f->mode();
  return VehicleMode::Lead;
}

std::optional<NodeId> VehicleNode::follow_target() const {
  if (const auto* f = follower()) return f->target();
  return std::nullopt;
}

std::vector<NodeId> VehicleNode::train() const {
  if (const auto* l = lead()) return l->train();
  return {};
}

bool VehicleNode::has_route(NodeId dest, Millis now) const {
  if (cfg_.scheme == Scheme::Rba) return true;
  return olsr::compute_routes(id_, olsr_.neighbors, olsr_.topology, now).contains(dest);
}

std::vector<NodeId> VehicleNode::forward_set(NodeId except_a, NodeId except_b) const {
  std::vector<NodeId> out =
      cfg_.scheme == Scheme::Rba ? link_.in_range(id_) : olsr_.neighbors.symmetric_neighbors();
  std::erase_if(out, [&](NodeId n) { return n == except_a || n == except_b || n == id_; });
  return out;
}

void VehicleNode::send_to_neighbors(const Packet& pkt, Millis now, NodeId except_a, NodeId except_b) {
  for (NodeId n : forward_set(except_a, except_b)) link_.send(id_, n, pkt, now);
}

// --- periodic traffic -------------------------------------------------------

void VehicleNode::originate_normal(Millis now) {
  const std::uint32_t seq = seq_.next(PacketKind::Normal);
  const Packet pkt = make_packet(PacketKind::Normal, seq, id_, kBroadcast, info());
  obs_.normal_originated(id_, seq, now);
  if (is_lead() && cfg_.echo_every > 0 && seq % cfg_.echo_every == 0) {
    probes_.erase(probes_.begin(), probes_.lower_bound(seq > 1000 ? seq - 1000 : 0));
    probes_[seq] = now;
  }
  send_to_neighbors(pkt, now, id_, id_);
}

void VehicleNode::timers(Millis now) {
  if (now >= next_normal_) {
    originate_normal(now);
    next_normal_ = now + cfg_.timers.normal;
  }
  if (cfg_.scheme != Scheme::Mpr) return;
  if (now >= next_hello_) {
    olsr::expire(olsr_, now, rng_);
    link_.send(id_, kBroadcast, olsr::generate_hello(olsr_), now);
    next_hello_ = now + cfg_.timers.hello;
  }
  if (now >= next_tc_) {
    if (auto tc = olsr::generate_tc(olsr_, seq_)) send_to_neighbors(*tc, now, id_, id_);
    next_tc_ = now + cfg_.timers.tc;
  }
}

// --- reception --------------------------------------------------------------

void VehicleNode::on_packet(const Packet& pkt, Millis now) {
  switch (pkt.header.kind) {
    case PacketKind::Hello:
      if (cfg_.scheme == Scheme::Mpr) olsr::process_hello(olsr_, pkt, now, rng_);
      return;
    case PacketKind::Tc: {
      if (cfg_.scheme != Scheme::Mpr) return;
      const NodeId from = pkt.header.prev_hop;
      const auto fwd = olsr::forward_decision(olsr_, pkt);
      if (fwd == olsr::Forward::Drop) return;
      olsr::process_tc(olsr_.topology, pkt, now, cfg_.olsr.topology_hold);
      if (fwd == olsr::Forward::Retransmit) {
        Packet copy = pkt;
        copy.header.prev_hop = id_;
        send_to_neighbors(copy, now, from, pkt.header.source);
      }
      return;
    }
    case PacketKind::Normal:
      on_normal(pkt, now);
      return;
    default:
      on_control(pkt, now);
      return;
  }
}

void VehicleNode::on_normal(Packet pkt, Millis now) {
  if (pkt.header.source == id_) {
    auto it = probes_.find(pkt.header.seq);
    if (it != probes_.end()) {
      obs_.echo_returned(pkt.header.seq, it->second, now);
      probes_.erase(it);
    }
    return;
  }
  const auto& body = std::get<VehicleInfo>(pkt.payload);

  if (cfg_.scheme == Scheme::Rba) {
    const PacketHeader heard = pkt.header;
    const auto out = rba::on_receive(id_, data_cache_, pkt, rng_);
    if (out.decision == rba::Decision::ForwardNew) {
      peers_.update(pkt.header.source, body, now);
      obs_.normal_accepted(id_, pkt.header.source, pkt.header.seq, now);
      if (!is_lead() && echo_decision(Packet{heard, pkt.payload}, kLeadId, cfg_.echo_every)) {
        link_.send(id_, kLeadId, pkt, now);
      }
    }
    if (out.forwards()) send_to_neighbors(pkt, now, out.received_from, out.received_from);
    return;
  }

  const NodeId from = pkt.header.prev_hop;
  const auto fwd = olsr::forward_decision(olsr_, pkt);
  if (fwd == olsr::Forward::Drop) return;
  peers_.update(pkt.header.source, body, now);
  obs_.normal_accepted(id_, pkt.header.source, pkt.header.seq, now);
  if (!is_lead() && echo_decision(pkt, kLeadId, cfg_.echo_every)) {
    Packet echo = pkt;
    echo.header.prev_hop = id_;
    link_.send(id_, kLeadId, echo, now);
  }
  if (fwd == olsr::Forward::Retransmit) {
    pkt.header.prev_hop = id_;
    send_to_neighbors(pkt, now, from, pkt.header.source);
  }
}

void VehicleNode::on_control(Packet pkt, Millis now) {
  if (cfg_.scheme == Scheme::Rba) {
    const auto out = rba::on_receive(id_, control_cache_, pkt, rng_);
    if (out.decision == rba::Decision::Discard) return;
    if (pkt.header.dest == id_) {
      if (out.decision == rba::Decision::ForwardNew) deliver(pkt, now);
      return;
    }
    if (out.forwards()) send_to_neighbors(pkt, now, out.received_from, out.received_from);
    return;
  }

  if (pkt.header.dest == id_) {
    deliver(pkt, now);
    return;
  }
  const auto d = olsr::route_unicast(olsr_, pkt, now);
  if (d.kind == olsr::RouteKind::ForwardTo) {
    link_.send(id_, d.next_hop, pkt, now);
  } else if (d.kind == olsr::RouteKind::NoRoute) {
    log(now, "drop-noroute " + describe(pkt));
  }
}

void VehicleNode::deliver(const Packet& pkt, Millis now) {
  log(now, "recv " + describe(pkt));
  const NodeId from = pkt.header.source;
  std::vector<platoon::Outgoing> out;

  if (auto* l = std::get_if<platoon::Lead>(&role_)) {
    const auto before = l->train();
    switch (pkt.header.kind) {
      case PacketKind::Join: {
        const auto& v = std::get<VehicleInfo>(pkt.payload);
        peers_.update(from, v, now);
        const auto d = l->on_join(from, v, now, peers_, out);
        if (d == platoon::JoinDisposition::Queued) log(now, "join-queued " + to_string(from));
        if (d == platoon::JoinDisposition::Resent) log(now, "join-resent " + to_string(from));
        if (d == platoon::JoinDisposition::Ignored) log(now, "join-ignored " + to_string(from));
        break;
      }
      case PacketKind::Ok:
        l->on_ok(from, std::get<OkPayload>(pkt.payload), now, peers_, out);
        break;
      case PacketKind::AckJoin:
        l->on_ack_join(from, std::get<AckJoinPayload>(pkt.payload), now, peers_, out);
        break;
      case PacketKind::Leave:
        l->on_leave(from, now, peers_, out);
        break;
      default:
        break;
    }
    flush(out, now);
    if (l->train() != before) log(now, "train " + join_ids(l->train()));
    return;
  }

  auto& f = std::get<platoon::Follower>(role_);
  bool used = false;
  if (pkt.header.kind == PacketKind::AckJoin) used = f.on_ack_join(std::get<AckJoinPayload>(pkt.payload), now);
  if (pkt.header.kind == PacketKind::Notify) used = f.on_notify(std::get<NotifyPayload>(pkt.payload), now);
  if (!used) log(now, "ignored " + std::string(to_string(pkt.header.kind)));
  log_transitions(now);
}

// --- application ------------------------------------------------------------

bool VehicleNode::send_control(const platoon::Outgoing& o, Millis now) {
  Packet pkt = make_packet(o.kind, seq_.next(o.kind), id_, o.dest, o.payload);
  if (cfg_.scheme == Scheme::Mpr) {
    const auto d = olsr::route_unicast(olsr_, pkt, now);
    if (d.kind != olsr::RouteKind::ForwardTo) {
      log(now, "send-noroute " + describe(pkt));
      return false;
    }
    log(now, "send " + describe(pkt));
    link_.send(id_, d.next_hop, pkt, now);
    return true;
  }
  log(now, "send " + describe(pkt));
  send_to_neighbors(pkt, now, id_, id_);
  return true;
}

void VehicleNode::flush(std::vector<platoon::Outgoing>& out, Millis now) {
  std::deque<platoon::Outgoing> queue(out.begin(), out.end());
  out.clear();
  while (!queue.empty()) {
    const platoon::Outgoing o = std::move(queue.front());
    queue.pop_front();
    const bool sent = send_control(o, now);
    auto* l = std::get_if<platoon::Lead>(&role_);
    if (sent || !l || !l->pending()) continue;
    const auto& p = *l->pending();
    const bool part_of_join = (o.kind == PacketKind::AckJoin && o.dest == p.requester) ||
                              (o.kind == PacketKind::Notify && p.successor == o.dest);
    if (!part_of_join) continue;
    log(now, "join-aborted " + to_string(p.requester));
    std::vector<platoon::Outgoing> more;
    l->abort_pending(now, peers_, more);
    queue.insert(queue.end(), more.begin(), more.end());
  }
}

void VehicleNode::log_transitions(Millis now) {
  auto* f = std::get_if<platoon::Follower>(&role_);
  if (!f) return;
  for (const auto& t : f->take_transitions()) {
    std::string line = "mode " + std::string(to_string(t.from)) + "->" + std::string(to_string(t.to));
    if (t.to == VehicleMode::Follow && f->target()) line += " target=" + to_string(*f->target());
    log(now, line);
  }
}

bool VehicleNode::physics(double dt, Millis now) {
  std::vector<platoon::Outgoing> out;
  bool crossed = false;
  if (auto* l = std::get_if<platoon::Lead>(&role_)) {
    const auto before = l->train();
    const auto waiting = l->pending() ? std::optional<NodeId>(l->pending()->requester) : std::nullopt;
    crossed = l->step(dt, now, rng_, peers_, out);
    const auto& tr = l->train();
    if (waiting && (!l->pending() || l->pending()->requester != *waiting) &&
        std::find(tr.begin(), tr.end(), *waiting) == tr.end()) {
      log(now, "join-timeout " + to_string(*waiting));
    }
    flush(out, now);
    if (l->train() != before) log(now, "train " + join_ids(l->train()));
    if (crossed) log(now, "zone " + std::to_string(static_cast<int>(platoon::speed_zone(position().x))));
  } else {
    std::get<platoon::Follower>(role_).step(dt, now, peers_, out);
    flush(out, now);
    log_transitions(now);
  }
  return crossed;
}

CommandResult VehicleNode::join(Millis now) {
  auto* f = std::get_if<platoon::Follower>(&role_);
  if (!f) return CommandResult::NotAFollower;
  if (f->mode() != VehicleMode::Free) return CommandResult::IllegalState;
  if (!has_route(kLeadId, now)) return CommandResult::NoRoute;
  std::vector<platoon::Outgoing> out;
  f->request_join(now, out);
  log_transitions(now);
  flush(out, now);
  return CommandResult::Accepted;
}

CommandResult VehicleNode::leave(Millis now) {
  auto* f = std::get_if<platoon::Follower>(&role_);
  if (!f) return CommandResult::NotAFollower;
  std::vector<platoon::Outgoing> out;
  if (f->request_leave(now, out) != platoon::CommandStatus::Accepted) return CommandResult::IllegalState;
  log_transitions(now);
  flush(out, now);
  return CommandResult::Accepted;
}

}  // namespace vanet
