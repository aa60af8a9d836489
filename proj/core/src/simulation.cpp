#include "vanet/simulation.hpp"

#include <algorithm>
#include <deque>
#include <fstream>

#include <nlohmann/json.hpp>

namespace vanet {

// --- event log --------------------------------------------------------------

void EventLog::add(Millis t, NodeId node, std::string text) {
  lines_.push_back(std::to_string(t.count()) + ' ' + std::to_string(raw(node)) + ' ' + std::move(text));
}

std::string EventLog::str() const {
  std::string out;
  for (const auto& l : lines_) {
    out += l;
    out += '\n';
  }
  return out;
}

void EventLog::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << str();
}

// --- JSON -------------------------------------------------------------------

namespace {

nlohmann::json ids(const std::vector<NodeId>& v) {
  auto a = nlohmann::json::array();
  for (NodeId id : v) a.push_back(raw(id));
  return a;
}

nlohmann::json snapshot_json(const Snapshot& s) {
  nlohmann::json j;
  j["schema"] = kSnapshotSchema;
  j["t_ms"] = s.t.count();
  j["mode"] = std::string(to_string(s.mode));
  j["paused"] = s.paused;
  auto vs = nlohmann::json::array();
  for (const auto& v : s.vehicles) {
    nlohmann::json e;
    e["id"] = raw(v.id);
    e["x"] = v.x;
    e["lane"] = std::string(to_string(v.lane));
    e["v"] = v.v;
    e["length"] = v.length;
    e["mode"] = std::string(to_string(v.mode));
    e["target"] = v.target ? nlohmann::json(raw(*v.target)) : nlohmann::json(nullptr);
    e["mprs"] = ids(v.mprs);
    e["table_seq"] = v.table_seq;
    vs.push_back(std::move(e));
  }
  j["vehicles"] = std::move(vs);
  j["train"] = ids(s.train);
  return j;
}

}  // namespace

std::string to_json(const Snapshot& s) { return snapshot_json(s).dump(); }

std::string to_json(const ControlCommand& cmd, const CommandReply& reply) {
  nlohmann::json j;
  if (reply.snapshot) {
    j = snapshot_json(*reply.snapshot);
  } else if (reply.ok) {
    j["ok"] = true;
    j["verb"] = std::string(to_string(cmd.verb));
    if (cmd.node) j["node"] = raw(*cmd.node);
  } else {
    j["error"] = reply.error;
    j["detail"] = reply.detail;
    j["verb"] = std::string(to_string(cmd.verb));
    if (cmd.node) j["node"] = raw(*cmd.node);
  }
  return j.dump();
}

// --- wiring -----------------------------------------------------------------

NodeConfig node_config(const ScenarioConfig& cfg) {
  NodeConfig n;
  n.scheme = cfg.mode;
  n.timers = {Millis{cfg.timers.normal_ms}, Millis{cfg.timers.hello_ms}, Millis{cfg.timers.tc_ms}};
  n.olsr.tie_break = cfg.deterministic_mpr ? olsr::TieBreak::LowestId : olsr::TieBreak::Random;
  n.follower.form_timeout = Millis{cfg.form_timeout_ms};
  n.follower.cruise_speed = cfg.follower_speed;
  n.lead.transaction_timeout = Millis{cfg.form_timeout_ms};
  n.echo_every = cfg.echo_every;
  return n;
}

platoon::Dynamics initial_dynamics(const ScenarioConfig& cfg, NodeId id) {
  platoon::Dynamics d;
  if (id == kLeadId) {
    d.pos = {cfg.lead_x, Lane::Right};
    d.velocity = platoon::speed_zone(cfg.lead_x);
    d.length = platoon::kLeadLengthM;
  } else {
    const std::size_t i = raw(id) - 2u;
    d.pos = {cfg.follower_start_x(i), Lane::Left};
    d.velocity = cfg.follower_speed;
    d.length = cfg.follower_length(i);
  }
  return d;
}

class Simulation::SimLink final : public Link {
 public:
  explicit SimLink(Simulation& sim) : sim_(sim) {}

  void send(NodeId from, NodeId to, const Packet& pkt, Millis now) override {
    sim_.metrics_.transmitted();
    for (const auto& o : sim_.medium_.transmit(from, to, pkt, now)) {
      sim_.metrics_.link_attempt(o.loss_p, o.delivered);
      if (o.delivered && o.distance_m > sim_.medium_.config().range_m) ++sim_.range_violations_;
    }
  }

  std::vector<NodeId> in_range(NodeId self) const override { return sim_.medium_.neighbors_in_range(self); }

 private:
  Simulation& sim_;
};

class Simulation::SimObserver final : public NodeObserver {
 public:
  explicit SimObserver(Simulation& sim) : sim_(sim) {}

  void event(Millis t, NodeId node, const std::string& text) override { sim_.log_.add(t, node, text); }
  void normal_originated(NodeId source, std::uint32_t seq, Millis) override {
    sim_.metrics_.originated(source, seq, sim_.component_size_.at(raw(source)) - 1);
  }
  void normal_accepted(NodeId receiver, NodeId source, std::uint32_t seq, Millis) override {
    sim_.metrics_.accepted(receiver, source, seq);
  }
  void echo_returned(std::uint32_t, Millis sent, Millis back) override { sim_.metrics_.echo(sent, back); }

 private:
  Simulation& sim_;
};

Simulation::Simulation(ScenarioConfig cfg)
    : cfg_(std::move(cfg)),
      medium_([&] {
        cfg_.validate();
        MediumConfig m = cfg_.medium;
        m.rng_seed = cfg_.medium_seed();
        return m;
      }()) {
  end_ = Millis{static_cast<std::int64_t>(cfg_.duration_s * 1000.0)};
  tick_ = Millis{cfg_.timers.normal_ms};
  link_ = std::make_unique<SimLink>(*this);
  observer_ = std::make_unique<SimObserver>(*this);
  const NodeConfig ncfg = node_config(cfg_);
  // lead first, then followers in id order
  for (unsigned i = 1; i <= cfg_.n_vehicles(); ++i) {
    const NodeId id = node(i);
    auto d = initial_dynamics(cfg_, id);
    medium_.place(id, d.pos);
    nodes_.push_back(std::make_unique<VehicleNode>(id, ncfg, d, derive_seed(cfg_.seed, i), *link_, *observer_));
    log_.add(now_, id, "spawn x=" + std::to_string(d.pos.x) + " lane=" + std::string(to_string(d.pos.lane)));
  }
  script_.assign(cfg_.n_vehicles() + 1, ScriptState{});
  trace_ = cfg_.commands;
  std::stable_sort(trace_.begin(), trace_.end(), [](const auto& a, const auto& b) { return a.at < b.at; });
  for (const auto& c : trace_) {
    if (c.cmd.node) script_.at(raw(*c.cmd.node)).managed = false;
  }
  refresh_components();
}

Simulation::~Simulation() = default;

const VehicleNode& Simulation::vehicle(NodeId id) const {
  if (raw(id) < 1 || raw(id) > nodes_.size()) throw UnknownNode(id);
  return *nodes_[raw(id) - 1];
}

VehicleNode& Simulation::mut(NodeId id) { return const_cast<VehicleNode&>(vehicle(id)); }

std::vector<NodeId> Simulation::train() const { return vehicle(kLeadId).train(); }

void Simulation::refresh_components() {
  const std::size_t n = nodes_.size();
  component_size_.assign(n + 1, 1);
  std::vector<int> comp(n + 1, -1);
  int next = 0;
  for (unsigned s = 1; s <= n; ++s) {
    if (comp[s] >= 0) continue;
    std::vector<unsigned> members{s};
    comp[s] = next;
    for (std::size_t k = 0; k < members.size(); ++k) {
      for (NodeId nb : medium_.neighbors_in_range(node(members[k]))) {
        if (comp[raw(nb)] < 0) {
          comp[raw(nb)] = next;
          members.push_back(raw(nb));
        }
      }
    }
    for (unsigned m : members) component_size_[m] = members.size();
    ++next;
  }
}

void Simulation::check_overlap() {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    for (std::size_t j = i + 1; j < nodes_.size(); ++j) {
      const auto& a = nodes_[i]->dynamics();
      const auto& b = nodes_[j]->dynamics();
      if (a.pos.lane != b.pos.lane) continue;
      const auto& front = a.pos.x >= b.pos.x ? a : b;
      const auto& back = a.pos.x >= b.pos.x ? b : a;
      if (platoon::gap_to(front.pos.x, front.length, back.pos.x) < 0.0) {
        ++overlaps_;
        log_.add(now_, NodeId{0}, "overlap " + to_string(nodes_[i]->id()) + " " + to_string(nodes_[j]->id()));
      }
    }
  }
}

void Simulation::run_script() {
  if (!cfg_.scripted) return;
  const Millis leave_at{static_cast<std::int64_t>(cfg_.leave_time_s() * 1000.0)};
  for (std::size_t i = 0; i < cfg_.n_followers; ++i) {
    const NodeId id = node(static_cast<unsigned>(i + 2));
    ScriptState& s = script_[raw(id)];
    if (!s.managed) continue;
    const Millis start{static_cast<std::int64_t>(cfg_.join_stagger_s * 1000.0 * static_cast<double>(i))};
    if (now_ < start) continue;
    VehicleNode& v = mut(id);
    if (now_ >= leave_at) {
      if (v.mode() == VehicleMode::Follow) {
        const auto r = v.leave(now_);
        log_.add(now_, id, "script leave " + std::string(to_string(r)));
      }
      continue;
    }
    if (v.mode() != VehicleMode::Free || now_ < s.next_try) continue;
    const auto r = v.join(now_);
    if (r == CommandResult::NoRoute) s.next_try = now_ + Millis{100};
    if (r == CommandResult::Accepted || s.next_try == now_ + Millis{100}) {
      log_.add(now_, id, "script join " + std::string(to_string(r)));
    }
  }
}

void Simulation::physics_tick() {
  const double dt = static_cast<double>(tick_.count()) / 1000.0;
  for (auto& n : nodes_) {
    n->physics(dt, now_);
    medium_.place(n->id(), n->position());
  }
  refresh_components();
  check_overlap();
  run_script();
  for (const auto& hook : tick_hooks_) hook(*this);
}

void Simulation::step() {
  if (paused_ || finished()) return;
  while (auto d = medium_.pop_due(now_)) {
    metrics_.delivered(wire_size(d->packet));
    mut(d->receiver).on_packet(d->packet, now_);
  }
  while (next_command_ < trace_.size() && trace_[next_command_].at <= now_) {
    handle_command(trace_[next_command_++].cmd);
  }
  if (now_.count() % tick_.count() == 0) physics_tick();
  for (auto& n : nodes_) n->timers(now_);
  if (now_.count() > 0 && now_.count() % 1000 == 0) {
    log_.add(now_, NodeId{0},
             "counters tx=" + std::to_string(metrics_.total_tx()) + " rx=" + std::to_string(metrics_.receptions()) +
                 " rx_bytes=" + std::to_string(metrics_.received_bytes()));
  }
  now_ += Millis{1};
}

void Simulation::run_until(Millis t) {
  while (now_ < t && !finished() && !paused_) step();
}

RunReport Simulation::run() {
  run_until(end_);
  return report();
}

RunReport Simulation::report() const {
  const double elapsed = std::max(0.001, static_cast<double>(now_.count()) / 1000.0);
  return metrics_.report(cfg_.mode, cfg_.n_vehicles(), elapsed);
}

Snapshot Simulation::snapshot() const {
  Snapshot s;
  s.t = now_;
  s.mode = cfg_.mode;
  s.paused = paused_;
  for (const auto& n : nodes_) {
    VehicleSnapshot v;
    v.id = n->id();
    const auto& d = n->dynamics();
    v.x = d.pos.x;
    v.lane = d.pos.lane;
    v.v = d.velocity;
    v.length = d.length;
    v.mode = n->mode();
    v.target = n->follow_target();
    const auto m = n->olsr().neighbors.mprs();
    v.mprs.assign(m.begin(), m.end());
    v.table_seq = n->olsr().neighbors.table_seq;
    s.vehicles.push_back(std::move(v));
  }
  s.train = train();
  return s;
}

CommandReply Simulation::handle_command(const ControlCommand& cmd) {
  CommandReply reply;
  switch (cmd.verb) {
    case Verb::Snapshot:
      reply.ok = true;
      reply.snapshot = snapshot();
      return reply;
    case Verb::Pause:
      paused_ = true;
      reply.ok = true;
      log_.add(now_, NodeId{0}, "cmd PAUSE");
      return reply;
    case Verb::Resume:
      paused_ = false;
      reply.ok = true;
      log_.add(now_, NodeId{0}, "cmd RESUME");
      return reply;
    case Verb::Join:
    case Verb::Leave:
      break;
  }
  if (!cmd.node || raw(*cmd.node) < 1 || raw(*cmd.node) > nodes_.size()) {
    reply.error = "UnknownNode";
    reply.detail = cmd.node ? "no node " + to_string(*cmd.node) : "missing node";
    return reply;
  }
  const NodeId id = *cmd.node;
  script_.at(raw(id)).managed = false;
  VehicleNode& v = mut(id);
  const CommandResult r = cmd.verb == Verb::Join ? v.join(now_) : v.leave(now_);
  log_.add(now_, id, "cmd " + std::string(to_string(cmd.verb)) + " " + std::string(to_string(r)));
  switch (r) {
    case CommandResult::Accepted:
      reply.ok = true;
      break;
    case CommandResult::NoRoute:
      reply.error = "NoRoute";
      reply.detail = "no route to the lead truck yet";
      break;
    case CommandResult::NotAFollower:
      reply.error = "IllegalState";
      reply.detail = "node 1 is the lead truck";
      break;
    case CommandResult::IllegalState:
      reply.error = "IllegalState";
      reply.detail = std::string(to_string(cmd.verb)) + " not allowed while " + std::string(to_string(v.mode()));
      break;
  }
  return reply;
}

}  // namespace vanet
