#include "vanet/udp_node.hpp"

#include <algorithm>
#include <chrono>
#include <deque>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <thread>

#include <boost/asio/ip/udp.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "vanet/control.hpp"
#include "vanet/node.hpp"
#include "vanet/simulation.hpp"

namespace vanet {

namespace asio = boost::asio;
using udp = asio::ip::udp;

// --- stats ------------------------------------------------------------------

std::string to_json(const NodeStats& s) {
  nlohmann::json j;
  j["id"] = raw(s.id);
  j["mode"] = std::string(to_string(s.mode));
  j["duration_s"] = s.duration_s;
  j["total_tx"] = s.total_tx;
  j["received_bytes"] = s.received_bytes;
  j["originated"] = s.originated;
  j["expected"] = s.expected;
  j["delivered"] = s.delivered;
  j["link_attempts"] = s.link_attempts;
  j["link_losses"] = s.link_losses;
  j["link_loss_p_sum"] = s.link_loss_p_sum;
  j["decode_errors"] = s.decode_errors;
  auto e = nlohmann::json::array();
  for (const auto& p : s.echoes) e.push_back({p.sent.count(), p.returned.count()});
  j["echoes"] = std::move(e);
  return j.dump();
}

NodeStats parse_stats(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    NodeStats s;
    s.id = node(j.at("id").get<unsigned>());
    const auto mode = j.at("mode").get<std::string>();
    if (mode != "rba" && mode != "mpr") throw ParseError("bad mode '" + mode + "'");
    s.mode = mode == "rba" ? Scheme::Rba : Scheme::Mpr;
    s.duration_s = j.at("duration_s").get<double>();
    s.total_tx = j.at("total_tx").get<std::uint64_t>();
    s.received_bytes = j.at("received_bytes").get<std::uint64_t>();
    s.originated = j.at("originated").get<std::uint64_t>();
    s.expected = j.at("expected").get<std::uint64_t>();
    s.delivered = j.at("delivered").get<std::uint64_t>();
    s.link_attempts = j.at("link_attempts").get<std::uint64_t>();
    s.link_losses = j.at("link_losses").get<std::uint64_t>();
    s.link_loss_p_sum = j.at("link_loss_p_sum").get<double>();
    s.decode_errors = j.at("decode_errors").get<std::uint64_t>();
    for (const auto& p : j.at("echoes")) s.echoes.push_back({Millis{p.at(0).get<std::int64_t>()}, Millis{p.at(1).get<std::int64_t>()}});
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("stats: ") + e.what());
  }
}

RunReport merge_stats(const std::vector<NodeStats>& stats) {
  if (stats.empty()) throw ParseError("no node stats to merge");
  RunReport r;
  r.mode = stats.front().mode;
  r.n_vehicles = stats.size();
  double p_sum = 0.0;
  std::vector<EchoPair> echoes;
  for (const auto& s : stats) {
    r.duration_s = std::max(r.duration_s, s.duration_s);
    r.total_tx += s.total_tx;
    r.received_bytes += s.received_bytes;
    r.normal_expected += s.expected;
    r.normal_delivered += s.delivered;
    r.link_attempts += s.link_attempts;
    r.link_losses += s.link_losses;
    p_sum += s.link_loss_p_sum;
    echoes.insert(echoes.end(), s.echoes.begin(), s.echoes.end());
  }
  r.latency_samples = echoes.size();
  r.avg_latency_ms = echoes.empty() ? 0.0 : avg_latency_ms(echoes);
  r.throughput_Bps = r.duration_s > 0 ? throughput(r.received_bytes, r.duration_s) : 0.0;
  r.loss_rate = r.normal_expected ? loss_rate(r.normal_delivered, r.normal_expected) : 0.0;
  r.expected_link_loss = r.link_attempts ? p_sum / static_cast<double>(r.link_attempts) : 0.0;
  return r;
}

std::uint16_t node_port(const ScenarioConfig& cfg, NodeId id) {
  return static_cast<std::uint16_t>(cfg.base_port + raw(id) - 1);
}

Lane lane_from_y(double y) noexcept { return y >= kLaneWidthM / 2 ? Lane::Left : Lane::Right; }

// --- node -------------------------------------------------------------------

struct UdpNode::Impl final : Link, NodeObserver {
  explicit Impl(UdpNodeOptions o)
      : opts(std::move(o)), registry(opts.scenario.registry_path), socket(io), rng(derive_seed(opts.scenario.seed, 1000 + raw(opts.id))) {
    const bool is_lead = opts.id == kLeadId;
    if (is_lead) {
      registry.truncate();
    } else {
      const auto entries = registry.read();
      if (std::none_of(entries.begin(), entries.end(), [](const auto& e) { return e.node == kLeadId; })) {
        throw SpawnError("no lead truck in " + registry.path().string() + "; start the leading node first");
      }
    }
    try {
      const udp::endpoint ep(asio::ip::make_address(opts.scenario.host), node_port(opts.scenario, opts.id));
      socket.open(ep.protocol());
      socket.bind(ep);
      socket.non_blocking(true);
    } catch (const boost::system::system_error& e) {
      throw SpawnError("cannot bind UDP " + opts.scenario.host + ":" +
                       std::to_string(node_port(opts.scenario, opts.id)) + ": " + e.what());
    }

    platoon::Dynamics d;
    d.pos = {opts.x, is_lead ? Lane::Right : opts.lane};
    d.velocity = is_lead ? platoon::speed_zone(opts.x) : opts.speed;
    d.length = is_lead ? platoon::kLeadLengthM : opts.length;
    ScenarioConfig sc = opts.scenario;
    sc.follower_speed = opts.speed;
    vehicle = std::make_unique<VehicleNode>(opts.id, node_config(sc), d, derive_seed(sc.seed, raw(opts.id)), *this,
                                            *this);
    stats.id = opts.id;
    stats.mode = sc.mode;
    log.add(Millis{0}, opts.id, "spawn x=" + std::to_string(d.pos.x) + " lane=" + std::string(to_string(d.pos.lane)) +
                                    " port=" + std::to_string(node_port(sc, opts.id)));
    write_registry();
    read_registry();
  }

  // Link: one datagram per registered node; the receiver decides what it hears.
  void send(NodeId from, NodeId to, const Packet& pkt, Millis) override {
    ++stats.total_tx;
    const auto bytes = encode(pkt);
    for (const auto& [id, e] : peers) {
      if (id == from || (to != kBroadcast && id != to)) continue;
      boost::system::error_code ec;
      socket.send_to(asio::buffer(bytes), e.endpoint, 0, ec);
      if (ec && ec != asio::error::would_block) spdlog::debug("node {} send to {}: {}", raw(from), raw(id), ec.message());
    }
  }

  std::vector<NodeId> in_range(NodeId self) const override {
    std::vector<NodeId> out;
    const Position me = vehicle->position();
    for (const auto& [id, e] : peers) {
      if (id != self && distance(me, last_known(id, now)) <= opts.scenario.medium.range_m) out.push_back(id);
    }
    return out;
  }

  void event(Millis t, NodeId node, const std::string& text) override { log.add(t, node, text); }
  void normal_originated(NodeId, std::uint32_t, Millis) override {
    ++stats.originated;
    stats.expected += reachable();
  }
  void normal_accepted(NodeId, NodeId, std::uint32_t, Millis) override { ++stats.delivered; }
  void echo_returned(std::uint32_t, Millis sent, Millis back) override { stats.echoes.push_back({sent, back}); }

  Position last_known(NodeId id, Millis t) const {
    const auto heard = vehicle->peers().heard_at(id);
    if (heard && t - *heard <= Millis{1000}) {
      const auto v = vehicle->peers().at(id, t);
      return {v->x, v->lane};
    }
    const auto it = peers.find(id);
    return it == peers.end() ? Position{} : Position{it->second.x, lane_from_y(it->second.y)};
  }

  std::size_t reachable() const {
    std::vector<NodeId> ids{opts.id};
    std::map<NodeId, Position> pos{{opts.id, vehicle->position()}};
    for (const auto& [id, e] : peers) pos[id] = last_known(id, now);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      for (const auto& [id, p] : pos) {
        if (std::find(ids.begin(), ids.end(), id) == ids.end() &&
            distance(pos[ids[k]], p) <= opts.scenario.medium.range_m) {
          ids.push_back(id);
        }
      }
    }
    return ids.size() - 1;
  }

  void read_registry() {
    std::vector<RegistryEntry> entries;
    try {
      entries = registry.read();
    } catch (const IoError& e) {
      spdlog::warn("node {}: registry read failed: {}", raw(opts.id), e.what());
      return;
    }
    for (const auto& e : entries) {
      if (e.node == opts.id) continue;
      boost::system::error_code ec;
      const auto addr = asio::ip::make_address(e.host == "localhost" ? "127.0.0.1" : e.host, ec);
      if (ec) continue;
      peers[e.node] = Peer{udp::endpoint(addr, e.port), e.x, e.y};
    }
  }

  void write_registry() {
    RegistryEntry e;
    e.node = opts.id;
    e.host = opts.scenario.host;
    e.port = node_port(opts.scenario, opts.id);
    const Position p = vehicle->position();
    e.x = p.x;
    e.y = lateral_offset(p.lane);
    e.links = in_range(opts.id);
    try {
      registry.write(e);
    } catch (const IoError& err) {
      spdlog::warn("node {}: registry write failed: {}", raw(opts.id), err.what());
    }
  }

  void receive_all() {
    std::array<std::uint8_t, 2048> buf{};
    for (;;) {
      udp::endpoint from;
      boost::system::error_code ec;
      const std::size_t n = socket.receive_from(asio::buffer(buf), from, 0, ec);
      if (ec == asio::error::would_block) return;
      if (ec) {
        spdlog::debug("node {} receive: {}", raw(opts.id), ec.message());
        return;
      }
      Packet pkt;
      try {
        pkt = decode(std::span<const std::uint8_t>(buf.data(), n));
      } catch (const DecodeError&) {
        ++stats.decode_errors;
        continue;
      }
      const NodeId sender = pkt.header.prev_hop;
      if (sender == opts.id) continue;
      const double d = distance(vehicle->position(), last_known(sender, now));
      const double p = loss_probability(d, opts.scenario.medium);
      if (p >= 1.0) continue;
      ++stats.link_attempts;
      stats.link_loss_p_sum += p;
      if (uniform01(rng) < p) {
        ++stats.link_losses;
        continue;
      }
      stats.received_bytes += n;
      vehicle->on_packet(pkt, now);
    }
  }

  void console_reader() {
    for (std::string line; std::getline(std::cin, line);) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      std::lock_guard lock(console_mu);
      console_lines.push_back(line);
    }
  }

  void handle_console() {
    std::deque<std::string> lines;
    {
      std::lock_guard lock(console_mu);
      lines.swap(console_lines);
    }
    for (const auto& line : lines) {
      ControlCommand cmd;
      try {
        cmd = parse_request(line);
      } catch (const ParseError& e) {
        std::cout << bad_request_json(e.what()) << std::endl;
        continue;
      }
      CommandReply reply;
      if (cmd.verb == Verb::Join || cmd.verb == Verb::Leave) {
        if (cmd.node && *cmd.node != opts.id) {
          reply.error = "UnknownNode";
          reply.detail = "this process is node " + to_string(opts.id);
        } else {
          const auto r = cmd.verb == Verb::Join ? vehicle->join(now) : vehicle->leave(now);
          log.add(now, opts.id, "cmd " + std::string(to_string(cmd.verb)) + " " + std::string(to_string(r)));
          reply.ok = r == CommandResult::Accepted;
          if (!reply.ok) reply.error = r == CommandResult::NoRoute ? "NoRoute" : "IllegalState";
        }
      } else if (cmd.verb == Verb::Snapshot) {
        Snapshot s;
        s.t = now;
        s.mode = opts.scenario.mode;
        const auto& d = vehicle->dynamics();
        VehicleSnapshot v{opts.id, d.pos.x, d.pos.lane, d.velocity, d.length, vehicle->mode(), vehicle->follow_target(), {}, 0};
        const auto m = vehicle->olsr().neighbors.mprs();
        v.mprs.assign(m.begin(), m.end());
        v.table_seq = vehicle->olsr().neighbors.table_seq;
        s.vehicles.push_back(v);
        s.train = vehicle->train();
        reply.ok = true;
        reply.snapshot = s;
      } else {
        reply.error = "IllegalState";
        reply.detail = "PAUSE/RESUME apply to in-process runs only";
      }
      std::cout << to_json(cmd, reply) << std::endl;
    }
  }

  void run_script(Millis t) {
    if (opts.id == kLeadId) return;
    if (opts.leave_at_s && t >= Millis{static_cast<std::int64_t>(*opts.leave_at_s * 1000)}) {
      if (vehicle->mode() == VehicleMode::Follow) {
        log.add(t, opts.id, "script leave " + std::string(to_string(vehicle->leave(t))));
      }
      return;
    }
    if (!opts.join_at_s || t < Millis{static_cast<std::int64_t>(*opts.join_at_s * 1000)}) return;
    if (vehicle->mode() != VehicleMode::Free || t < next_try) return;
    const auto r = vehicle->join(t);
    if (r == CommandResult::NoRoute) next_try = t + Millis{100};
    if (r == CommandResult::Accepted) log.add(t, opts.id, "script join Accepted");
  }

  NodeStats run(const std::atomic<bool>* stop) {
    using clock = std::chrono::steady_clock;
    std::thread reader;
    if (opts.console) {
      reader = std::thread([this] { console_reader(); });
      reader.detach();
    }
    const auto& tm = opts.scenario.timers;
    const Millis tick{tm.normal_ms};
    const Millis end{static_cast<std::int64_t>(opts.scenario.duration_s * 1000)};
    const double dt = static_cast<double>(tm.normal_ms) / 1000.0;
    const auto wall0 = clock::now();
    Millis next_physics{0};
    Millis next_read{tm.registry_read_ms};
    Millis next_write{static_cast<std::int64_t>(tm.registry_write_s) * 1000};
    while (!(stop && stop->load())) {
      now = std::chrono::duration_cast<Millis>(clock::now() - wall0);
      if (now >= end) break;
      receive_all();
      handle_console();
      if (now >= next_physics) {
        vehicle->physics(dt, now);
        run_script(now);
        next_physics = now + tick;
      }
      vehicle->timers(now);
      if (now >= next_read) {
        read_registry();
        next_read = now + Millis{tm.registry_read_ms};
      }
      if (now >= next_write) {
        write_registry();
        next_write = now + Millis{static_cast<std::int64_t>(tm.registry_write_s) * 1000};
      }
      std::this_thread::sleep_until(wall0 + now + Millis{1});
    }
    stats.duration_s = std::chrono::duration<double>(clock::now() - wall0).count();
    std::filesystem::create_directories(opts.out_dir);
    const std::string stem = "node" + std::to_string(raw(opts.id));
    log.write(opts.out_dir / (stem + ".log"));
    std::ofstream(opts.out_dir / (stem + ".stats.json")) << to_json(stats) << '\n';
    return stats;
  }

  struct Peer {
    udp::endpoint endpoint;
    double x = 0.0;
    double y = 0.0;
  };

  UdpNodeOptions opts;
  Registry registry;
  asio::io_context io;
  udp::socket socket;
  Rng rng;
  std::unique_ptr<VehicleNode> vehicle;
  std::map<NodeId, Peer> peers;
  EventLog log;
  NodeStats stats;
  Millis now{0};
  Millis next_try{0};
  std::mutex console_mu;
  std::deque<std::string> console_lines;
};

UdpNode::UdpNode(UdpNodeOptions opts) : impl_(std::make_unique<Impl>(std::move(opts))) {}
UdpNode::~UdpNode() = default;

std::uint16_t UdpNode::port() const noexcept { return node_port(impl_->opts.scenario, impl_->opts.id); }

NodeStats UdpNode::run(const std::atomic<bool>* stop) { return impl_->run(stop); }

}  // namespace vanet
