#include "vanet/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace vanet {

std::string_view to_string(Transport t) { return t == Transport::Udp ? "udp" : "inproc"; }

std::string_view to_string(Verb v) {
  switch (v) {
    case Verb::Join: return "JOIN";
    case Verb::Leave: return "LEAVE";
    case Verb::Snapshot: return "SNAPSHOT";
    case Verb::Pause: return "PAUSE";
    case Verb::Resume: return "RESUME";
  }
  return "?";
}

Verb parse_verb(std::string_view s) {
  std::string up(s);
  std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return std::toupper(c); });
  for (Verb v : {Verb::Join, Verb::Leave, Verb::Snapshot, Verb::Pause, Verb::Resume}) {
    if (up == to_string(v)) return v;
  }
  throw ParseError("unknown verb '" + std::string(s) + "'");
}

void ScenarioConfig::validate() const {
  medium.validate();
  if (n_followers < 1 || n_followers > 10) throw ConfigError("n_followers must be in 1..10");
  if (!(duration_s > 0)) throw ConfigError("duration_s must be positive");
  if (timers.normal_ms == 0 || timers.hello_ms == 0 || timers.tc_ms == 0 || timers.registry_read_ms == 0 ||
      timers.registry_write_s == 0) {
    throw ConfigError("timer values must be positive");
  }
  if (follower_lengths.size() > n_followers) throw ConfigError("more follower_lengths than followers");
  for (double l : follower_lengths) {
    if (l != 5.0 && l != 10.0) throw ConfigError("follower lengths must be 5 or 10");
  }
  if (!follower_x.empty() && follower_x.size() != n_followers) {
    throw ConfigError("follower_x needs one entry per follower");
  }
  auto on_road = [](double x) { return x >= 0.0 && x <= kHighwayLengthM; };
  if (!on_road(lead_x) || !std::all_of(follower_x.begin(), follower_x.end(), on_road)) {
    throw ConfigError("positions must lie on the highway");
  }
  if (follower_speed < 0) throw ConfigError("follower_speed must be non-negative");
  if (form_timeout_ms == 0) throw ConfigError("form_timeout_ms must be positive");
  for (const auto& c : commands) {
    const bool needs_node = c.cmd.verb == Verb::Join || c.cmd.verb == Verb::Leave;
    if (needs_node && (!c.cmd.node || *c.cmd.node == kLeadId || raw(*c.cmd.node) > n_followers + 1)) {
      throw ConfigError("JOIN/LEAVE commands must name a follower");
    }
  }
}

double ScenarioConfig::follower_length(std::size_t i) const {
  return i < follower_lengths.size() ? follower_lengths[i] : 5.0;
}

double ScenarioConfig::follower_start_x(std::size_t i) const {
  if (!follower_x.empty()) return follower_x.at(i);
  const double spacing = n_followers > 1 ? std::min(30.0, 300.0 / static_cast<double>(n_followers - 1)) : 0.0;
  return spacing * static_cast<double>(i);
}

std::uint64_t ScenarioConfig::medium_seed() const noexcept {
  return medium_seed_set ? medium.rng_seed : derive_seed(seed, 0);
}

namespace {

template <typename T>
void read(const YAML::Node& n, const char* key, T& out) {
  if (const auto v = n[key]) out = v.as<T>();
}

void reject_unknown(const YAML::Node& n, std::initializer_list<std::string_view> known, const std::string& where) {
  for (const auto& kv : n) {
    const auto key = kv.first.as<std::string>();
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("unknown field '" + key + "'" + where);
    }
  }
}

}  // namespace

ScenarioConfig parse_scenario(const std::string& text) {
  ScenarioConfig c;
  try {
    const YAML::Node root = YAML::Load(text);
    if (!root || root.IsNull()) return c;
    if (!root.IsMap()) throw ConfigError("scenario must be a mapping");
    reject_unknown(root,
                   {"mode", "transport", "n_followers", "duration_s", "seed", "medium", "timers", "scripted",
                    "follower_lengths", "deterministic_mpr", "form_timeout_ms", "join_stagger_s", "leave_at_s",
                    "echo_every", "lead_x", "follower_x", "follower_speed", "commands", "registry_path",
                    "base_port", "host"},
                   "");
    if (const auto m = root["mode"]) {
      const auto s = m.as<std::string>();
      if (s == "rba") {
        c.mode = Scheme::Rba;
      } else if (s == "mpr") {
        c.mode = Scheme::Mpr;
      } else {
        throw ConfigError("mode must be rba or mpr");
      }
    }
    if (const auto t = root["transport"]) {
      const auto s = t.as<std::string>();
      if (s == "inproc") {
        c.transport = Transport::Inproc;
      } else if (s == "udp") {
        c.transport = Transport::Udp;
      } else {
        throw ConfigError("transport must be inproc or udp");
      }
    }
    read(root, "n_followers", c.n_followers);
    read(root, "duration_s", c.duration_s);
    read(root, "seed", c.seed);
    if (const auto m = root["medium"]) {
      reject_unknown(m, {"range_m", "loss_max", "per_hop_delay_ms", "rng_seed"}, " in medium");
      read(m, "range_m", c.medium.range_m);
      read(m, "loss_max", c.medium.loss_max);
      if (const auto d = m["per_hop_delay_ms"]) c.medium.per_hop_delay = Millis{d.as<std::int64_t>()};
      if (const auto s = m["rng_seed"]) {
        c.medium.rng_seed = s.as<std::uint64_t>();
        c.medium_seed_set = true;
      }
    }
    if (const auto t = root["timers"]) {
      reject_unknown(t, {"normal_ms", "hello_ms", "tc_ms", "registry_read_ms", "registry_write_s"}, " in timers");
      read(t, "normal_ms", c.timers.normal_ms);
      read(t, "hello_ms", c.timers.hello_ms);
      read(t, "tc_ms", c.timers.tc_ms);
      read(t, "registry_read_ms", c.timers.registry_read_ms);
      read(t, "registry_write_s", c.timers.registry_write_s);
    }
    read(root, "scripted", c.scripted);
    read(root, "follower_lengths", c.follower_lengths);
    read(root, "deterministic_mpr", c.deterministic_mpr);
    read(root, "form_timeout_ms", c.form_timeout_ms);
    read(root, "join_stagger_s", c.join_stagger_s);
    if (const auto l = root["leave_at_s"]) c.leave_at_s = l.as<double>();
    read(root, "echo_every", c.echo_every);
    read(root, "lead_x", c.lead_x);
    read(root, "follower_x", c.follower_x);
    read(root, "follower_speed", c.follower_speed);
    if (const auto cmds = root["commands"]) {
      for (const auto& e : cmds) {
        reject_unknown(e, {"t_ms", "verb", "node"}, " in commands");
        TimedCommand tc;
        tc.at = Millis{e["t_ms"].as<std::int64_t>()};
        tc.cmd.verb = parse_verb(e["verb"].as<std::string>());
        if (const auto n = e["node"]) tc.cmd.node = node(n.as<unsigned>());
        c.commands.push_back(tc);
      }
    }
    read(root, "registry_path", c.registry_path);
    read(root, "base_port", c.base_port);
    read(root, "host", c.host);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  } catch (const ParseError& e) {
    throw ConfigError(e.what());
  }
  c.validate();
  return c;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

}  // namespace vanet
