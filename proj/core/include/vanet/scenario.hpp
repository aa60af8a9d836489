#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vanet/medium.hpp"
#include "vanet/types.hpp"

namespace vanet {

enum class Transport : std::uint8_t { Inproc, Udp };

std::string_view to_string(Transport t);

enum class Verb : std::uint8_t { Join, Leave, Snapshot, Pause, Resume };

std::string_view to_string(Verb v);
/// Accepts upper or lower case. Throws ParseError.
Verb parse_verb(std::string_view s);

struct ControlCommand {
  Verb verb = Verb::Snapshot;
  std::optional<NodeId> node;
};

/// A command scheduled at a virtual time, for replayable runs.
struct TimedCommand {
  Millis at{0};
  ControlCommand cmd;
};

struct TimerConfig {
  std::uint32_t normal_ms = 10;
  std::uint32_t hello_ms = 20;
  std::uint32_t tc_ms = 30;
  std::uint32_t registry_read_ms = 50;
  std::uint32_t registry_write_s = 5;
};

struct ScenarioConfig {
  Scheme mode = Scheme::Mpr;
  Transport transport = Transport::Inproc;
  std::size_t n_followers = 4;
  double duration_s = 300.0;
  std::uint64_t seed = 1;
  MediumConfig medium;
  /// Set when the medium seed was given explicitly; otherwise derived from `seed`.
  bool medium_seed_set = false;
  TimerConfig timers;
  bool scripted = true;
  /// One entry per follower (5 or 10 m); missing entries default to 5.
  std::vector<double> follower_lengths;

  // application knobs
  bool deterministic_mpr = false;
  std::uint32_t form_timeout_ms = 10'000;
  double join_stagger_s = 1.0;
  /// Scripted LEAVE time; defaults to 30 s before the end, but no earlier than half way.
  std::optional<double> leave_at_s;
  std::uint32_t echo_every = 10;

  // initial placement
  double lead_x = 10.0;
  /// Explicit follower positions; otherwise spread from x = 0 on the left lane.
  std::vector<double> follower_x;
  double follower_speed = 30.0;

  std::vector<TimedCommand> commands;

  // multi-process mode
  std::string registry_path = "vanet_registry.txt";
  std::uint16_t base_port = 10010;
  std::string host = "127.0.0.1";

  /// Throws ConfigError.
  void validate() const;

  std::size_t n_vehicles() const noexcept { return n_followers + 1; }
  double follower_length(std::size_t follower_index) const;
  double follower_start_x(std::size_t follower_index) const;
  double leave_time_s() const noexcept { return leave_at_s.value_or(std::max(duration_s - 30.0, duration_s / 2.0)); }
  std::uint64_t medium_seed() const noexcept;
};

/// YAML with exactly the ScenarioConfig field names. Throws ConfigError.
ScenarioConfig parse_scenario(const std::string& text);
ScenarioConfig load_scenario(const std::filesystem::path& path);

}  // namespace vanet
