#pragma once

#include <atomic>
#include <cstdint>
#include <istream>
#include <memory>
#include <mutex>
#include <ostream>
#include <string>

#include "vanet/simulation.hpp"

namespace vanet {

/// `{"verb":"JOIN","node":3}` or a console line such as `join 3` / `snapshot`.
/// Throws ParseError.
ControlCommand parse_request(const std::string& text);

/// Reply body for a request that could not be parsed.
std::string bad_request_json(const std::string& detail);

/// Owns the pacing of a simulation against the wall clock and serializes
/// commands from other threads with its steps.
class LiveRunner {
 public:
  /// speed = simulated seconds per wall second; 0 runs unpaced.
  explicit LiveRunner(Simulation& sim, double speed = 1.0);

  CommandReply execute(const ControlCommand& cmd);
  /// Parse, execute and serialize; never throws for bad input.
  std::string execute_json(const std::string& request);

  /// Blocks until the simulation finishes or stop() is called.
  void run();
  void stop() noexcept { stop_ = true; }
  bool stopped() const noexcept { return stop_; }

  /// Read the simulation under the runner's lock.
  template <typename F>
  auto with_sim(F&& f) {
    std::lock_guard lock(mu_);
    return f(static_cast<const Simulation&>(sim_));
  }

 private:
  Simulation& sim_;
  double speed_;
  std::mutex mu_;
  std::atomic<bool> stop_{false};
};

/// Reads console commands until EOF or `quit`, writing one JSON reply per line.
void serve_console(LiveRunner& runner, std::istream& in, std::ostream& out);

/// WebSocket control endpoint; one JSON request per text message, one reply each.
class ControlServer {
 public:
  /// Port 0 picks a free port. Throws SpawnError if the address cannot be bound.
  ControlServer(LiveRunner& runner, const std::string& host, std::uint16_t port);
  ~ControlServer();
  ControlServer(const ControlServer&) = delete;
  ControlServer& operator=(const ControlServer&) = delete;

  std::uint16_t port() const noexcept;
  /// Serves on a background thread until stop() or destruction.
  void start();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace vanet
