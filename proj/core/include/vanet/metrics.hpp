#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vanet/packet.hpp"
#include "vanet/types.hpp"

namespace vanet {

class NoSamples : public Error {
 public:
  NoSamples() : Error("no matched echo samples") {}
};

struct SendRecord {
  NodeId source{};
  std::uint32_t seq = 0;
  PacketKind kind = PacketKind::Normal;
  Millis t{0};
  std::size_t size_bytes = 0;
};

struct ReceiveRecord {
  NodeId receiver{};
  NodeId source{};
  std::uint32_t seq = 0;
  PacketKind kind = PacketKind::Normal;
  Millis t{0};
  std::size_t size_bytes = 0;
};

/// A NORMAL sent by the lead and the first time it came back to the lead.
struct EchoPair {
  Millis sent{0};
  Millis returned{0};
};

/// Follower side of the latency probe: echo NORMALs heard straight from the
/// lead, one in every `every` sequence numbers.
bool echo_decision(const Packet& pkt, NodeId lead, std::uint32_t every) noexcept;

/// Mean round trip over matched pairs. Throws NoSamples when there are none.
double avg_latency_ms(std::span<const EchoPair> pairs);

double throughput(std::uint64_t received_bytes, double duration_s);
double throughput(std::span<const ReceiveRecord> received, double duration_s);

/// 1 - delivered/expected, clamped to [0, 1]. `expected` must be positive.
double loss_rate(std::uint64_t delivered, std::uint64_t expected);
/// Record form: distinct (receiver, source, seq) NORMAL receptions against
/// every origination reaching `receivers_per_packet` other nodes.
double loss_rate(std::span<const SendRecord> originations, std::span<const ReceiveRecord> received,
                 std::size_t receivers_per_packet);

struct RunReport {
  Scheme mode = Scheme::Mpr;
  std::size_t n_vehicles = 0;
  double duration_s = 0.0;
  double avg_latency_ms = 0.0;
  std::uint64_t latency_samples = 0;
  double throughput_Bps = 0.0;
  double loss_rate = 0.0;
  std::uint64_t total_tx = 0;
  std::uint64_t received_bytes = 0;
  std::uint64_t normal_expected = 0;
  std::uint64_t normal_delivered = 0;
  /// Per-link view of the medium: in-range attempts, how many were lost and
  /// the mean loss probability the linear law assigns to them.
  std::uint64_t link_attempts = 0;
  std::uint64_t link_losses = 0;
  double expected_link_loss = 0.0;

  double link_loss_rate() const noexcept {
    return link_attempts ? static_cast<double>(link_losses) / static_cast<double>(link_attempts) : 0.0;
  }
};

std::string csv_header();
std::string csv_row(const RunReport& r);
/// Parses one row written by csv_row. Throws ParseError.
RunReport parse_csv_row(const std::string& line);
std::string summary(const RunReport& r);

/// Run-wide counters. Receptions are deduplicated per (receiver, source, seq).
class MetricsCollector {
 public:
  void transmitted(std::uint64_t count = 1) noexcept { total_tx_ += count; }
  void delivered(std::size_t bytes) noexcept {
    received_bytes_ += bytes;
    ++receptions_;
  }
  /// One candidate receiver of a transmission; only in-range attempts count.
  void link_attempt(double loss_p, bool delivered);
  void originated(NodeId source, std::uint32_t seq, std::size_t reachable_receivers);
  void accepted(NodeId receiver, NodeId source, std::uint32_t seq);
  void echo(Millis sent, Millis returned) { echoes_.push_back({sent, returned}); }

  std::uint64_t total_tx() const noexcept { return total_tx_; }
  std::uint64_t received_bytes() const noexcept { return received_bytes_; }
  std::uint64_t receptions() const noexcept { return receptions_; }
  const std::vector<EchoPair>& echoes() const noexcept { return echoes_; }

  RunReport report(Scheme mode, std::size_t n_vehicles, double duration_s) const;

 private:
  std::uint64_t total_tx_ = 0;
  std::uint64_t received_bytes_ = 0;
  std::uint64_t receptions_ = 0;
  std::uint64_t link_attempts_ = 0;
  std::uint64_t link_losses_ = 0;
  double link_loss_p_sum_ = 0.0;
  std::uint64_t expected_ = 0;
  std::uint64_t delivered_ = 0;
  // (receiver, source) -> seq bitmap
  std::vector<std::vector<bool>> seen_;
  std::vector<std::vector<bool>> originated_;
  std::vector<EchoPair> echoes_;
};

}  // namespace vanet
