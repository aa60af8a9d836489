#include "vanet/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace vanet {

bool echo_decision(const Packet& pkt, NodeId lead, std::uint32_t every) noexcept {
  return pkt.header.kind == PacketKind::Normal && pkt.header.source == lead &&
         pkt.header.prev_hop == lead && every > 0 && pkt.header.seq % every == 0;
}

double avg_latency_ms(std::span<const EchoPair> pairs) {
  if (pairs.empty()) throw NoSamples();
  double sum = 0.0;
  for (const auto& p : pairs) sum += static_cast<double>((p.returned - p.sent).count());
  return sum / static_cast<double>(pairs.size());
}

double throughput(std::uint64_t received_bytes, double duration_s) {
  if (!(duration_s > 0)) throw std::invalid_argument("duration must be positive");
  return static_cast<double>(received_bytes) / duration_s;
}

double throughput(std::span<const ReceiveRecord> received, double duration_s) {
  std::uint64_t bytes = 0;
  for (const auto& r : received) bytes += r.size_bytes;
  return throughput(bytes, duration_s);
}

double loss_rate(std::uint64_t delivered, std::uint64_t expected) {
  if (expected == 0) throw std::invalid_argument("loss rate needs at least one expected reception");
  const double pdr = static_cast<double>(delivered) / static_cast<double>(expected);
  return std::clamp(1.0 - pdr, 0.0, 1.0);
}

double loss_rate(std::span<const SendRecord> originations, std::span<const ReceiveRecord> received,
                 std::size_t receivers_per_packet) {
  std::set<std::pair<NodeId, std::uint32_t>> sent;
  for (const auto& s : originations) {
    if (s.kind == PacketKind::Normal) sent.insert({s.source, s.seq});
  }
  std::set<std::tuple<NodeId, NodeId, std::uint32_t>> got;
  for (const auto& r : received) {
    if (r.kind == PacketKind::Normal && r.receiver != r.source && sent.contains({r.source, r.seq})) {
      got.insert({r.receiver, r.source, r.seq});
    }
  }
  return loss_rate(got.size(), sent.size() * receivers_per_packet);
}

// --- CSV --------------------------------------------------------------------

namespace {

std::string num(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 6);
  return std::string(buf, end);
}

}  // namespace

std::string csv_header() { return "mode,n,avg_latency_ms,throughput_Bps,loss_rate,total_tx"; }

std::string csv_row(const RunReport& r) {
  std::ostringstream out;
  out << to_string(r.mode) << ',' << r.n_vehicles << ',' << num(r.avg_latency_ms) << ','
      << num(r.throughput_Bps) << ',' << num(r.loss_rate) << ',' << r.total_tx;
  return out.str();
}

RunReport parse_csv_row(const std::string& line) {
  std::vector<std::string> f;
  std::stringstream ss(line);
  for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
  if (f.size() != 6) throw ParseError("expected 6 columns: " + line);
  RunReport r;
  if (f[0] == "rba") {
    r.mode = Scheme::Rba;
  } else if (f[0] == "mpr") {
    r.mode = Scheme::Mpr;
  } else {
    throw ParseError("bad mode '" + f[0] + "'");
  }
  try {
    r.n_vehicles = std::stoul(f[1]);
    r.avg_latency_ms = std::stod(f[2]);
    r.throughput_Bps = std::stod(f[3]);
    r.loss_rate = std::stod(f[4]);
    r.total_tx = std::stoull(f[5]);
  } catch (const std::exception&) {
    throw ParseError("bad number in: " + line);
  }
  return r;
}

std::string summary(const RunReport& r) {
  std::ostringstream out;
  out << "mode " << to_string(r.mode) << ", " << r.n_vehicles << " vehicles, " << r.duration_s << " s\n"
      << "  latency    " << num(r.avg_latency_ms) << " ms round trip (" << r.latency_samples
      << " echo pairs)\n"
      << "  throughput " << num(r.throughput_Bps) << " B/s (" << r.received_bytes << " bytes received)\n"
      << "  loss rate  " << num(r.loss_rate) << " (" << r.normal_delivered << " of " << r.normal_expected
      << " expected NORMAL receptions)\n"
      << "  link loss  " << num(r.link_loss_rate()) << " observed, " << num(r.expected_link_loss)
      << " expected over " << r.link_attempts << " in-range attempts\n"
      << "  total tx   " << r.total_tx << '\n';
  return out.str();
}

// --- collector --------------------------------------------------------------

namespace {

constexpr std::size_t kMaxNodes = 64;

std::size_t slot(NodeId a, NodeId b) { return raw(a) * kMaxNodes + raw(b); }

bool test_and_set(std::vector<std::vector<bool>>& bits, std::size_t idx, std::uint32_t seq) {
  if (bits.size() <= idx) bits.resize(idx + 1);
  auto& v = bits[idx];
  if (v.size() <= seq) v.resize(std::max<std::size_t>(seq + 1, v.size() * 2));
  const bool was = v[seq];
  v[seq] = true;
  return was;
}

bool test(const std::vector<std::vector<bool>>& bits, std::size_t idx, std::uint32_t seq) {
  return idx < bits.size() && seq < bits[idx].size() && bits[idx][seq];
}

}  // namespace

void MetricsCollector::link_attempt(double loss_p, bool delivered) {
  if (loss_p >= 1.0) return;
  ++link_attempts_;
  link_losses_ += !delivered;
  link_loss_p_sum_ += loss_p;
}

void MetricsCollector::originated(NodeId source, std::uint32_t seq, std::size_t reachable_receivers) {
  if (raw(source) >= kMaxNodes) throw std::out_of_range("node id too large for metrics");
  test_and_set(originated_, raw(source), seq);
  expected_ += reachable_receivers;
}

void MetricsCollector::accepted(NodeId receiver, NodeId source, std::uint32_t seq) {
  if (receiver == source || raw(receiver) >= kMaxNodes || raw(source) >= kMaxNodes) return;
  if (!test(originated_, raw(source), seq)) return;
  if (!test_and_set(seen_, slot(receiver, source), seq)) ++delivered_;
}

RunReport MetricsCollector::report(Scheme mode, std::size_t n_vehicles, double duration_s) const {
  RunReport r;
  r.mode = mode;
  r.n_vehicles = n_vehicles;
  r.duration_s = duration_s;
  r.latency_samples = echoes_.size();
  r.avg_latency_ms = echoes_.empty() ? 0.0 : avg_latency_ms(echoes_);
  r.received_bytes = received_bytes_;
  r.throughput_Bps = throughput(received_bytes_, duration_s);
  r.normal_expected = expected_;
  r.normal_delivered = delivered_;
  r.loss_rate = expected_ ? loss_rate(delivered_, expected_) : 0.0;
  r.total_tx = total_tx_;
  r.link_attempts = link_attempts_;
  r.link_losses = link_losses_;
  r.expected_link_loss = link_attempts_ ? link_loss_p_sum_ / static_cast<double>(link_attempts_) : 0.0;
  return r;
}

}  // namespace vanet
