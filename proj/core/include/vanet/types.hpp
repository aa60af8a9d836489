#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace vanet {

/// Node address. 1 is always the lead truck; followers are numbered in spawn order.
enum class NodeId : std::uint16_t {};

inline constexpr NodeId kLeadId{1};
inline constexpr NodeId kBroadcast{0xFFFF};

constexpr std::uint16_t raw(NodeId id) noexcept { return static_cast<std::uint16_t>(id); }
constexpr NodeId node(unsigned v) noexcept { return NodeId{static_cast<std::uint16_t>(v)}; }

std::string to_string(NodeId id);

using Millis = std::chrono::milliseconds;

enum class Lane : std::uint8_t { Right = 0, Left = 1 };

inline constexpr double kLaneWidthM = 5.0;
inline constexpr double kHighwayLengthM = 10000.0;

constexpr double lateral_offset(Lane lane) noexcept {
  return lane == Lane::Left ? kLaneWidthM : 0.0;
}

std::string_view to_string(Lane lane);

/// Broadcast scheme for NORMAL traffic and control routing.
enum class Scheme : std::uint8_t { Rba, Mpr };

std::string_view to_string(Scheme s);

/// Longitudinal position is the front bumper of the vehicle.
struct Position {
  double x = 0.0;
  Lane lane = Lane::Right;

  friend bool operator==(const Position&, const Position&) = default;
};

// Error hierarchy. Protocol decisions are returned as values; these are for
// conditions the caller has to handle or surface.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnknownNode : public Error {
 public:
  explicit UnknownNode(NodeId id) : Error("unknown node " + to_string(id)), id_(id) {}
  NodeId id() const noexcept { return id_; }

 private:
  NodeId id_;
};

class DecodeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class SpawnError : public Error {
 public:
  using Error::Error;
};

}  // namespace vanet
