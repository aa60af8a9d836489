#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "vanet/types.hpp"

namespace vanet {

/// One line of the shared node registry:
///   Node <id> <host>, <port> <x> <y> links <id> <id> ...
struct RegistryEntry {
  NodeId node{};
  std::string host;
  std::uint16_t port = 0;
  double x = 0.0;
  double y = 0.0;
  std::vector<NodeId> links;

  friend bool operator==(const RegistryEntry&, const RegistryEntry&) = default;
};

std::string format_entry(const RegistryEntry& e);
/// Throws ParseError.
RegistryEntry parse_entry(std::string_view line);

/// File-backed registry shared by every node process. Writers replace their own
/// line under an exclusive advisory lock; readers take a shared lock.
class Registry {
 public:
  explicit Registry(std::filesystem::path path);

  const std::filesystem::path& path() const noexcept { return path_; }

  /// Lead truck only: start from an empty file.
  void truncate();
  void write(const RegistryEntry& entry);
  /// Malformed lines are skipped with a warning. Missing file reads as empty.
  std::vector<RegistryEntry> read() const;

 private:
  std::filesystem::path path_;
};

}  // namespace vanet
