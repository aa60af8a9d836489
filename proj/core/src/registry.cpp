#include "vanet/registry.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>
#include <sstream>

#include <spdlog/spdlog.h>

namespace vanet {

namespace {

std::string fmt_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

template <typename T>
T parse_number(std::string_view tok, const char* what) {
  T v{};
  auto [end, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || end != tok.data() + tok.size()) {
    throw ParseError(std::string("bad ") + what + " '" + std::string(tok) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

NodeId parse_id(std::string_view tok) {
  const auto v = parse_number<unsigned>(tok, "node id");
  if (v < 1 || v >= 0xFFFF) throw ParseError("node id out of range");
  return node(v);
}

class FileLock {
 public:
  FileLock(const std::filesystem::path& path, int flags, int op) {
    fd_ = ::open(path.c_str(), flags | O_CLOEXEC, 0644);
    if (fd_ < 0) {
      if (errno == ENOENT && (flags & O_CREAT) == 0) return;
      throw IoError("open " + path.string() + ": " + std::strerror(errno));
    }
    while (::flock(fd_, op) != 0) {
      if (errno != EINTR) {
        const std::string msg = std::strerror(errno);
        ::close(fd_);
        throw IoError("flock " + path.string() + ": " + msg);
      }
    }
  }
  ~FileLock() {
    if (fd_ >= 0) ::close(fd_);  // closing releases the lock
  }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

  int fd() const noexcept { return fd_; }

  std::string slurp() const {
    std::string out;
    char buf[4096];
    if (::lseek(fd_, 0, SEEK_SET) < 0) throw IoError("lseek failed");
    for (;;) {
      const ssize_t n = ::read(fd_, buf, sizeof buf);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw IoError(std::string("read: ") + std::strerror(errno));
      }
      if (n == 0) break;
      out.append(buf, static_cast<std::size_t>(n));
    }
    return out;
  }

  void replace(const std::string& content) const {
    if (::ftruncate(fd_, 0) != 0 || ::lseek(fd_, 0, SEEK_SET) < 0) {
      throw IoError(std::string("truncate: ") + std::strerror(errno));
    }
    std::size_t done = 0;
    while (done < content.size()) {
      const ssize_t n = ::write(fd_, content.data() + done, content.size() - done);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw IoError(std::string("write: ") + std::strerror(errno));
      }
      done += static_cast<std::size_t>(n);
    }
  }

 private:
  int fd_ = -1;
};

}  // namespace

std::string format_entry(const RegistryEntry& e) {
  std::string s = "Node " + to_string(e.node) + " " + e.host + ", " + std::to_string(e.port) + " " +
                  fmt_number(e.x) + " " + fmt_number(e.y) + " links";
  for (NodeId l : e.links) s += " " + to_string(l);
  return s;
}

RegistryEntry parse_entry(std::string_view line) {
  const auto tok = split(line);
  if (tok.size() < 7 || tok[0] != "Node") throw ParseError("not a registry line");
  RegistryEntry e;
  e.node = parse_id(tok[1]);
  if (tok[2].size() < 2 || tok[2].back() != ',') throw ParseError("host must end with ','");
  e.host = std::string(tok[2].substr(0, tok[2].size() - 1));
  e.port = parse_number<std::uint16_t>(tok[3], "port");
  e.x = parse_number<double>(tok[4], "x");
  e.y = parse_number<double>(tok[5], "y");
  if (tok[6] != "links") throw ParseError("expected 'links'");
  for (std::size_t i = 7; i < tok.size(); ++i) e.links.push_back(parse_id(tok[i]));
  return e;
}

Registry::Registry(std::filesystem::path path) : path_(std::move(path)) {}

void Registry::truncate() {
  FileLock lock(path_, O_RDWR | O_CREAT, LOCK_EX);
  lock.replace({});
}

void Registry::write(const RegistryEntry& entry) {
  FileLock lock(path_, O_RDWR | O_CREAT, LOCK_EX);
  std::istringstream in(lock.slurp());
  std::string out;
  std::string line;
  bool replaced = false;
  const std::string own = format_entry(entry);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    bool mine = false;
    try {
      mine = parse_entry(line).node == entry.node;
    } catch (const ParseError&) {
      // keep unparseable lines untouched; readers skip them
    }
    if (mine) {
      if (replaced) continue;
      out += own;
      replaced = true;
    } else {
      out += line;
    }
    out += '\n';
  }
  if (!replaced) out += own + '\n';
  lock.replace(out);
}

std::vector<RegistryEntry> Registry::read() const {
  FileLock lock(path_, O_RDONLY, LOCK_SH);
  std::vector<RegistryEntry> out;
  if (lock.fd() < 0) return out;
  std::istringstream in(lock.slurp());
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_entry(line));
    } catch (const ParseError& e) {
      spdlog::warn("registry {}: skipping line '{}': {}", path_.string(), line, e.what());
    }
  }
  return out;
}

}  // namespace vanet
