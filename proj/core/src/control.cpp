#include "vanet/control.hpp"

#include <algorithm>
#include <chrono>
#include <sstream>
#include <thread>
#include <vector>

#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <nlohmann/json.hpp>

namespace vanet {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

ControlCommand parse_request(const std::string& text) {
  ControlCommand cmd;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) throw ParseError("empty request");
  if (text[first] == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad JSON: ") + e.what());
    }
    if (!j.contains("verb") || !j["verb"].is_string()) throw ParseError("missing \"verb\"");
    cmd.verb = parse_verb(j["verb"].get<std::string>());
    if (j.contains("node") && !j["node"].is_null()) {
      if (!j["node"].is_number_unsigned() || j["node"].get<std::uint64_t>() > 0xFFFE) {
        throw ParseError("\"node\" must be a positive integer");
      }
      cmd.node = node(j["node"].get<unsigned>());
    }
  } else {
    std::istringstream in(text);
    std::string verb;
    in >> verb;
    cmd.verb = parse_verb(verb);
    unsigned id = 0;
    if (in >> id) cmd.node = node(id);
  }
  return cmd;
}

std::string bad_request_json(const std::string& detail) {
  return nlohmann::json{{"error", "BadRequest"}, {"detail", detail}}.dump();
}

// --- runner -----------------------------------------------------------------

LiveRunner::LiveRunner(Simulation& sim, double speed) : sim_(sim), speed_(speed) {}

CommandReply LiveRunner::execute(const ControlCommand& cmd) {
  std::lock_guard lock(mu_);
  return sim_.handle_command(cmd);
}

std::string LiveRunner::execute_json(const std::string& request) {
  ControlCommand cmd;
  try {
    cmd = parse_request(request);
  } catch (const ParseError& e) {
    return bad_request_json(e.what());
  }
  return to_json(cmd, execute(cmd));
}

void LiveRunner::run() {
  using clock = std::chrono::steady_clock;
  auto wall0 = clock::now();
  Millis sim0{0};
  {
    std::lock_guard lock(mu_);
    sim0 = sim_.now();
  }
  while (!stop_) {
    {
      std::lock_guard lock(mu_);
      if (sim_.finished()) return;
      if (sim_.paused()) {
        wall0 = clock::now();
        sim0 = sim_.now();
      } else if (speed_ <= 0) {
        for (int i = 0; i < 100 && !sim_.finished() && !sim_.paused(); ++i) sim_.step();
        continue;
      } else {
        const auto elapsed = std::chrono::duration<double, std::milli>(clock::now() - wall0).count();
        const Millis target = sim0 + Millis{static_cast<std::int64_t>(elapsed * speed_)};
        while (sim_.now() < target && !sim_.finished() && !sim_.paused()) sim_.step();
      }
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(1));
  }
}

void serve_console(LiveRunner& runner, std::istream& in, std::ostream& out) {
  for (std::string line; std::getline(in, line);) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (line == "quit" || line == "exit") break;
    out << runner.execute_json(line) << std::endl;
  }
}

// --- WebSocket server -------------------------------------------------------

struct ControlServer::Impl {
  Impl(LiveRunner& r, const std::string& host, std::uint16_t port) : runner(r), acceptor(io) {
    try {
      const tcp::endpoint ep(asio::ip::make_address(host), port);
      acceptor.open(ep.protocol());
      acceptor.set_option(asio::socket_base::reuse_address(true));
      acceptor.bind(ep);
      acceptor.listen();
    } catch (const boost::system::system_error& e) {
      throw SpawnError("control server cannot listen on " + host + ":" + std::to_string(port) + ": " +
                       e.what());
    }
  }

  void accept() {
    acceptor.async_accept([this](beast::error_code ec, tcp::socket sock) {
      if (ec) return;
      auto ws = std::make_shared<websocket::stream<tcp::socket>>(std::move(sock));
      ws->async_accept([this, ws](beast::error_code aec) {
        if (!aec) read(ws);
      });
      accept();
    });
  }

  void read(const std::shared_ptr<websocket::stream<tcp::socket>>& ws) {
    auto buf = std::make_shared<beast::flat_buffer>();
    ws->async_read(*buf, [this, ws, buf](beast::error_code ec, std::size_t) {
      if (ec) return;
      auto reply = std::make_shared<std::string>(runner.execute_json(beast::buffers_to_string(buf->data())));
      ws->text(true);
      ws->async_write(asio::buffer(*reply), [this, ws, reply](beast::error_code wec, std::size_t) {
        if (!wec) read(ws);
      });
    });
  }

  LiveRunner& runner;
  asio::io_context io;
  tcp::acceptor acceptor;
  std::thread thread;
};

ControlServer::ControlServer(LiveRunner& runner, const std::string& host, std::uint16_t port)
    : impl_(std::make_unique<Impl>(runner, host, port)) {}

ControlServer::~ControlServer() { stop(); }

std::uint16_t ControlServer::port() const noexcept {
  beast::error_code ec;
  return impl_->acceptor.local_endpoint(ec).port();
}

void ControlServer::start() {
  if (impl_->thread.joinable()) return;
  impl_->accept();
  impl_->thread = std::thread([this] { impl_->io.run(); });
}

void ControlServer::stop() {
  if (!impl_ || !impl_->thread.joinable()) return;
  impl_->io.stop();
  impl_->thread.join();
}

}  // namespace vanet
