#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <chrono>
#include <map>
#include <thread>

#include "doctest.h"
#include "mesop/stream_server.hpp"
#include "mesop/version.hpp"

using namespace mesop;
namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

// Minimal synchronous viewer.
class Client {
 public:
  explicit Client(std::uint16_t port) : ws_(ioc_) {
    tcp::resolver resolver(ioc_);
    asio::connect(ws_.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
    ws_.handshake("127.0.0.1", "/");
  }

  void send(const std::string& text) {
    ws_.text(true);
    ws_.write(asio::buffer(text));
  }

  void send_binary(const std::string& bytes) {
    ws_.binary(true);
    ws_.write(asio::buffer(bytes));
    ws_.text(true);
  }

  // Returns {is_binary, payload}.
  std::pair<bool, std::string> read() {
    beast::flat_buffer buf;
    ws_.read(buf);
    return {ws_.got_binary(), beast::buffers_to_string(buf.data())};
  }

  nlohmann::json read_text() {
    for (;;) {
      auto [binary, payload] = read();
      if (!binary) return nlohmann::json::parse(payload);
      raw.push_back(payload);
    }
  }

  FrameMessage read_frame() {
    for (;;) {
      auto [binary, payload] = read();
      if (binary) {
        raw.push_back(payload);
        return decode_frame(payload);
      }
      texts.push_back(nlohmann::json::parse(payload));
    }
  }

  void close() {
    beast::error_code ec;
    ws_.close(websocket::close_code::normal, ec);
  }

  std::vector<nlohmann::json> texts;
  std::vector<std::string> raw;

 private:
  asio::io_context ioc_;
  websocket::stream<tcp::socket> ws_;
};

ServerOptions fast_options() {
  ServerOptions o;
  o.cadence_fps = 100.0;
  return o;
}

}  // namespace

TEST_CASE("handshake returns the hello message") {
  StreamServer server(preset("granular_pile"), fast_options());
  server.start();
  REQUIRE(server.port() != 0);
  Client c(server.port());
  const nlohmann::json hello = c.read_text();
  CHECK(hello["type"] == "hello");
  CHECK(hello["protocol_version"] == 1);
  CHECK(hello["scenario"] == "granular_pile");
  CHECK(hello["tweakables"].is_array());
  CHECK(!hello["tweakables"].empty());
  c.close();
  server.stop();
}

TEST_CASE("pause halts the simulation within one frame") {
  StreamServer server(preset("gas_jets"), fast_options());
  server.start();
  Client c(server.port());
  c.read_text();
  c.read_frame();
  c.send(R"({"type":"pause"})");
  // the ack names the tick that applied the pause
  nlohmann::json ack;
  do {
    ack = c.read_text();
  } while (ack["type"] != "ack");
  const std::uint64_t paused_tick = ack["tick"];
  std::uint64_t paused_step = 0;
  bool found = false;
  for (int k = 0; k < 15; ++k) {
    const FrameMessage f = c.read_frame();
    if (f.snapshot["frame"].get<std::uint64_t>() < paused_tick) continue;
    CHECK(f.snapshot["paused"] == true);
    if (!found) {
      paused_step = f.step;
      found = true;
    }
    CHECK(f.step == paused_step);
  }
  CHECK(found);
  CHECK(server.current_step() == paused_step);
  c.close();
  server.stop();
}

TEST_CASE("malformed messages get an error reply and do not disturb the run") {
  StreamServer server(preset("gas_jets"), fast_options());
  server.start();
  Client c(server.port());
  c.read_text();
  c.send("{not json");
  CHECK(c.read_text()["type"] == "error");
  c.send(R"({"type":"set_param","path":"materials.gas.mass","value":2})");
  const nlohmann::json rejected = c.read_text();
  CHECK(rejected["type"] == "error");
  CHECK(rejected.contains("reason"));
  c.send_binary(std::string("\x01\x02", 2));
  CHECK(c.read_text()["type"] == "error");
  const std::uint64_t before = c.read_frame().step;
  CHECK(c.read_frame().step > before);
  c.close();
  server.stop();
}

TEST_CASE("frames arrive in order to fast and slow viewers alike") {
  StreamServer server(preset("gas_jets"), fast_options());
  server.start();
  Client fast(server.port());
  Client slow(server.port());
  fast.read_text();
  slow.read_text();
  const std::uint64_t frames_before = server.frames_broadcast();
  std::uint64_t last = 0;
  bool first = true;
  for (int k = 0; k < 30; ++k) {
    const FrameMessage f = fast.read_frame();
    if (!first) CHECK(f.step > last);
    last = f.step;
    first = false;
  }
  // the slow viewer has not read anything yet; the simulation kept going
  CHECK(server.frames_broadcast() >= frames_before + 29);
  first = true;
  for (int k = 0; k < 40; ++k) {
    const FrameMessage f = slow.read_frame();
    if (!first) CHECK(f.step > last);
    last = f.step;
    first = false;
  }
  fast.close();
  slow.close();
  server.stop();
}

TEST_CASE("frames seen by a client match an offline replay of the server log") {
  const Scenario initial = preset("gas_jets");
  StreamServer server(initial, fast_options());
  server.start();
  Client c(server.port());
  c.read_text();
  const char* script[] = {R"({"type":"set_param","path":"materials.gas.K","value":1500})",
                          R"({"type":"set_speed","frames_per_second":50})",
                          R"({"type":"pause"})",
                          R"({"type":"step","n":11})",
                          R"({"type":"resume"})",
                          R"({"type":"set_param","path":"ambient_viscosity","value":0.2})",
                          R"({"type":"reset"})"};
  for (const char* m : script) {
    c.send(m);
    nlohmann::json reply;
    do {
      reply = c.read_text();
    } while (reply["type"] != "ack" && reply["type"] != "error");
    for (int k = 0; k < 2; ++k) c.read_frame();
  }
  c.close();
  server.stop();
  std::map<std::uint64_t, std::uint64_t> seen;  // frame index -> hash
  for (const std::string& bytes : c.raw) seen[decode_frame(bytes).snapshot["frame"].get<std::uint64_t>()] = fnv1a(bytes);
  const auto log = server.message_log();
  CHECK(log.size() == std::size(script));
  const std::uint64_t last = seen.rbegin()->first;
  const auto hashes = replay(initial, log, last + 1);
  for (const auto& [frame, hash] : seen) CHECK(hashes.at(frame) == hash);
  CHECK(seen.size() >= 2 * std::size(script));
}

TEST_CASE("binding a port that is already taken reports a system error") {
  StreamServer first(preset("gas_jets"), fast_options());
  first.start();
  ServerOptions o = fast_options();
  o.port = first.port();
  StreamServer second(preset("gas_jets"), o);
  CHECK_THROWS_AS(second.start(), std::system_error);
  ServerOptions bad = fast_options();
  bad.address = "not-an-address";
  StreamServer third(preset("gas_jets"), bad);
  CHECK_THROWS_AS(third.start(), std::system_error);
  first.stop();
}
