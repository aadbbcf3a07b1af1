#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "mesop/steering.hpp"

namespace mesop {

struct ServerOptions {
  std::string address = "127.0.0.1";
  std::uint16_t port = 0;  // 0 picks a free port
  double cadence_fps = kDefaultCadenceFps;
  unsigned threads = 1;    // force-accumulation threads of the simulation
  // Frames queued per viewer before new frames to that viewer are dropped.
  std::size_t max_pending_frames = 4;
  // Optional path of an NDJSON replay log written as messages are applied.
  std::string replay_log;
};

// WebSocket steering server. One simulation worker owns the session state;
// network handlers only enqueue parsed control messages (in arrival order)
// and receive encoded frames. Text messages carry JSON (hello, acks, errors,
// control); binary messages carry MPS1 frames.
class StreamServer {
 public:
  StreamServer(Scenario scenario, ServerOptions options);
  ~StreamServer();
  StreamServer(const StreamServer&) = delete;
  StreamServer& operator=(const StreamServer&) = delete;

  // Binds and starts the network and simulation threads. Throws
  // std::system_error when the address or port cannot be bound.
  void start();
  void stop();
  // Blocks until stop() is called from another thread or a signal handler.
  void wait();

  std::uint16_t port() const;
  // Frames broadcast so far and the step of the newest one.
  std::uint64_t frames_broadcast() const;
  std::uint64_t current_step() const;
  // Log of every applied message with the tick that applied it.
  std::vector<LoggedMessage> message_log() const;

  struct Impl;  // implementation detail

 private:
  std::unique_ptr<Impl> impl_;
};

}  // namespace mesop
