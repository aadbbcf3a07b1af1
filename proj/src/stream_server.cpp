#include "mesop/stream_server.hpp"

#include <atomic>
#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <mutex>
#include <set>
#include <system_error>
#include <thread>

#include "mesop/version.hpp"

namespace mesop {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using nlohmann::json;

namespace {

class Session;

struct Command {
  std::weak_ptr<Session> sender;
  ControlMessage message;
};

}  // namespace

struct StreamServer::Impl {
  Impl(Scenario scenario, ServerOptions opts) : options(std::move(opts)), state(std::move(scenario), options.threads) {}

  ServerOptions options;
  asio::io_context ioc;
  tcp::acceptor acceptor{ioc};
  std::set<std::shared_ptr<Session>> sessions;  // io thread only

  // worker-owned
  SessionState state;
  std::uint64_t tick_index = 0;
  std::ofstream replay_log;

  std::mutex mutex;  // guards the fields below
  std::deque<Command> commands;
  std::string hello;
  std::vector<LoggedMessage> log;
  std::condition_variable stopped_cv;
  bool stopped = false;

  std::atomic<bool> running{false};
  std::uint16_t bound_port = 0;
  std::atomic<std::uint64_t> frames{0};
  std::atomic<std::uint64_t> step{0};
  std::thread io_thread;
  std::thread worker;

  void accept();
  void broadcast(std::string frame);
  void run_worker();
};

namespace {

class Session : public std::enable_shared_from_this<Session> {
 public:
  Session(tcp::socket socket, StreamServer::Impl& server)
      : ws_(std::move(socket)), server_(server) {}

  void start() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
      if (ec) return self->close();
      self->open_ = true;
      std::string hello;
      {
        std::lock_guard lock(self->server_.mutex);
        hello = self->server_.hello;
      }
      self->send(std::move(hello), false);
      self->read();
    });
  }

  // io thread only. Frames beyond the pending limit are dropped; text
  // replies are never dropped. Order is preserved either way.
  void send(std::string payload, bool binary) {
    if (closed_ || !open_) return;  // nothing may precede the handshake reply
    if (binary) {
      if (pending_frames_ >= server_.options.max_pending_frames) return;
      ++pending_frames_;
    }
    queue_.push_back({std::move(payload), binary});
    if (!writing_) write_next();
  }

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->close();
      if (!self->ws_.got_text()) {
        self->send(json{{"type", "error"}, {"reason", "control messages must be text"}}.dump(), false);
      } else {
        const std::string text = beast::buffers_to_string(self->buffer_.data());
        try {
          ControlMessage msg = parse_control(text);
          std::lock_guard lock(self->server_.mutex);
          self->server_.commands.push_back({self, std::move(msg)});
        } catch (const ProtocolError& e) {
          self->send(json{{"type", "error"}, {"reason", e.what()}}.dump(), false);
        }
      }
      self->buffer_.consume(self->buffer_.size());
      self->read();
    });
  }

  void write_next() {
    writing_ = true;
    ws_.binary(queue_.front().binary);
    ws_.async_write(asio::buffer(queue_.front().payload), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->close();
      if (self->queue_.front().binary) --self->pending_frames_;
      self->queue_.pop_front();
      if (self->queue_.empty()) {
        self->writing_ = false;
      } else {
        self->write_next();
      }
    });
  }

  void close() {
    if (closed_) return;
    closed_ = true;
    server_.sessions.erase(shared_from_this());
  }

  struct Outgoing {
    std::string payload;
    bool binary;
  };

  websocket::stream<beast::tcp_stream> ws_;
  StreamServer::Impl& server_;
  beast::flat_buffer buffer_;
  std::deque<Outgoing> queue_;
  std::size_t pending_frames_ = 0;
  bool writing_ = false;
  bool open_ = false;  // handshake completed
  bool closed_ = false;
};

}  // namespace

void StreamServer::Impl::accept() {
  acceptor.async_accept(ioc, [this](beast::error_code ec, tcp::socket socket) {
    if (ec) return;  // acceptor closed
    auto session = std::make_shared<Session>(std::move(socket), *this);
    sessions.insert(session);
    session->start();
    accept();
  });
}

void StreamServer::Impl::broadcast(std::string frame) {
  asio::post(ioc, [this, frame = std::move(frame)] {
    for (const auto& s : std::vector<std::shared_ptr<Session>>(sessions.begin(), sessions.end())) s->send(frame, true);
  });
}

void StreamServer::Impl::run_worker() {
  using clock = std::chrono::steady_clock;
  const auto period = std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(1.0 / options.cadence_fps));
  auto next = clock::now();
  while (running) {
    std::deque<Command> batch;
    {
      std::lock_guard lock(mutex);
      batch.swap(commands);
    }
    std::vector<ControlMessage> messages;
    for (const Command& c : batch) messages.push_back(c.message);
    std::vector<ControlResult> results;
    std::string frame = tick(state, messages, &results);

    {
      std::lock_guard lock(mutex);
      for (const ControlMessage& m : messages) {
        log.push_back({tick_index, m});
        if (replay_log) replay_log << log_to_ndjson({log.back()}) << std::flush;
      }
      hello = hello_message(state).dump();
    }
    for (std::size_t k = 0; k < batch.size(); ++k) {
      json reply = results[k].ok
                       ? json{{"type", "ack"}, {"request", control_to_json(batch[k].message)}, {"tick", tick_index}}
                       : json{{"type", "error"}, {"reason", results[k].reason}, {"request", control_to_json(batch[k].message)}};
      asio::post(ioc, [sender = batch[k].sender, text = reply.dump()] {
        if (auto s = sender.lock()) s->send(text, false);
      });
    }
    step = state.sim.state().step_count;
    broadcast(std::move(frame));
    ++frames;
    ++tick_index;

    next += period;
    const auto now = clock::now();
    if (now > next + period) next = now;  // fell behind: skip, never burst
    std::this_thread::sleep_until(next);
  }
}

StreamServer::StreamServer(Scenario scenario, ServerOptions options)
    : impl_(std::make_unique<Impl>(std::move(scenario), std::move(options))) {
  if (!(impl_->options.cadence_fps > 0.0)) throw std::invalid_argument("serve: cadence must be > 0");
}

StreamServer::~StreamServer() { stop(); }

void StreamServer::start() {
  Impl& s = *impl_;
  try {
    const tcp::endpoint endpoint(asio::ip::make_address(s.options.address), s.options.port);
    s.acceptor.open(endpoint.protocol());
    s.acceptor.set_option(asio::socket_base::reuse_address(true));
    s.acceptor.bind(endpoint);
    s.acceptor.listen();
  } catch (const boost::system::system_error& e) {
    beast::error_code ignored;
    s.acceptor.close(ignored);
    throw std::system_error(std::make_error_code(static_cast<std::errc>(e.code().value())),
                            "bind " + s.options.address + ":" + std::to_string(s.options.port));
  }
  s.bound_port = s.acceptor.local_endpoint().port();
  if (!s.options.replay_log.empty()) {
    s.replay_log.open(s.options.replay_log, std::ios::binary | std::ios::trunc);
    if (!s.replay_log) throw std::ios_base::failure("cannot write replay log '" + s.options.replay_log + "'");
  }
  s.hello = hello_message(s.state).dump();
  s.accept();
  s.running = true;
  s.io_thread = std::thread([&s] { s.ioc.run(); });
  s.worker = std::thread([&s] { s.run_worker(); });
}

void StreamServer::stop() {
  Impl& s = *impl_;
  if (s.running.exchange(false)) {
    if (s.worker.joinable()) s.worker.join();
    asio::post(s.ioc, [&s] {
      beast::error_code ec;
      s.acceptor.close(ec);
      s.sessions.clear();
    });
    s.ioc.stop();
    if (s.io_thread.joinable()) s.io_thread.join();
  }
  std::lock_guard lock(s.mutex);
  s.stopped = true;
  s.stopped_cv.notify_all();
}

void StreamServer::wait() {
  std::unique_lock lock(impl_->mutex);
  impl_->stopped_cv.wait(lock, [&] { return impl_->stopped; });
}

std::uint16_t StreamServer::port() const { return impl_->bound_port; }
std::uint64_t StreamServer::frames_broadcast() const { return impl_->frames; }
std::uint64_t StreamServer::current_step() const { return impl_->step; }

std::vector<LoggedMessage> StreamServer::message_log() const {
  std::lock_guard lock(impl_->mutex);
  return impl_->log;
}

}  // namespace mesop
