#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "mesop/metrics.hpp"

namespace mesop {

inline constexpr int kProtocolVersion = 1;
inline constexpr double kDefaultCadenceFps = 25.0;
// Physics steps per broadcast at real-time speed: floor(1050 / 25).
inline constexpr std::uint32_t kDefaultStepsPerFrame = 42;
// Metrics ride along on every n-th frame.
inline constexpr std::uint64_t kMetricsEveryFrames = 25;

class ProtocolError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ControlMessage {
  enum class Type { set_param, load_preset, pause, resume, step, reset, set_speed };
  Type type = Type::pause;
  std::string path;               // set_param
  double value = 0.0;             // set_param
  std::string name;               // load_preset
  std::uint64_t n = 0;            // step
  double frames_per_second = 0.0; // set_speed

  friend bool operator==(const ControlMessage&, const ControlMessage&) = default;
};

// JSON form: {"type": "set_param", "path": ..., "value": ...},
// {"type": "load_preset", "name": ...}, {"type": "pause"}, {"type": "resume"},
// {"type": "step", "n": ...}, {"type": "reset"},
// {"type": "set_speed", "frames_per_second": ...}.
// Throws ProtocolError for malformed text or fields.
ControlMessage parse_control(const std::string& text);
ControlMessage control_from_json(const nlohmann::json& j);
nlohmann::json control_to_json(const ControlMessage& msg);

struct ControlResult {
  bool ok = true;
  std::string reason;  // set when rejected
};

// Everything a steering session owns. Only apply_control and tick mutate it.
struct SessionState {
  explicit SessionState(Scenario initial, unsigned threads = 1);

  Scenario initial;   // what reset restores
  Simulation sim;
  bool paused = false;
  // Simulated speed in frames (of 1/25 s simulated time) per wall second;
  // the broadcast cadence itself never changes.
  double speed_fps = kDefaultCadenceFps;
  std::uint32_t steps_per_frame = kDefaultStepsPerFrame;
  std::uint64_t frame_index = 0;  // broadcasts produced so far
  std::optional<double> shear_reference;
};

// Applies one message between steps. A rejected message leaves the state
// unchanged. Accepted messages:
//   set_param   path must be tweakable and the value inside its range
//   load_preset replaces the initial scenario and restarts
//   pause / resume
//   step        advances n steps now, paused or not
//   reset       restores the initial scenario bit-exactly
//   set_speed   steps per broadcast = max(1, round(fps * 42 / 25)); dt fixed
ControlResult apply_control(SessionState& state, const ControlMessage& msg);

// Parameter paths with ranges and current values, as sent in hello.
nlohmann::json tweakable_schema(const SessionState& state);
nlohmann::json parameter_snapshot(const SessionState& state);
nlohmann::json hello_message(const SessionState& state);

// Binary frame payload, little-endian:
//   char[4] "MPS1", u32 step, f32 time, u8 dim, u32 count,
//   count*dim f32 positions, count u16 material ids,
//   u32 n, then n bytes of UTF-8 JSON {"frame": broadcast index,
//   "params": {...}, "paused": bool,
//   "steps_per_frame": u32, "metrics": {...} (optional)}.
struct FrameMessage {
  std::uint32_t step = 0;
  float time = 0.0f;
  std::uint8_t dim = 2;
  std::vector<float> positions;
  std::vector<std::uint16_t> material_ids;
  nlohmann::json snapshot;
};

std::string encode_frame(const FrameMessage& frame);
FrameMessage decode_frame(const std::string& bytes);

// One broadcast period: applies the queued messages in order, advances
// steps_per_frame steps unless paused, and returns the encoded frame.
// Replies are written to `results` (one per message) when given.
std::string tick(SessionState& state, const std::vector<ControlMessage>& messages,
                 std::vector<ControlResult>* results = nullptr);

// Recorded session: messages tagged with the tick that applied them.
struct LoggedMessage {
  std::uint64_t tick = 0;
  ControlMessage message;
};

std::string log_to_ndjson(const std::vector<LoggedMessage>& log);
std::vector<LoggedMessage> log_from_ndjson(const std::string& text);

// Replays a log against `initial` for `ticks` broadcasts and returns the
// FNV-1a hash of every encoded frame.
std::vector<std::uint64_t> replay(const Scenario& initial, const std::vector<LoggedMessage>& log,
                                  std::uint64_t ticks);

}  // namespace mesop
