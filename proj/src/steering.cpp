#include "mesop/steering.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <map>
#include <sstream>

#include "mesop/frame_io.hpp"
#include "mesop/params.hpp"
#include "mesop/version.hpp"

namespace mesop {

using nlohmann::json;

namespace {

const std::map<std::string, ControlMessage::Type>& type_names() {
  using T = ControlMessage::Type;
  static const std::map<std::string, T> names = {
      {"set_param", T::set_param}, {"load_preset", T::load_preset}, {"pause", T::pause},
      {"resume", T::resume},       {"step", T::step},               {"reset", T::reset},
      {"set_speed", T::set_speed}};
  return names;
}

std::string type_name(ControlMessage::Type t) {
  for (const auto& [name, type] : type_names()) {
    if (type == t) return name;
  }
  return "?";
}

constexpr std::uint64_t kMaxStepRequest = 1'000'000;
constexpr double kMaxSpeedFps = 1000.0;

template <class T>
void put(std::string& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.append(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get(const std::string& in, std::size_t& at) {
  if (at + sizeof(T) > in.size()) throw ProtocolError("truncated frame message");
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, in.data() + at, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  at += sizeof(T);
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

json metrics_summary(const RegimeReport& r) {
  const MetricVector& m = r.metrics;
  json j{{"label", to_string(r.label)},
         {"repose_angle_deg", m.repose_angle_deg},
         {"spread_ratio", m.spread_ratio},
         {"cluster_count", m.cluster_count},
         {"largest_cluster_fraction", m.largest_cluster_fraction},
         {"stress_cv", m.stress_cv},
         {"shear_rms", m.shear_rms},
         {"kinetic_energy_per_particle", m.kinetic_energy_per_particle}};
  return j;
}

}  // namespace

ControlMessage control_from_json(const json& j) {
  if (!j.is_object()) throw ProtocolError("control message must be a JSON object");
  if (!j.contains("type") || !j["type"].is_string()) throw ProtocolError("control message needs a string 'type'");
  const auto it = type_names().find(j["type"].get<std::string>());
  if (it == type_names().end()) throw ProtocolError("unknown message type '" + j["type"].get<std::string>() + "'");
  ControlMessage m;
  m.type = it->second;
  auto number = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_number()) throw ProtocolError(std::string("'") + key + "' must be a number");
    const double v = j[key].get<double>();
    if (!std::isfinite(v)) throw ProtocolError(std::string("'") + key + "' must be finite");
    return v;
  };
  auto string = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_string()) throw ProtocolError(std::string("'") + key + "' must be a string");
    return j[key].get<std::string>();
  };
  using T = ControlMessage::Type;
  switch (m.type) {
    case T::set_param:
      m.path = string("path");
      m.value = number("value");
      break;
    case T::load_preset: m.name = string("name"); break;
    case T::step:
      if (!j.contains("n") || !j["n"].is_number_unsigned()) throw ProtocolError("'n' must be a non-negative integer");
      m.n = j["n"].get<std::uint64_t>();
      break;
    case T::set_speed: m.frames_per_second = number("frames_per_second"); break;
    case T::pause:
    case T::resume:
    case T::reset: break;
  }
  return m;
}

ControlMessage parse_control(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ProtocolError(std::string("malformed JSON: ") + e.what());
  }
  return control_from_json(j);
}

json control_to_json(const ControlMessage& m) {
  json j{{"type", type_name(m.type)}};
  using T = ControlMessage::Type;
  switch (m.type) {
    case T::set_param:
      j["path"] = m.path;
      j["value"] = m.value;
      break;
    case T::load_preset: j["name"] = m.name; break;
    case T::step: j["n"] = m.n; break;
    case T::set_speed: j["frames_per_second"] = m.frames_per_second; break;
    case T::pause:
    case T::resume:
    case T::reset: break;
  }
  return j;
}

SessionState::SessionState(Scenario initial_scenario, unsigned threads)
    : initial(std::move(initial_scenario)), sim(initial, threads) {}

ControlResult apply_control(SessionState& s, const ControlMessage& msg) {
  using T = ControlMessage::Type;
  try {
    switch (msg.type) {
      case T::set_param:
        check_param_range(s.sim.state().materials, msg.path, msg.value);
        set_param(s.sim.state(), msg.path, msg.value);
        break;
      case T::load_preset: {
        const unsigned threads = s.sim.engine().threads();
        Scenario next = preset(msg.name, PresetOptions{s.initial.dim});
        s.initial = next;
        s.sim = Simulation(std::move(next), threads);
        s.shear_reference.reset();
        break;
      }
      case T::pause: s.paused = true; break;
      case T::resume: s.paused = false; break;
      case T::step:
        if (msg.n > kMaxStepRequest) return {false, "step count above " + std::to_string(kMaxStepRequest)};
        s.sim.advance(msg.n);
        break;
      case T::reset:
        s.sim = Simulation(s.initial, s.sim.engine().threads());
        s.shear_reference.reset();
        break;
      case T::set_speed: {
        if (!(msg.frames_per_second > 0.0 && msg.frames_per_second <= kMaxSpeedFps)) {
          return {false, "frames_per_second outside (0, " + format_double(kMaxSpeedFps) + "]"};
        }
        const double steps = std::round(msg.frames_per_second * kDefaultStepsPerFrame / kDefaultCadenceFps);
        s.speed_fps = msg.frames_per_second;
        s.steps_per_frame = static_cast<std::uint32_t>(std::max(1.0, steps));
        break;
      }
    }
  } catch (const DivergenceError& e) {
    s.paused = true;
    return {false, std::string("simulation diverged; paused: ") + e.what()};
  } catch (const std::out_of_range& e) {
    return {false, e.what()};
  } catch (const std::invalid_argument& e) {
    return {false, e.what()};
  }
  return {};
}

json tweakable_schema(const SessionState& s) {
  json out = json::array();
  for (const ParamSpec& p : tweakable_params(s.sim.state().materials)) {
    out.push_back({{"path", p.path}, {"min", p.min}, {"max", p.max}, {"value", get_param(s.sim.state(), p.path)}});
  }
  return out;
}

json parameter_snapshot(const SessionState& s) {
  json out = json::object();
  for (const ParamSpec& p : tweakable_params(s.sim.state().materials)) out[p.path] = get_param(s.sim.state(), p.path);
  return out;
}

json hello_message(const SessionState& s) {
  return json{{"type", "hello"},
              {"protocol_version", kProtocolVersion},
              {"scenario", s.initial.name},
              {"dim", s.initial.dim},
              {"steps_per_frame", s.steps_per_frame},
              {"cadence_fps", kDefaultCadenceFps},
              {"tweakables", tweakable_schema(s)}};
}

std::string encode_frame(const FrameMessage& f) {
  const std::uint32_t count = static_cast<std::uint32_t>(f.material_ids.size());
  if (f.positions.size() != static_cast<std::size_t>(count) * f.dim) {
    throw std::invalid_argument("encode_frame: positions do not match count * dim");
  }
  std::string out = "MPS1";
  put<std::uint32_t>(out, f.step);
  put<float>(out, f.time);
  put<std::uint8_t>(out, f.dim);
  put<std::uint32_t>(out, count);
  for (float v : f.positions) put<float>(out, v);
  for (std::uint16_t id : f.material_ids) put<std::uint16_t>(out, id);
  const std::string snapshot = f.snapshot.is_null() ? std::string() : f.snapshot.dump();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(snapshot.size()));
  out += snapshot;
  return out;
}

FrameMessage decode_frame(const std::string& in) {
  if (in.size() < 4 || in.compare(0, 4, "MPS1") != 0) throw ProtocolError("bad frame magic");
  std::size_t at = 4;
  FrameMessage f;
  f.step = get<std::uint32_t>(in, at);
  f.time = get<float>(in, at);
  f.dim = get<std::uint8_t>(in, at);
  if (f.dim != 2 && f.dim != 3) throw ProtocolError("bad frame dim");
  const auto count = get<std::uint32_t>(in, at);
  f.positions.resize(static_cast<std::size_t>(count) * f.dim);
  for (float& v : f.positions) v = get<float>(in, at);
  f.material_ids.resize(count);
  for (std::uint16_t& id : f.material_ids) id = get<std::uint16_t>(in, at);
  const auto n = get<std::uint32_t>(in, at);
  if (at + n != in.size()) throw ProtocolError("bad frame snapshot length");
  if (n > 0) f.snapshot = json::parse(in.substr(at));
  return f;
}

std::string tick(SessionState& s, const std::vector<ControlMessage>& messages, std::vector<ControlResult>* results) {
  for (const ControlMessage& m : messages) {
    const ControlResult r = apply_control(s, m);
    if (results) results->push_back(r);
  }
  if (!s.paused) {
    try {
      s.sim.advance(s.steps_per_frame);
    } catch (const DivergenceError&) {
      s.paused = true;
    }
  }

  const SimState& st = s.sim.state();
  FrameMessage f;
  f.step = static_cast<std::uint32_t>(st.step_count);
  f.time = static_cast<float>(st.time);
  f.dim = static_cast<std::uint8_t>(st.dim);
  f.positions.reserve(st.particles.size() * st.dim);
  for (const Particle& p : st.particles) {
    for (int a = 0; a < st.dim; ++a) f.positions.push_back(static_cast<float>(p.position[a]));
    f.material_ids.push_back(static_cast<std::uint16_t>(p.material_id));
  }
  f.snapshot = json{{"frame", s.frame_index},
                    {"params", parameter_snapshot(s)},
                    {"paused", s.paused},
                    {"steps_per_frame", s.steps_per_frame}};
  if (s.frame_index % kMetricsEveryFrames == 0) {
    const RegimeReport report = analyze(s.sim.frame(), s.initial.analysis, s.shear_reference);
    if (!s.shear_reference && st.step_count >= 100) s.shear_reference = report.metrics.shear_rms;
    f.snapshot["metrics"] = metrics_summary(report);
  }
  ++s.frame_index;
  return encode_frame(f);
}

std::string log_to_ndjson(const std::vector<LoggedMessage>& log) {
  std::string out;
  for (const LoggedMessage& m : log) out += json{{"tick", m.tick}, {"message", control_to_json(m.message)}}.dump() + "\n";
  return out;
}

std::vector<LoggedMessage> log_from_ndjson(const std::string& text) {
  std::vector<LoggedMessage> log;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      log.push_back({j.at("tick").get<std::uint64_t>(), control_from_json(j.at("message"))});
    } catch (const std::exception& e) {
      throw ProtocolError("replay log line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return log;
}

std::vector<std::uint64_t> replay(const Scenario& initial, const std::vector<LoggedMessage>& log, std::uint64_t ticks) {
  SessionState s(initial);
  std::vector<std::uint64_t> hashes;
  std::size_t next = 0;
  for (std::uint64_t t = 0; t < ticks; ++t) {
    std::vector<ControlMessage> batch;
    while (next < log.size() && log[next].tick == t) batch.push_back(log[next++].message);
    hashes.push_back(fnv1a(tick(s, batch)));
  }
  return hashes;
}

}  // namespace mesop
