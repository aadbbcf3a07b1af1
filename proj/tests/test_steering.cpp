#include "doctest.h"
#include "mesop/steering.hpp"
#include "mesop/version.hpp"

using namespace mesop;

namespace {

ControlMessage msg(const std::string& text) { return parse_control(text); }

Scenario small() {
  Scenario s = preset("gas_jets");
  return s;
}

}  // namespace

TEST_CASE("control messages parse and round-trip") {
  const char* texts[] = {R"({"type":"set_param","path":"materials.gas.K","value":100})",
                         R"({"type":"load_preset","name":"paste_ooze"})",
                         R"({"type":"pause"})",
                         R"({"type":"resume"})",
                         R"({"type":"step","n":5})",
                         R"({"type":"reset"})",
                         R"({"type":"set_speed","frames_per_second":50})"};
  for (const char* t : texts) {
    const ControlMessage m = msg(t);
    CHECK(control_from_json(control_to_json(m)) == m);
  }
  CHECK_THROWS_AS(msg("not json"), ProtocolError);
  CHECK_THROWS_AS(msg(R"({"type":"fly"})"), ProtocolError);
  CHECK_THROWS_AS(msg(R"({"type":"step"})"), ProtocolError);
  CHECK_THROWS_AS(msg(R"({"type":"set_param","path":3,"value":1})"), ProtocolError);
  CHECK_THROWS_AS(msg(R"([1,2])"), ProtocolError);
}

TEST_CASE("pause stops time; step advances while paused") {
  SessionState s(small());
  tick(s, {});
  const std::uint64_t step = s.sim.state().step_count;
  CHECK(step == kDefaultStepsPerFrame);
  tick(s, {msg(R"({"type":"pause"})")});
  for (int k = 0; k < 5; ++k) tick(s, {});
  CHECK(s.sim.state().step_count == step);
  tick(s, {msg(R"({"type":"step","n":3})")});
  CHECK(s.sim.state().step_count == step + 3);
  tick(s, {msg(R"({"type":"resume"})")});
  CHECK(s.sim.state().step_count == step + 3 + kDefaultStepsPerFrame);
}

TEST_CASE("setting a parameter to its current value leaves the trajectory unchanged") {
  SessionState a(small()), b(small());
  for (int k = 0; k < 3; ++k) {
    tick(a, {});
    tick(b, {});
  }
  const double k_now = a.sim.state().materials[0].law.K;
  ControlMessage m;
  m.type = ControlMessage::Type::set_param;
  m.path = "materials.gas.K";
  m.value = k_now;
  tick(b, {m});
  tick(a, {});
  for (int k = 0; k < 3; ++k) {
    tick(a, {});
    tick(b, {});
  }
  CHECK(a.sim.state() == b.sim.state());
}

TEST_CASE("reset restores the initial state exactly") {
  SessionState s(small());
  const SimState initial = s.sim.state();
  tick(s, {msg(R"({"type":"set_param","path":"materials.gas.K","value":777})")});
  tick(s, {});
  tick(s, {msg(R"({"type":"reset"})")});
  // reset is applied before this tick's steps
  CHECK(s.sim.state().step_count == kDefaultStepsPerFrame);
  SessionState fresh(small());
  tick(fresh, {});
  CHECK(s.sim.state() == fresh.sim.state());
  apply_control(s, msg(R"({"type":"reset"})"));
  CHECK(s.sim.state() == initial);
}

TEST_CASE("invalid requests are rejected and leave the state unchanged") {
  SessionState s(preset("granular_pile"));
  tick(s, {});
  const SimState before = s.sim.state();
  const char* bad[] = {R"({"type":"set_param","path":"materials.ground.mass","value":5})",
                       R"({"type":"set_param","path":"materials.grain.K","value":1e12})",
                       R"({"type":"set_param","path":"materials.grain.K","value":-1})",
                       R"({"type":"set_param","path":"nonsense","value":1})",
                       R"({"type":"load_preset","name":"nope"})",
                       R"({"type":"set_speed","frames_per_second":0})",
                       R"({"type":"set_speed","frames_per_second":1e9})"};
  for (const char* t : bad) {
    const ControlResult r = apply_control(s, msg(t));
    CHECK_FALSE(r.ok);
    CHECK(!r.reason.empty());
  }
  CHECK(s.sim.state() == before);
  CHECK(s.steps_per_frame == kDefaultStepsPerFrame);
}

TEST_CASE("set_speed scales steps per frame and keeps dt") {
  SessionState s(small());
  const double dt = s.sim.state().dt;
  CHECK(apply_control(s, msg(R"({"type":"set_speed","frames_per_second":50})")).ok);
  CHECK(s.steps_per_frame == 84);
  CHECK(apply_control(s, msg(R"({"type":"set_speed","frames_per_second":0.1})")).ok);
  CHECK(s.steps_per_frame == 1);
  CHECK(s.sim.state().dt == dt);
}

TEST_CASE("load_preset replaces the scenario") {
  SessionState s(small());
  CHECK(apply_control(s, msg(R"({"type":"load_preset","name":"paste_ooze"})")).ok);
  CHECK(s.initial.name == "paste_ooze");
  CHECK(s.sim.state().step_count == 0);
}

TEST_CASE("hello lists the tweakable parameters") {
  SessionState s(preset("granular_pile"));
  const nlohmann::json h = hello_message(s);
  CHECK(h["type"] == "hello");
  CHECK(h["protocol_version"] == kProtocolVersion);
  CHECK(h["scenario"] == "granular_pile");
  CHECK(h["steps_per_frame"] == kDefaultStepsPerFrame);
  bool has_k = false;
  for (const auto& t : h["tweakables"]) {
    CHECK(t.contains("min"));
    CHECK(t.contains("max"));
    CHECK(t.contains("value"));
    if (t["path"] == "materials.grain.K") has_k = true;
  }
  CHECK(has_k);
}

TEST_CASE("frames encode and decode") {
  SessionState s(small());
  for (int k = 0; k < 3; ++k) tick(s, {});
  const std::string bytes = tick(s, {});
  const FrameMessage f = decode_frame(bytes);
  CHECK(f.step == s.sim.state().step_count);
  CHECK(f.dim == 2);
  CHECK(f.positions.size() == 2 * s.sim.state().particles.size());
  CHECK(f.material_ids.size() == s.sim.state().particles.size());
  CHECK(f.snapshot["frame"] == 3);
  CHECK(encode_frame(f) == bytes);
  CHECK_THROWS_AS(decode_frame(bytes.substr(0, 10)), ProtocolError);
}

TEST_CASE("metrics ride along every n-th frame") {
  SessionState s(small());
  int with_metrics = 0;
  for (std::uint64_t k = 0; k < 2 * kMetricsEveryFrames; ++k) {
    if (decode_frame(tick(s, {})).snapshot.contains("metrics")) ++with_metrics;
  }
  CHECK(with_metrics == 2);
}

TEST_CASE("replaying a message log reproduces every frame") {
  const Scenario initial = small();
  SessionState live(initial);
  std::vector<LoggedMessage> log;
  std::vector<std::uint64_t> hashes;
  const char* script[] = {R"({"type":"set_param","path":"materials.gas.K","value":900})",
                          R"({"type":"pause"})",
                          R"({"type":"step","n":7})",
                          R"({"type":"resume"})",
                          R"({"type":"set_speed","frames_per_second":40})",
                          R"({"type":"set_param","path":"ambient_viscosity","value":0.3})",
                          R"({"type":"set_param","path":"materials.gas.K","value":1e9})",
                          R"({"type":"reset"})",
                          R"({"type":"set_param","path":"gravity","value":2})",
                          R"({"type":"set_speed","frames_per_second":10})"};
  const std::uint64_t ticks = 60;
  std::size_t sent = 0;
  for (std::uint64_t t = 0; t < ticks; ++t) {
    std::vector<ControlMessage> batch;
    // 100 messages spread over the run, some ticks with several
    for (int k = 0; k < (t % 3 == 0 ? 3 : 1) && sent < 100; ++k, ++sent) {
      batch.push_back(msg(script[sent % std::size(script)]));
      log.push_back({t, batch.back()});
    }
    hashes.push_back(fnv1a(tick(live, batch)));
  }
  CHECK(sent == 100);
  const auto parsed = log_from_ndjson(log_to_ndjson(log));
  CHECK(parsed.size() == log.size());
  CHECK(replay(initial, parsed, ticks) == hashes);
}

TEST_CASE("raising K early in a fluid spread run stiffens the heap in the streamed metrics") {
  // Scripted steering session: same run with and without a K increase sent
  // on the first tick; compare the metrics riding on the last frame.
  auto final_metrics = [](bool stiffen) {
    SessionState s(preset("fluid_spread"));
    nlohmann::json metrics;
    for (int t = 0; t <= 250; ++t) {
      std::vector<ControlMessage> batch;
      if (stiffen && t == 1) batch.push_back(msg(R"({"type":"set_param","path":"materials.fluid.K","value":8000})"));
      const FrameMessage f = decode_frame(tick(s, batch));
      if (f.snapshot.contains("metrics")) metrics = f.snapshot["metrics"];
    }
    return metrics;
  };
  const nlohmann::json soft = final_metrics(false);
  const nlohmann::json stiff = final_metrics(true);
  CHECK(soft["label"] == "fluid_laminar");
  CHECK(stiff["label"] != "fluid_laminar");
  CHECK(stiff["repose_angle_deg"].get<double>() >= 15.0);
  CHECK(stiff["repose_angle_deg"].get<double>() >= soft["repose_angle_deg"].get<double>() + 10.0);
  MESSAGE("label after stiffening: " << stiff["label"].get<std::string>() << ", repose "
                                     << stiff["repose_angle_deg"].get<double>() << " deg");
}
