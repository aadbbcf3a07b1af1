// mesop command-line front end: run, render, sweep, serve, export.
// Exit codes: 0 ok, 1 usage, 2 divergence, 3 I/O.
#include <algorithm>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "mesop/config.hpp"
#include "mesop/frame_io.hpp"
#include "mesop/stream_server.hpp"
#include "mesop/sweep.hpp"
#include "mesop/version.hpp"

namespace fs = std::filesystem;
using namespace mesop;

namespace {

enum Exit { kOk = 0, kUsage = 1, kDiverged = 2, kIo = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory '" + dir.string() + "'");
}

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << bytes;
  out.close();
  if (!out) throw IoError("cannot write '" + path.string() + "'");
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Scenario resolve_scenario(const std::string& spec, int dim) {
  try {
    return load_scenario(spec, PresetOptions{dim});
  } catch (const std::ios_base::failure& e) {
    throw IoError(e.what());
  } catch (const ConfigError& e) {
    throw UsageError(std::string("malformed scenario: ") + e.what());
  } catch (const std::out_of_range& e) {
    throw UsageError(e.what());
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

// ---- run -------------------------------------------------------------------

struct RunArgs {
  std::string scenario;
  std::int64_t steps = -1;
  std::uint64_t every = 500;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string format = "bin";
  bool metrics = false;
  int dim = 2;
  unsigned threads = 1;
};

std::string frame_name(std::uint64_t step, const std::string& format) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%08llu.%s", static_cast<unsigned long long>(step),
                format == "bin" ? "mpf" : "csv");
  return buf;
}

int cmd_run(const RunArgs& a) {
  Scenario scenario = resolve_scenario(a.scenario, a.dim);
  if (a.seed) scenario.rng_seed = *a.seed;
  const std::uint64_t steps = a.steps < 0 ? scenario.duration : static_cast<std::uint64_t>(a.steps);
  if (a.every == 0) throw UsageError("--every must be > 0");
  const fs::path out(a.out);
  ensure_dir(out);

  Simulation sim(scenario, a.threads);
  std::ofstream metrics;
  if (a.metrics) {
    metrics.open(out / "metrics.csv", std::ios::binary | std::ios::trunc);
    if (!metrics) throw IoError("cannot write metrics.csv");
    metrics << report_csv_header() << '\n';
  }
  std::optional<double> shear_reference;

  auto emit = [&] {
    Frame frame = sim.frame();
    const FrameRecord record = make_record(frame);
    std::ostringstream bytes;
    if (a.format == "bin") write_frame_binary(bytes, record);
    else write_frame_csv(bytes, record);
    write_file(out / frame_name(frame.step, a.format), bytes.str());
    if (a.metrics) {
      const RegimeReport report = analyze(frame, scenario.analysis, shear_reference);
      metrics << report_csv_row(frame.step, frame.time, report) << '\n';
      if (!metrics) throw IoError("cannot write metrics.csv");
    }
  };

  emit();
  std::uint64_t done = 0;
  try {
    while (done < steps) {
      // Stop at the next output step, and at step 100 for the shear reference.
      std::uint64_t target = std::min(steps, (done / a.every + 1) * a.every);
      if (!shear_reference && done < 100 && steps > 100) target = std::min<std::uint64_t>(target, 100);
      sim.advance(target - done);
      done = target;
      if (done == 100 && !shear_reference) {
        shear_reference = analyze(sim.frame(), scenario.analysis).metrics.shear_rms;
      }
      if (done % a.every == 0 || done == steps) emit();
    }
  } catch (const DivergenceError& e) {
    std::cerr << "diverged at step " << sim.state().step_count << ": " << e.what() << '\n';
    emit();  // the last good state is untouched by the failed step
    return kDiverged;
  }
  return kOk;
}

// ---- render ----------------------------------------------------------------

int cmd_render(const std::string& frames_dir, const std::string& out_dir, const std::string& size, double radius) {
  int w = 0, h = 0;
  char x = 0;
  std::istringstream s(size);
  if (!(s >> w >> x >> h) || x != 'x' || w <= 0 || h <= 0 || !s.eof()) throw UsageError("--size must be WxH");
  if (!fs::is_directory(frames_dir)) throw IoError("no frame directory '" + frames_dir + "'");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(frames_dir)) {
    const auto ext = entry.path().extension();
    if (ext == ".mpf" || ext == ".csv") {
      if (entry.path().filename() != "metrics.csv") files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  ensure_dir(out_dir);
  RenderOptions opt;
  opt.width = w;
  opt.height = h;
  opt.particle_radius = radius;
  for (const fs::path& f : files) {
    std::istringstream in(read_file(f));
    FrameRecord record;
    try {
      record = f.extension() == ".mpf" ? read_frame_binary(in) : read_frame_csv(in);
    } catch (const FrameFormatError& e) {
      throw IoError(f.string() + ": " + e.what());
    }
    std::ostringstream pgm;
    write_pgm(pgm, render_frame(record, opt));
    write_file(fs::path(out_dir) / (f.stem().string() + ".pgm"), pgm.str());
  }
  std::cerr << "rendered " << files.size() << " frame(s)\n";
  return kOk;
}

// ---- sweep -----------------------------------------------------------------

int cmd_sweep(const std::string& spec_path, const std::string& out_dir, unsigned threads) {
  SweepSpec spec;
  try {
    spec = sweep_spec_from_json(nlohmann::json::parse(read_file(spec_path)));
    spec.validate();
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError(std::string("malformed sweep spec: ") + e.what());
  } catch (const ConfigError& e) {
    throw UsageError(std::string("malformed sweep spec: ") + e.what());
  } catch (const std::ios_base::failure& e) {
    throw IoError(e.what());
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  } catch (const std::out_of_range& e) {
    throw UsageError(e.what());
  }
  const fs::path out(out_dir);
  ensure_dir(out);

  const Scenario base = load_scenario(spec.base);
  const Provenance prov{std::string(kEngineVersion), spec.seed, constants_hash(base)};

  // Resume: cells whose key still matches are reused verbatim.
  SweepOptions options;
  options.threads = threads;
  const fs::path progress = out / "cells.ndjson";
  bool torn_tail = false;
  if (fs::exists(progress)) {
    const std::string text = read_file(progress);
    torn_tail = !text.empty() && text.back() != '\n';
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      try {
        const auto j = nlohmann::json::parse(line);
        SweepCell cell = cell_from_json(j.at("cell"));
        if (cell.i < spec.rows() && cell.j < spec.cols() &&
            j.at("key").get<std::uint64_t>() == cell_key(spec, prov, cell.i, cell.j)) {
          options.completed.push_back(cell);
        }
      } catch (const std::exception&) {
        // a line cut short by an interruption: recompute that cell
      }
    }
  }
  const std::size_t total = spec.rows() * spec.cols();
  std::cerr << "sweep: " << options.completed.size() << "/" << total << " cells already complete\n";

  std::ofstream log(progress, std::ios::binary | std::ios::app);
  if (!log) throw IoError("cannot write '" + progress.string() + "'");
  if (torn_tail) log << '\n';  // keep the next record on its own line
  std::size_t finished = options.completed.size();
  options.on_cell = [&](const SweepCell& c) {
    log << nlohmann::json{{"key", cell_key(spec, prov, c.i, c.j)}, {"cell", cell_to_json(c)}}.dump() << '\n'
        << std::flush;
    ++finished;
    std::cerr << "sweep: cell (" << c.i << "," << c.j << ") " << (c.failed ? "failed: " + c.error : to_string(c.report.label))
              << "  [" << finished << "/" << total << "]\n";
  };
  const BehaviorMap map = run_sweep(spec, options);
  write_file(out / "map.csv", behavior_map_csv(map));
  write_file(out / "map.ppm", behavior_map_ppm(map));
  nlohmann::json provenance{{"engine_version", map.provenance.engine_version},
                            {"seed", map.provenance.seed},
                            {"constants_hash", map.provenance.constants_hash},
                            {"spec", sweep_spec_to_json(spec)}};
  write_file(out / "provenance.json", provenance.dump(2) + "\n");
  return kOk;
}

// ---- serve -----------------------------------------------------------------

int cmd_serve(const std::string& scenario_spec, int dim, const std::string& address, std::uint16_t port,
              double fps, const std::string& replay_log, unsigned threads) {
  Scenario scenario = resolve_scenario(scenario_spec, dim);
  ServerOptions opt;
  opt.address = address;
  opt.port = port;
  opt.cadence_fps = fps;
  opt.replay_log = replay_log;
  opt.threads = threads;

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);  // inherited by server threads

  StreamServer server(std::move(scenario), opt);
  try {
    server.start();
  } catch (const std::ios_base::failure& e) {
    throw IoError(e.what());
  } catch (const std::system_error& e) {
    throw IoError(std::string("cannot listen on ") + address + ":" + std::to_string(port) + ": " + e.what());
  }
  std::cout << "listening on ws://" << address << ":" << server.port() << std::endl;
  int sig = 0;
  sigwait(&signals, &sig);
  server.stop();
  std::cerr << "stopped after " << server.frames_broadcast() << " frames\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mesop: thresholded visco-elastic particle engine"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kEngineVersion));

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "run a scenario and write frames");
  run_cmd->add_option("--scenario", run.scenario, "preset:<name> or scenario JSON file")->required();
  run_cmd->add_option("--steps", run.steps, "steps to run (default: scenario duration)")->check(CLI::NonNegativeNumber);
  run_cmd->add_option("--every", run.every, "frame cadence in steps")->check(CLI::PositiveNumber);
  run_cmd->add_option("--out", run.out, "output directory")->required();
  run_cmd->add_option("--seed", run.seed, "override the scenario seed");
  run_cmd->add_option("--format", run.format, "frame format")->check(CLI::IsMember({"bin", "csv"}));
  run_cmd->add_flag("--metrics", run.metrics, "also write metrics.csv");
  run_cmd->add_option("--dim", run.dim, "dimension for presets")->check(CLI::IsMember({2, 3}));
  run_cmd->add_option("--threads", run.threads, "force-accumulation threads")->check(CLI::PositiveNumber);

  std::string frames_dir, render_out, size = "512x512";
  double radius = 0.5;
  auto* render_cmd = app.add_subcommand("render", "rasterise frames to PGM");
  render_cmd->add_option("--frames", frames_dir, "directory of .mpf/.csv frames")->required();
  render_cmd->add_option("--out", render_out, "output directory")->required();
  render_cmd->add_option("--size", size, "image size WxH");
  render_cmd->add_option("--radius", radius, "world-space disc radius")->check(CLI::PositiveNumber);

  std::string spec_path, sweep_out;
  unsigned sweep_threads = 0;
  auto* sweep_cmd = app.add_subcommand("sweep", "run a parameter sweep (resumable)");
  sweep_cmd->add_option("--spec", spec_path, "sweep spec JSON")->required();
  sweep_cmd->add_option("--out", sweep_out, "output directory")->required();
  sweep_cmd->add_option("--threads", sweep_threads, "worker count (default: cores, capped by MESOP_THREADS)");

  std::string serve_scenario, address = "127.0.0.1", replay_log;
  int serve_dim = 2;
  int port = 8765;
  double fps = kDefaultCadenceFps;
  unsigned serve_threads = 1;
  auto* serve_cmd = app.add_subcommand("serve", "serve a live simulation over WebSocket");
  serve_cmd->add_option("--scenario", serve_scenario, "preset:<name> or scenario JSON file")->required();
  serve_cmd->add_option("--port", port, "TCP port (0 = any free port)")->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--address", address, "bind address");
  serve_cmd->add_option("--fps", fps, "broadcast cadence")->check(CLI::PositiveNumber);
  serve_cmd->add_option("--replay-log", replay_log, "write applied control messages as NDJSON");
  serve_cmd->add_option("--dim", serve_dim)->check(CLI::IsMember({2, 3}));
  serve_cmd->add_option("--threads", serve_threads)->check(CLI::PositiveNumber);

  std::string export_scenario, export_out;
  int export_dim = 2;
  auto* export_cmd = app.add_subcommand("export", "write a scenario (e.g. a preset) as JSON");
  export_cmd->add_option("--scenario", export_scenario, "preset:<name> or scenario JSON file")->required();
  export_cmd->add_option("--out", export_out, "output file (default: stdout)");
  export_cmd->add_option("--dim", export_dim)->check(CLI::IsMember({2, 3}));

  app.add_subcommand("presets", "list preset names");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*render_cmd) return cmd_render(frames_dir, render_out, size, radius);
    if (*sweep_cmd) return cmd_sweep(spec_path, sweep_out, sweep_threads);
    if (*serve_cmd) {
      return cmd_serve(serve_scenario, serve_dim, address, static_cast<std::uint16_t>(port), fps, replay_log,
                       serve_threads);
    }
    if (*export_cmd) {
      const std::string text = dump_scenario(resolve_scenario(export_scenario, export_dim));
      if (export_out.empty()) std::cout << text;
      else write_file(export_out, text);
      return kOk;
    }
    for (const std::string& name : preset_names()) std::cout << name << '\n';
    return kOk;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << '\n';
    return kDiverged;
  }
}
