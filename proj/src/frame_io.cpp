#include "mesop/frame_io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <string_view>

namespace mesop {

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <class T>
void put(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw FrameFormatError("truncated frame");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

constexpr float kMaxExactId = 16777216.0f;  // 2^24

std::uint32_t exact_id(float v, const char* what) {
  if (!(v >= 0.0f && v < kMaxExactId) || v != std::floor(v)) {
    throw FrameFormatError(std::string("invalid ") + what);
  }
  return static_cast<std::uint32_t>(v);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  return out;
}

template <class T>
T parse_number(const std::string& text, const char* what) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw FrameFormatError(std::string("bad ") + what + " '" + text + "'");
  }
  return value;
}

std::string csv_header(int dim) {
  std::string h = "id,x,y";
  if (dim == 3) h += ",z";
  h += ",vx,vy";
  if (dim == 3) h += ",vz";
  return h + ",material_id,kind";
}

}  // namespace

std::string format_float(float value) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 9);
  return std::string(buf, r.ptr);
}

std::string format_double(double value) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 9);
  return std::string(buf, r.ptr);
}

FrameRecord make_record(const Frame& frame) {
  FrameRecord r;
  r.step = frame.step;
  r.time = frame.time;
  r.dim = frame.dim;
  r.particles.reserve(frame.particles.size());
  for (std::size_t i = 0; i < frame.particles.size(); ++i) {
    const Particle& p = frame.particles[i];
    ParticleRecord pr;
    pr.id = static_cast<std::uint32_t>(i);
    for (int a = 0; a < 3; ++a) {
      pr.position[a] = a < frame.dim ? static_cast<float>(p.position[a]) : 0.0f;
      pr.velocity[a] = a < frame.dim ? static_cast<float>(p.velocity[a]) : 0.0f;
    }
    pr.material_id = p.material_id;
    pr.kind = p.kind;
    r.particles.push_back(pr);
  }
  return r;
}

void write_frame_binary(std::ostream& out, const FrameRecord& frame) {
  out.write("MPF1", 4);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(frame.dim));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(frame.particles.size()));
  put<std::uint64_t>(out, frame.step);
  put<double>(out, frame.time);
  for (const ParticleRecord& p : frame.particles) {
    put<float>(out, static_cast<float>(p.id));
    for (int a = 0; a < frame.dim; ++a) put<float>(out, p.position[a]);
    for (int a = 0; a < frame.dim; ++a) put<float>(out, p.velocity[a]);
    put<float>(out, static_cast<float>(p.material_id));
    put<float>(out, p.kind == ParticleKind::free ? 0.0f : 1.0f);
  }
}

FrameRecord read_frame_binary(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "MPF1", 4) != 0) throw FrameFormatError("bad magic");
  FrameRecord f;
  const auto dim = get<std::uint32_t>(in);
  if (dim != 2 && dim != 3) throw FrameFormatError("bad dim");
  f.dim = static_cast<int>(dim);
  const auto count = get<std::uint32_t>(in);
  f.step = get<std::uint64_t>(in);
  f.time = get<double>(in);
  f.particles.resize(count);
  for (ParticleRecord& p : f.particles) {
    p.id = exact_id(get<float>(in), "particle id");
    for (int a = 0; a < f.dim; ++a) p.position[a] = get<float>(in);
    for (int a = 0; a < f.dim; ++a) p.velocity[a] = get<float>(in);
    p.material_id = exact_id(get<float>(in), "material id");
    const float kind = get<float>(in);
    if (kind != 0.0f && kind != 1.0f) throw FrameFormatError("bad particle kind");
    p.kind = kind == 0.0f ? ParticleKind::free : ParticleKind::boundary;
  }
  if (in.peek() != std::char_traits<char>::eof()) throw FrameFormatError("trailing bytes after frame");
  return f;
}

void write_frame_csv(std::ostream& out, const FrameRecord& frame) {
  // the header time keeps full double precision so the record round-trips
  char time[32];
  const auto end = std::to_chars(time, time + sizeof time, frame.time).ptr;
  out << "# step=" << frame.step << " time=" << std::string_view(time, end - time) << " dim=" << frame.dim << '\n';
  out << csv_header(frame.dim) << '\n';
  for (const ParticleRecord& p : frame.particles) {
    out << p.id;
    for (int a = 0; a < frame.dim; ++a) out << ',' << format_float(p.position[a]);
    for (int a = 0; a < frame.dim; ++a) out << ',' << format_float(p.velocity[a]);
    out << ',' << p.material_id << ',' << (p.kind == ParticleKind::free ? "free" : "boundary") << '\n';
  }
}

FrameRecord read_frame_csv(std::istream& in) {
  FrameRecord f;
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0) throw FrameFormatError("missing frame header line");
  for (const std::string& field : split(line.substr(2), ' ')) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) throw FrameFormatError("bad header field '" + field + "'");
    const std::string key = field.substr(0, eq), value = field.substr(eq + 1);
    if (key == "step") f.step = parse_number<std::uint64_t>(value, "step");
    else if (key == "time") f.time = parse_number<double>(value, "time");
    else if (key == "dim") f.dim = parse_number<int>(value, "dim");
    else throw FrameFormatError("unknown header field '" + key + "'");
  }
  if (f.dim != 2 && f.dim != 3) throw FrameFormatError("bad dim");
  if (!std::getline(in, line) || line != csv_header(f.dim)) throw FrameFormatError("bad column header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cols = split(line, ',');
    if (cols.size() != static_cast<std::size_t>(3 + 2 * f.dim)) throw FrameFormatError("bad row '" + line + "'");
    ParticleRecord p;
    std::size_t c = 0;
    p.id = parse_number<std::uint32_t>(cols[c++], "id");
    for (int a = 0; a < f.dim; ++a) p.position[a] = parse_number<float>(cols[c++], "position");
    for (int a = 0; a < f.dim; ++a) p.velocity[a] = parse_number<float>(cols[c++], "velocity");
    p.material_id = parse_number<std::uint32_t>(cols[c++], "material id");
    const std::string& kind = cols[c];
    if (kind == "free") p.kind = ParticleKind::free;
    else if (kind == "boundary") p.kind = ParticleKind::boundary;
    else throw FrameFormatError("bad kind '" + kind + "'");
    f.particles.push_back(p);
  }
  return f;
}

Image render_frame(const FrameRecord& frame, const RenderOptions& o) {
  if (o.width <= 0 || o.height <= 0) throw std::invalid_argument("render: image size must be positive");
  Image img{o.width, o.height, std::vector<std::uint8_t>(static_cast<std::size_t>(o.width) * o.height,
                                                         kBackgroundShade)};
  if (frame.particles.empty()) return img;

  double x0 = o.view_min_x, y0 = o.view_min_y, x1 = o.view_max_x, y1 = o.view_max_y;
  if (!o.fixed_view) {
    x0 = y0 = INFINITY;
    x1 = y1 = -INFINITY;
    for (const ParticleRecord& p : frame.particles) {
      x0 = std::min(x0, double{p.position[0]});
      x1 = std::max(x1, double{p.position[0]});
      y0 = std::min(y0, double{p.position[1]});
      y1 = std::max(y1, double{p.position[1]});
    }
    const double margin = 2.0 * o.particle_radius;
    x0 -= margin;
    x1 += margin;
    y0 -= margin;
    y1 += margin;
    // Keep the aspect ratio: widen the narrower extent about its centre.
    const double aspect = static_cast<double>(o.width) / o.height;
    if ((x1 - x0) / (y1 - y0) < aspect) {
      const double half = 0.5 * (y1 - y0) * aspect, cx = 0.5 * (x0 + x1);
      x0 = cx - half;
      x1 = cx + half;
    } else {
      const double half = 0.5 * (x1 - x0) / aspect, cy = 0.5 * (y0 + y1);
      y0 = cy - half;
      y1 = cy + half;
    }
  }
  const double sx = o.width / (x1 - x0), sy = o.height / (y1 - y0);
  const double rx = o.particle_radius * sx, ry = o.particle_radius * sy;

  auto draw = [&](const ParticleRecord& p, std::uint8_t shade) {
    // Pixel centres are at integer + 0.5; y grows downward on screen.
    const double cx = (p.position[0] - x0) * sx;
    const double cy = (y1 - p.position[1]) * sy;
    const int px0 = std::max(0, static_cast<int>(std::floor(cx - rx)));
    const int px1 = std::min(o.width - 1, static_cast<int>(std::ceil(cx + rx)));
    const int py0 = std::max(0, static_cast<int>(std::floor(cy - ry)));
    const int py1 = std::min(o.height - 1, static_cast<int>(std::ceil(cy + ry)));
    for (int py = py0; py <= py1; ++py) {
      for (int px = px0; px <= px1; ++px) {
        const double dx = (px + 0.5 - cx) / rx, dy = (py + 0.5 - cy) / ry;
        if (dx * dx + dy * dy <= 1.0) img.pixels[static_cast<std::size_t>(py) * o.width + px] = shade;
      }
    }
  };
  for (const ParticleRecord& p : frame.particles) {
    if (p.kind == ParticleKind::boundary) draw(p, kBoundaryShade);
  }
  for (const ParticleRecord& p : frame.particles) {
    if (p.kind == ParticleKind::free) draw(p, kFreeShade);
  }
  return img;
}

void write_pgm(std::ostream& out, const Image& image) {
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
}

Image read_pgm(std::istream& in) {
  std::string magic;
  int maxval = 0;
  Image img;
  in >> magic >> img.width >> img.height >> maxval;
  if (magic != "P5" || img.width <= 0 || img.height <= 0 || maxval != 255) throw FrameFormatError("bad PGM header");
  in.get();
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  if (!in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()))) {
    throw FrameFormatError("truncated PGM");
  }
  return img;
}

}  // namespace mesop
