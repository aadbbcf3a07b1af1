#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "mesop/scenarios.hpp"

namespace mesop {

class FrameFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One particle of a recorded frame at 32-bit precision.
struct ParticleRecord {
  std::uint32_t id = 0;
  float position[3] = {0, 0, 0};
  float velocity[3] = {0, 0, 0};
  std::uint32_t material_id = 0;
  ParticleKind kind = ParticleKind::free;

  friend bool operator==(const ParticleRecord&, const ParticleRecord&) = default;
};

struct FrameRecord {
  std::uint64_t step = 0;
  double time = 0.0;
  int dim = 2;
  std::vector<ParticleRecord> particles;

  friend bool operator==(const FrameRecord&, const FrameRecord&) = default;
};

// Particle ids are indices into the frame's particle list.
FrameRecord make_record(const Frame& frame);

// Binary layout, little-endian:
//   char[4] "MPF1", u32 dim, u32 count, u64 step, f64 time,
//   then per particle `2 + 2*dim + 1` f32 values:
//   id, position[dim], velocity[dim], material_id, kind (0 free, 1 boundary).
// Ids and material ids are stored as f32 and are exact below 2^24.
void write_frame_binary(std::ostream& out, const FrameRecord& frame);
FrameRecord read_frame_binary(std::istream& in);

// CSV mode: a "# step=<n> time=<t> dim=<d>" line, a header line, then one
// row per particle with the same fields; floats use 9 significant digits,
// which round-trips every 32-bit value.
void write_frame_csv(std::ostream& out, const FrameRecord& frame);
FrameRecord read_frame_csv(std::istream& in);

// 9 significant digits (round-trip safe for 32-bit floats), '.' separator
// regardless of locale.
std::string format_float(float value);
// 9 significant digits, locale independent.
std::string format_double(double value);

// 8-bit grayscale raster.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major, top row first

  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  friend bool operator==(const Image&, const Image&) = default;
};

struct RenderOptions {
  int width = 512;
  int height = 512;
  // World-space disc radius (half the elastic threshold of the presets).
  double particle_radius = 0.5;
  // World rectangle shown; when empty the particles' bounding box plus a
  // margin of `particle_radius * 2` is fitted with the aspect ratio kept.
  bool fixed_view = false;
  double view_min_x = 0.0, view_min_y = 0.0, view_max_x = 1.0, view_max_y = 1.0;
};

inline constexpr std::uint8_t kBackgroundShade = 0;
inline constexpr std::uint8_t kBoundaryShade = 128;
inline constexpr std::uint8_t kFreeShade = 255;

// Orthographic projection onto the x-y plane; each particle is a filled disc.
// Boundary particles are drawn first so free particles stay visible.
Image render_frame(const FrameRecord& frame, const RenderOptions& options);
void write_pgm(std::ostream& out, const Image& image);
Image read_pgm(std::istream& in);

}  // namespace mesop
