#include "mesop/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace mesop {

using nlohmann::json;

namespace {

json vec_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

json law_json(const MaterialLaw& l) {
  return json{{"K", l.K}, {"Z", l.Z}, {"De", l.De}, {"Dv", l.Dv}, {"D0", l.D0}};
}

const std::string& material_name(const Scenario& s, std::uint32_t id) {
  if (id >= s.materials.size()) throw ConfigError("material id " + std::to_string(id) + " out of range");
  return s.materials[id].name;
}

// Read-side cursor: a JSON value plus its pointer path for diagnostics.
class Node {
 public:
  Node(const json& value, std::string path) : value_(value), path_(std::move(path)) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError((path_.empty() ? "/" : path_) + ": " + what);
  }

  const json& value() const { return value_; }
  const std::string& path() const { return path_; }

  // Object access; unknown keys are reported by finish().
  void require_object(std::initializer_list<const char*> allowed) const {
    if (!value_.is_object()) fail("expected an object");
    std::set<std::string> known(allowed.begin(), allowed.end());
    for (const auto& [key, v] : value_.items()) {
      if (!known.count(key)) Node(v, path_ + "/" + key).fail("unknown key");
    }
  }
  bool has(const char* key) const { return value_.contains(key); }
  Node at(const char* key) const {
    if (!value_.contains(key)) fail(std::string("missing key '") + key + "'");
    return Node(value_.at(key), path_ + "/" + key);
  }
  Node at(std::size_t i) const { return Node(value_.at(i), path_ + "/" + std::to_string(i)); }
  std::size_t array_size() const {
    if (!value_.is_array()) fail("expected an array");
    return value_.size();
  }

  double number() const {
    if (!value_.is_number()) fail("expected a number");
    const double v = value_.get<double>();
    if (!std::isfinite(v)) fail("expected a finite number");
    return v;
  }
  std::uint64_t unsigned_int() const {
    if (!value_.is_number_unsigned() && !(value_.is_number_integer() && value_.get<std::int64_t>() >= 0)) {
      fail("expected a non-negative integer");
    }
    return value_.get<std::uint64_t>();
  }
  std::string string() const {
    if (!value_.is_string()) fail("expected a string");
    return value_.get<std::string>();
  }
  Vec3 vec() const {
    if (!value_.is_array() || (value_.size() != 2 && value_.size() != 3)) fail("expected [x, y] or [x, y, z]");
    Vec3 v{at(std::size_t{0}).number(), at(std::size_t{1}).number(), 0.0};
    if (value_.size() == 3) v.z = at(std::size_t{2}).number();
    return v;
  }

  double number_or(const char* key, double fallback) const { return has(key) ? at(key).number() : fallback; }
  std::uint64_t unsigned_or(const char* key, std::uint64_t fallback) const {
    return has(key) ? at(key).unsigned_int() : fallback;
  }
  Vec3 vec_or(const char* key, const Vec3& fallback) const { return has(key) ? at(key).vec() : fallback; }

 private:
  const json& value_;
  std::string path_;
};

MaterialLaw read_law(const Node& n) {
  n.require_object({"K", "Z", "De", "Dv", "D0"});
  MaterialLaw l{n.at("K").number(), n.at("Z").number(), n.at("De").number(), n.at("Dv").number(),
                n.at("D0").number()};
  try {
    l.validate();
  } catch (const std::invalid_argument& e) {
    n.fail(e.what());
  }
  return l;
}

std::uint32_t read_material(const Node& n, const Scenario& s) {
  const std::string name = n.string();
  for (std::size_t k = 0; k < s.materials.size(); ++k) {
    if (s.materials[k].name == name) return static_cast<std::uint32_t>(k);
  }
  n.fail("unknown material '" + name + "'");
}

}  // namespace

json scenario_to_json(const Scenario& s) {
  json doc;
  doc["name"] = s.name;
  doc["dim"] = s.dim;
  doc["dt"] = s.dt;
  doc["duration"] = s.duration;
  doc["rng_seed"] = s.rng_seed;
  doc["gravity"] = vec_json(s.gravity);
  doc["ambient_viscosity"] = s.ambient_viscosity;

  json materials = json::array();
  for (const Material& m : s.materials) materials.push_back({{"name", m.name}, {"law", law_json(m.law)}});
  doc["materials"] = materials;

  json rules = json::array();
  for (const auto& [key, law] : s.pair_rules.entries()) {
    rules.push_back({{"a", material_name(s, key.first)}, {"b", material_name(s, key.second)}, {"law", law_json(law)}});
  }
  doc["pair_rules"] = rules;

  json tags = json::array();
  for (const auto& [material, tag] : s.tags) tags.push_back({{"material", material}, {"tag", to_string(tag)}});
  doc["tags"] = tags;

  json particles = json::array();
  for (const Particle& p : s.particles) {
    particles.push_back({{"position", vec_json(p.position)},
                         {"velocity", vec_json(p.velocity)},
                         {"mass", p.mass},
                         {"material", material_name(s, p.material_id)},
                         {"kind", p.is_free() ? "free" : "boundary"}});
  }
  doc["particles"] = particles;

  json emitters = json::array();
  for (const Emitter& e : s.emitters) {
    emitters.push_back({{"origin", vec_json(e.origin)},
                        {"direction", vec_json(e.direction)},
                        {"speed", e.speed},
                        {"rate", e.rate},
                        {"material", material_name(s, e.material_id)},
                        {"jitter_seed", e.jitter_seed},
                        {"width", e.width},
                        {"lanes", e.lanes},
                        {"jitter", e.jitter},
                        {"velocity_jitter", e.velocity_jitter},
                        {"mass", e.mass},
                        {"max_count", e.max_count}});
  }
  doc["emitters"] = emitters;

  json boundaries = json::array();
  for (const Boundary& b : s.boundaries) {
    json jb{{"spacing", b.spacing}, {"depth", b.depth}, {"material", material_name(s, b.material_id)}};
    if (b.shape == Boundary::Shape::segment) {
      jb["shape"] = "segment";
      jb["a"] = vec_json(b.a);
      jb["b"] = vec_json(b.b);
    } else {
      jb["shape"] = "disc";
      jb["center"] = vec_json(b.center);
      jb["radius"] = b.radius;
      jb["fill_radius"] = b.fill_radius;
    }
    boundaries.push_back(jb);
  }
  doc["boundaries"] = boundaries;

  json blocks = json::array();
  for (const Block& b : s.blocks) {
    blocks.push_back({{"corner", vec_json(b.corner)},
                      {"counts", json::array({b.nx, b.ny, b.nz})},
                      {"spacing", b.spacing},
                      {"jitter", b.jitter},
                      {"seed", b.seed},
                      {"material", material_name(s, b.material_id)},
                      {"mass", b.mass},
                      {"velocity", vec_json(b.velocity)}});
  }
  doc["blocks"] = blocks;

  json analysis{{"flow_axis", vec_json(s.analysis.flow_axis)},
                {"bin_width", s.analysis.bin_width},
                {"contact_radius", s.analysis.contact_radius}};
  analysis["ground_height"] =
      std::isnan(s.analysis.ground_height) ? json(nullptr) : json(s.analysis.ground_height);
  doc["analysis"] = analysis;
  return doc;
}

Scenario scenario_from_json(const json& document) {
  const Node root(document, "");
  root.require_object({"name", "dim", "dt", "duration", "rng_seed", "gravity", "ambient_viscosity", "materials",
                       "pair_rules", "tags", "particles", "emitters", "boundaries", "blocks", "analysis"});
  Scenario s;
  s.name = root.at("name").string();
  s.dim = static_cast<int>(root.at("dim").unsigned_int());
  if (s.dim != 2 && s.dim != 3) root.at("dim").fail("dim must be 2 or 3");
  s.dt = root.number_or("dt", s.dt);
  if (!(s.dt > 0.0)) root.at("dt").fail("dt must be > 0");
  s.duration = root.unsigned_or("duration", s.duration);
  s.rng_seed = root.unsigned_or("rng_seed", s.rng_seed);
  s.gravity = root.vec_or("gravity", s.gravity);
  s.ambient_viscosity = root.number_or("ambient_viscosity", 0.0);
  if (s.ambient_viscosity < 0.0) root.at("ambient_viscosity").fail("must be >= 0");

  const Node materials = root.at("materials");
  for (std::size_t k = 0; k < materials.array_size(); ++k) {
    const Node m = materials.at(k);
    m.require_object({"name", "law"});
    Material mat{m.at("name").string(), read_law(m.at("law"))};
    for (const Material& other : s.materials) {
      if (other.name == mat.name) m.at("name").fail("duplicate material name");
    }
    s.materials.push_back(mat);
  }
  if (s.materials.empty()) materials.fail("at least one material is required");

  if (root.has("pair_rules")) {
    const Node rules = root.at("pair_rules");
    for (std::size_t k = 0; k < rules.array_size(); ++k) {
      const Node r = rules.at(k);
      r.require_object({"a", "b", "law"});
      s.pair_rules.set(read_material(r.at("a"), s), read_material(r.at("b"), s), read_law(r.at("law")));
    }
  }
  if (root.has("tags")) {
    const Node tags = root.at("tags");
    for (std::size_t k = 0; k < tags.array_size(); ++k) {
      const Node t = tags.at(k);
      t.require_object({"material", "tag"});
      read_material(t.at("material"), s);
      try {
        s.tags.emplace_back(t.at("material").string(), interaction_preset_from_string(t.at("tag").string()));
      } catch (const std::invalid_argument& e) {
        t.at("tag").fail(e.what());
      }
    }
  }
  if (root.has("particles")) {
    const Node ps = root.at("particles");
    for (std::size_t k = 0; k < ps.array_size(); ++k) {
      const Node n = ps.at(k);
      n.require_object({"position", "velocity", "mass", "material", "kind"});
      Particle p;
      p.position = n.at("position").vec();
      p.velocity = n.vec_or("velocity", Vec3{});
      p.mass = n.number_or("mass", 1.0);
      if (!(p.mass > 0.0)) n.at("mass").fail("mass must be > 0");
      p.material_id = read_material(n.at("material"), s);
      if (n.has("kind")) {
        const std::string kind = n.at("kind").string();
        if (kind == "boundary") p.kind = ParticleKind::boundary;
        else if (kind != "free") n.at("kind").fail("expected \"free\" or \"boundary\"");
      }
      s.particles.push_back(p);
    }
  }
  if (root.has("emitters")) {
    const Node es = root.at("emitters");
    for (std::size_t k = 0; k < es.array_size(); ++k) {
      const Node n = es.at(k);
      n.require_object({"origin", "direction", "speed", "rate", "material", "jitter_seed", "width", "lanes",
                        "jitter", "velocity_jitter", "mass", "max_count"});
      Emitter e;
      e.origin = n.at("origin").vec();
      e.direction = n.at("direction").vec();
      e.speed = n.at("speed").number();
      e.rate = n.at("rate").number();
      e.material_id = read_material(n.at("material"), s);
      e.jitter_seed = n.unsigned_or("jitter_seed", 0);
      e.width = n.number_or("width", 0.0);
      e.lanes = static_cast<std::uint32_t>(n.unsigned_or("lanes", 1));
      e.jitter = n.number_or("jitter", 0.0);
      e.velocity_jitter = n.number_or("velocity_jitter", 0.0);
      e.mass = n.number_or("mass", 1.0);
      e.max_count = n.unsigned_or("max_count", 0);
      try {
        e.validate(s.dim);
      } catch (const std::invalid_argument& ex) {
        n.fail(ex.what());
      }
      s.emitters.push_back(e);
    }
  }
  if (root.has("boundaries")) {
    const Node bs = root.at("boundaries");
    for (std::size_t k = 0; k < bs.array_size(); ++k) {
      const Node n = bs.at(k);
      n.require_object({"shape", "a", "b", "center", "radius", "fill_radius", "spacing", "depth", "material"});
      Boundary b;
      const std::string shape = n.at("shape").string();
      if (shape == "segment") {
        b.shape = Boundary::Shape::segment;
        b.a = n.at("a").vec();
        b.b = n.at("b").vec();
      } else if (shape == "disc") {
        b.shape = Boundary::Shape::disc;
        b.center = n.at("center").vec();
        b.radius = n.at("radius").number();
        b.fill_radius = n.number_or("fill_radius", 0.0);
      } else {
        n.at("shape").fail("expected \"segment\" or \"disc\"");
      }
      b.spacing = n.at("spacing").number();
      if (!(b.spacing > 0.0)) n.at("spacing").fail("spacing must be > 0");
      b.depth = n.number_or("depth", 0.0);
      b.material_id = read_material(n.at("material"), s);
      s.boundaries.push_back(b);
    }
  }
  if (root.has("blocks")) {
    const Node bs = root.at("blocks");
    for (std::size_t k = 0; k < bs.array_size(); ++k) {
      const Node n = bs.at(k);
      n.require_object({"corner", "counts", "spacing", "jitter", "seed", "material", "mass", "velocity"});
      Block b;
      b.corner = n.at("corner").vec();
      const Node counts = n.at("counts");
      if (counts.array_size() != 3) counts.fail("expected [nx, ny, nz]");
      b.nx = static_cast<std::uint32_t>(counts.at(std::size_t{0}).unsigned_int());
      b.ny = static_cast<std::uint32_t>(counts.at(std::size_t{1}).unsigned_int());
      b.nz = static_cast<std::uint32_t>(counts.at(std::size_t{2}).unsigned_int());
      b.spacing = n.at("spacing").number();
      if (!(b.spacing > 0.0)) n.at("spacing").fail("spacing must be > 0");
      b.jitter = n.number_or("jitter", 0.0);
      b.seed = n.unsigned_or("seed", 0);
      b.material_id = read_material(n.at("material"), s);
      b.mass = n.number_or("mass", 1.0);
      b.velocity = n.vec_or("velocity", Vec3{});
      s.blocks.push_back(b);
    }
  }
  if (root.has("analysis")) {
    const Node a = root.at("analysis");
    a.require_object({"ground_height", "flow_axis", "bin_width", "contact_radius"});
    if (a.has("ground_height") && !a.at("ground_height").value().is_null()) {
      s.analysis.ground_height = a.at("ground_height").number();
    }
    s.analysis.flow_axis = a.vec_or("flow_axis", s.analysis.flow_axis);
    s.analysis.bin_width = a.number_or("bin_width", s.analysis.bin_width);
    s.analysis.contact_radius = a.number_or("contact_radius", s.analysis.contact_radius);
  }
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("/: ") + e.what());
  }
  return s;
}

std::string dump_scenario(const Scenario& scenario) { return scenario_to_json(scenario).dump(2) + "\n"; }

Scenario parse_scenario(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    // Translate the byte offset into line:column.
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError("line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + e.what());
  }
  return scenario_from_json(doc);
}

Scenario load_scenario(const std::string& spec, const PresetOptions& options) {
  const std::string prefix = "preset:";
  if (spec.rfind(prefix, 0) == 0) return preset(spec.substr(prefix.size()), options);
  std::ifstream in(spec, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot read scenario file '" + spec + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_scenario(text.str());
}

}  // namespace mesop
