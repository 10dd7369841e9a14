#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "slicebench/common.hpp"
#include "slicebench/haar.hpp"

namespace slicebench {

struct SourceSpec {
  Point3 position;
  double amplitude = 1e5;
  double phase = 0.0;         // radians
  double polarization = 0.0;  // polarization angle, radians

  bool operator==(const SourceSpec&) const = default;
};

/// Rectangular opening centred at `center` in a plane of constant z.
struct Aperture {
  Point3 center;
  double width_x = 0.0;
  double width_y = 0.0;

  bool operator==(const Aperture&) const = default;

  Rect rect() const {
    return {center.x - 0.5 * width_x, center.x + 0.5 * width_x, center.y - 0.5 * width_y,
            center.y + 0.5 * width_y};
  }
};

struct DetectorPort {
  Aperture aperture;
  PatchIndex patch;

  bool operator==(const DetectorPort&) const = default;
};

/// allowed[j] lists the detectors the field leaving slit j can reach.
struct BarrierRule {
  std::vector<std::vector<int>> allowed;

  bool operator==(const BarrierRule&) const = default;

  bool reaches(int slit, int detector) const {
    for (int d : allowed.at(static_cast<std::size_t>(slit)))
      if (d == detector) return true;
    return false;
  }

  static BarrierRule one_to_one(int n) {
    BarrierRule b;
    for (int j = 0; j < n; ++j) b.allowed.push_back({j});
    return b;
  }
};

/// Geometry of an N-slit setup. Lengths are in wavelengths.
struct ScenarioConfig {
  std::vector<SourceSpec> sources;
  double slit_plane_z = 0.0;
  std::vector<Aperture> slits;
  double input_plane_z = 0.0;
  double output_plane_z = 0.0;
  std::vector<DetectorPort> detectors;
  BarrierRule barrier;

  bool operator==(const ScenarioConfig&) const = default;

  int size() const { return static_cast<int>(sources.size()); }

  /// Post-selected mode of port j on the input plane (same patch as the
  /// detector) and on the output plane.
  HaarBasisFn mode(int port) const { return patch_scaling(detectors.at(static_cast<std::size_t>(port)).patch); }

  void validate() const;
};

namespace detail {
inline bool nearly(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); }
}  // namespace detail

inline void ScenarioConfig::validate() const {
  const std::size_t n = sources.size();
  if (slits.size() != n) throw ConfigError("number of slits must equal number of sources");
  if (detectors.size() != n) throw ConfigError("number of detectors must equal number of sources");
  if (n < 2) throw ConfigError("scenario needs at least two sources");
  if (!std::isfinite(slit_plane_z) || !std::isfinite(input_plane_z) || !std::isfinite(output_plane_z))
    throw ConfigError("plane positions must be finite");

  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = sources[i];
    if (!s.position.finite()) throw ConfigError("source position must be finite");
    if (!(s.amplitude > 0.0) || !std::isfinite(s.amplitude))
      throw ConfigError("source amplitude must be positive");
    if (!std::isfinite(s.phase) || !std::isfinite(s.polarization))
      throw ConfigError("source phase and polarization must be finite");
  }

  for (const auto& s : sources) {
    if (!(s.position.z < input_plane_z && input_plane_z < slit_plane_z && slit_plane_z < output_plane_z))
      throw ConfigError(
          "plane ordering violated: need source z < input plane z < slit plane z < output plane z");
  }

  auto check_aperture = [](const Aperture& a) {
    if (!a.center.finite()) throw ConfigError("aperture center must be finite");
    if (!(a.width_x > 0.0) || !(a.width_y > 0.0) || !std::isfinite(a.width_x) ||
        !std::isfinite(a.width_y))
      throw ConfigError("aperture width must be positive");
  };
  for (const auto& a : slits) {
    check_aperture(a);
    if (!detail::nearly(a.center.z, slit_plane_z))
      throw ConfigError("all slits must lie on the slit plane");
  }
  for (const auto& d : detectors) {
    check_aperture(d.aperture);
    if (!detail::nearly(d.aperture.center.z, output_plane_z))
      throw ConfigError("all detectors must lie on the output plane");
    const double side = d.patch.side();
    if (!detail::nearly(d.aperture.width_x, side) || !detail::nearly(d.aperture.width_y, side))
      throw ConfigError("detector window must match its patch side length 2^-j0");
    if (!detail::nearly(d.aperture.center.x, d.patch.center_x()) ||
        !detail::nearly(d.aperture.center.y, d.patch.center_y()))
      throw ConfigError("detector window must coincide with its patch");
  }

  if (barrier.allowed.size() != n) throw ConfigError("barrier must list one entry per slit");
  for (const auto& row : barrier.allowed)
    for (int d : row)
      if (d < 0 || static_cast<std::size_t>(d) >= n)
        throw ConfigError("barrier references a detector index out of range");
}

// ---------------------------------------------------------------------------
// Canonical setups.

namespace canonical {
inline constexpr double source_spacing = 20.0;  // d
inline constexpr double distance = 800.0;       // L
inline constexpr double slit_width = 4.0;       // w
inline constexpr double amplitude = 1e5;
inline constexpr int j0 = -2;
}  // namespace canonical

namespace detail {
inline ScenarioConfig column_setup(const std::vector<std::pair<double, int>>& columns) {
  using namespace canonical;
  ScenarioConfig s;
  s.slit_plane_z = 0.0;
  s.input_plane_z = -0.9 * distance;
  s.output_plane_z = distance;
  for (auto [x, k] : columns) {
    s.sources.push_back({{x, 0.0, -distance}, amplitude, 0.0, 0.0});
    s.slits.push_back({{x, 0.0, 0.0}, slit_width, slit_width});
    s.detectors.push_back({{{x, 0.0, distance}, slit_width, slit_width}, {k, 0, j0}});
  }
  s.barrier = BarrierRule::one_to_one(static_cast<int>(columns.size()));
  return s;
}
}  // namespace detail

/// Two sources at (+-d/2, 0, -L), slits at z = 0, detectors at z = L,
/// input plane at -0.9 L; detector patches (k = 2, k' = 0) and (-3, 0).
inline ScenarioConfig canonical_double_slit() {
  const double h = canonical::source_spacing / 2;
  return detail::column_setup({{h, 2}, {-h, -3}});
}

/// Double slit plus a third column at x = -3d/2 with patch (-8, 0).
inline ScenarioConfig canonical_triple_slit() {
  const double h = canonical::source_spacing / 2;
  return detail::column_setup({{h, 2}, {-h, -3}, {-3 * h, -8}});
}

// ---------------------------------------------------------------------------
// JSON configuration format.

inline nlohmann::json point_to_json(const Point3& p) { return nlohmann::json::array({p.x, p.y, p.z}); }

inline nlohmann::json aperture_to_json(const Aperture& a) {
  return {{"center", point_to_json(a.center)}, {"width_x", a.width_x}, {"width_y", a.width_y}};
}

inline nlohmann::json to_json(const ScenarioConfig& s) {
  nlohmann::json j;
  j["sources"] = nlohmann::json::array();
  for (const auto& src : s.sources)
    j["sources"].push_back({{"position", point_to_json(src.position)},
                            {"amplitude", src.amplitude},
                            {"phase", src.phase},
                            {"polarization", src.polarization}});
  j["slits"] = nlohmann::json::array();
  for (const auto& a : s.slits) j["slits"].push_back(aperture_to_json(a));
  j["detectors"] = nlohmann::json::array();
  for (const auto& d : s.detectors) {
    auto e = aperture_to_json(d.aperture);
    e["patch"] = {{"k", d.patch.k}, {"k_prime", d.patch.k_prime}, {"j0", d.patch.j0}};
    j["detectors"].push_back(e);
  }
  j["planes"] = {{"input_z", s.input_plane_z}, {"slit_z", s.slit_plane_z}, {"output_z", s.output_plane_z}};
  j["barrier"] = s.barrier.allowed;
  return j;
}

inline std::string serialize_scenario(const ScenarioConfig& s) { return to_json(s).dump(2) + "\n"; }

namespace detail {

inline const nlohmann::json& field(const nlohmann::json& j, const char* key, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError(path + "." + key + ": missing field");
  return *it;
}

inline double number(const nlohmann::json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path + ": expected a number");
  return j.get<double>();
}

inline int integer(const nlohmann::json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigError(path + ": expected an integer");
  return j.get<int>();
}

inline double number_or(const nlohmann::json& j, const char* key, double fallback, const std::string& path) {
  auto it = j.find(key);
  return it == j.end() ? fallback : number(*it, path + "." + key);
}

inline Point3 point(const nlohmann::json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(path + ": expected [x, y, z]");
  return {number(j[0], path + "[0]"), number(j[1], path + "[1]"), number(j[2], path + "[2]")};
}

inline Aperture aperture(const nlohmann::json& j, const std::string& path) {
  return {point(field(j, "center", path), path + ".center"),
          number(field(j, "width_x", path), path + ".width_x"),
          number(field(j, "width_y", path), path + ".width_y")};
}

inline const nlohmann::json& array(const nlohmann::json& j, const char* key, const std::string& path) {
  const auto& a = field(j, key, path);
  if (!a.is_array()) throw ConfigError(path + "." + key + ": expected an array");
  return a;
}

inline std::size_t line_of(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < text.size() && i < byte; ++i)
    if (text[i] == '\n') ++line;
  return line;
}

}  // namespace detail

/// Parses and validates a scenario. Throws ConfigError naming the line
/// (syntax errors), the offending field, or the violated invariant.
inline ScenarioConfig load_scenario(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("parse error at line " + std::to_string(detail::line_of(text, e.byte)) + ": " +
                      e.what());
  }
  ScenarioConfig s;
  const std::string root = "config";
  const auto& sources = detail::array(j, "sources", root);
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const std::string p = "sources[" + std::to_string(i) + "]";
    SourceSpec src;
    src.position = detail::point(detail::field(sources[i], "position", p), p + ".position");
    src.amplitude = detail::number(detail::field(sources[i], "amplitude", p), p + ".amplitude");
    src.phase = detail::number_or(sources[i], "phase", 0.0, p);
    src.polarization = detail::number_or(sources[i], "polarization", 0.0, p);
    s.sources.push_back(src);
  }
  const auto& slits = detail::array(j, "slits", root);
  for (std::size_t i = 0; i < slits.size(); ++i)
    s.slits.push_back(detail::aperture(slits[i], "slits[" + std::to_string(i) + "]"));
  const auto& detectors = detail::array(j, "detectors", root);
  for (std::size_t i = 0; i < detectors.size(); ++i) {
    const std::string p = "detectors[" + std::to_string(i) + "]";
    DetectorPort d;
    d.aperture = detail::aperture(detectors[i], p);
    const auto& patch = detail::field(detectors[i], "patch", p);
    d.patch.k = detail::integer(detail::field(patch, "k", p + ".patch"), p + ".patch.k");
    d.patch.k_prime = detail::integer(detail::field(patch, "k_prime", p + ".patch"), p + ".patch.k_prime");
    d.patch.j0 = detail::integer(detail::field(patch, "j0", p + ".patch"), p + ".patch.j0");
    s.detectors.push_back(d);
  }
  const auto& planes = detail::field(j, "planes", root);
  s.input_plane_z = detail::number(detail::field(planes, "input_z", "planes"), "planes.input_z");
  s.slit_plane_z = detail::number(detail::field(planes, "slit_z", "planes"), "planes.slit_z");
  s.output_plane_z = detail::number(detail::field(planes, "output_z", "planes"), "planes.output_z");
  const auto& barrier = detail::array(j, "barrier", root);
  for (std::size_t i = 0; i < barrier.size(); ++i) {
    const std::string p = "barrier[" + std::to_string(i) + "]";
    if (!barrier[i].is_array()) throw ConfigError(p + ": expected an array of detector indices");
    std::vector<int> row;
    for (std::size_t k = 0; k < barrier[i].size(); ++k)
      row.push_back(detail::integer(barrier[i][k], p + "[" + std::to_string(k) + "]"));
    s.barrier.allowed.push_back(row);
  }
  s.validate();
  return s;
}

/// 64-bit FNV-1a of the canonical JSON text; used for artifact provenance.
inline std::uint64_t scenario_hash(const ScenarioConfig& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : to_json(s).dump()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace slicebench
