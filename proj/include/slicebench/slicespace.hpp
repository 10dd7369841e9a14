#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "slicebench/common.hpp"
#include "slicebench/haar.hpp"
#include "slicebench/io.hpp"
#include "slicebench/parallel.hpp"
#include "slicebench/propagator.hpp"
#include "slicebench/scenario.hpp"

namespace slicebench {

/// Post-selected projections of one source's field on one plane; entry j is
/// <e_j(z), E_j^(i)(z)>.
struct SliceVector {
  double z = 0.0;
  int source = 0;
  CVector entries;
};

namespace detail {
inline void check_source(const ScenarioConfig& s, int source) {
  if (source < 0 || source >= s.size()) throw PreconditionError("source index out of range");
}
}  // namespace detail

/// Un-diffracted field of source i at the input plane.
inline ScalarField input_field(const ScenarioConfig& s, int source) {
  detail::check_source(s, source);
  const SourceSpec src = s.sources[static_cast<std::size_t>(source)];
  const double z = s.input_plane_z;
  return [src, z](double x, double y) { return source_field(src, {x, y, z}); };
}

/// Field of source i arriving at detector `port` on the output plane: the
/// sum over the slits the barrier lets through to that detector.
inline ScalarField output_field(const ScenarioConfig& s, int source, int port) {
  detail::check_source(s, source);
  const SourceSpec src = s.sources[static_cast<std::size_t>(source)];
  std::vector<Aperture> slits;
  for (int l = 0; l < s.size(); ++l)
    if (s.barrier.reaches(l, port)) slits.push_back(s.slits[static_cast<std::size_t>(l)]);
  const double z = s.output_plane_z;
  return [src, slits, z](double x, double y) {
    Complex sum{};
    for (const auto& a : slits) sum += diffract_point_source(a, src, {x, y, z});
    return sum;
  };
}

inline SliceVector input_slice_vector(const ScenarioConfig& s, int source, const QuadratureSpec& quad = {}) {
  SliceVector v{s.input_plane_z, source, CVector(s.size())};
  const ScalarField field = input_field(s, source);
  std::vector<Complex> entries(static_cast<std::size_t>(s.size()));
  parallel_for(entries.size(), [&](std::size_t j) { entries[j] = project(field, s.mode(static_cast<int>(j)), quad); });
  for (std::size_t j = 0; j < entries.size(); ++j) v.entries[static_cast<Eigen::Index>(j)] = entries[j];
  return v;
}

inline SliceVector output_slice_vector(const ScenarioConfig& s, int source, const QuadratureSpec& quad = {}) {
  SliceVector v{s.output_plane_z, source, CVector(s.size())};
  std::vector<Complex> entries(static_cast<std::size_t>(s.size()));
  parallel_for(entries.size(), [&](std::size_t j) {
    entries[j] = project(output_field(s, source, static_cast<int>(j)), s.mode(static_cast<int>(j)), quad);
  });
  for (std::size_t j = 0; j < entries.size(); ++j) v.entries[static_cast<Eigen::Index>(j)] = entries[j];
  return v;
}

struct PortPower {
  int port = 0;
  double intercepted = 0.0;  // integral of |E|^2 over the detector window
  double mode_power = 0.0;   // |<e, E>|^2
  double ratio = 0.0;
};

/// Mode-power accounting for one source. `scale` is the normalization that
/// maps the computed powers onto the tabulated ones; with the 10^5 source
/// amplitude applied directly it is 1.
struct PowerReport {
  int source = 0;
  double scale = 1.0;
  std::vector<PortPower> ports;
};

inline constexpr double table_power_scale = 1.0;

inline PowerReport power_report(const ScenarioConfig& s, int source, const QuadratureSpec& quad = {}) {
  detail::check_source(s, source);
  PowerReport r;
  r.source = source;
  r.scale = table_power_scale;
  r.ports.resize(static_cast<std::size_t>(s.size()));
  parallel_for(r.ports.size(), [&](std::size_t j) {
    const int port = static_cast<int>(j);
    const ScalarField field = output_field(s, source, port);
    const Rect window = s.detectors[j].aperture.rect();
    auto intensity = [&](double x, double y) { return std::norm(field(x, y)); };
    PortPower p;
    p.port = port;
    p.intercepted = r.scale * integrate_rect(intensity, window, quad).value;
    p.mode_power = r.scale * std::norm(project(field, s.mode(port), quad));
    p.ratio = p.mode_power / p.intercepted;
    r.ports[j] = p;
  });
  return r;
}

/// CSV with columns port, intercepted, mode_power, ratio (ports 1-based).
inline std::string power_report_csv(const std::vector<PowerReport>& reports, bool with_source_column = false) {
  std::string out = with_source_column ? "source,port,intercepted,mode_power,ratio\n"
                                       : "port,intercepted,mode_power,ratio\n";
  for (const auto& r : reports)
    for (const auto& p : r.ports) {
      if (with_source_column) out += std::to_string(r.source + 1) + ",";
      out += std::to_string(p.port + 1) + "," + format_real(p.intercepted) + "," + format_real(p.mode_power) + "," +
             format_real(p.ratio) + "\n";
    }
  return out;
}

}  // namespace slicebench
