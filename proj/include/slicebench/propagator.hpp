#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "slicebench/common.hpp"
#include "slicebench/haar.hpp"
#include "slicebench/parallel.hpp"
#include "slicebench/quadrature.hpp"
#include "slicebench/scenario.hpp"

namespace slicebench {

/// Free-space Green's function of the Helmholtz operator,
/// G(r, r') = -exp(ik|r - r'|) / (4 pi |r - r'|).
inline Complex green(const Point3& r, const Point3& r_src) {
  const double dist = (r - r_src).norm();
  if (!(dist > 0.0)) throw PreconditionError("green: coincident points");
  return -std::exp(I * (wavenumber * dist)) / (four_pi * dist);
}

/// Gradient of G(r, r') with respect to r' (the primed, integration point).
inline std::array<Complex, 3> green_gradient_primed(const Point3& r, const Point3& r_prime) {
  const Point3 d = r_prime - r;
  const double dist = d.norm();
  if (!(dist > 0.0)) throw PreconditionError("green: coincident points");
  const Complex g = -std::exp(I * (wavenumber * dist)) / (four_pi * dist);
  const Complex radial = g * (I * wavenumber - 1.0 / dist) / dist;
  return {radial * d.x, radial * d.y, radial * d.z};
}

/// Field of a point source before any aperture: amplitude e^{i phase} G.
inline Complex source_field(const SourceSpec& src, const Point3& r) {
  return src.amplitude * std::exp(I * src.phase) * green(r, src.position);
}

/// Complex amplitude impinging on an aperture plane. `direction` is the
/// dominant propagation direction used for the incident obliquity factor;
/// `normal_derivative`, when present, supplies dE/dz for the exact
/// Kirchhoff integral (otherwise dE/dz ~ ik E direction.z).
struct IncidentField {
  std::function<Complex(const Point3&)> amplitude;
  Point3 direction{0.0, 0.0, 1.0};
  std::function<Complex(const Point3&)> normal_derivative;

  void validate() const {
    if (!amplitude) throw PreconditionError("incident field has no amplitude function");
    if (!(direction.z > 0.0)) throw PreconditionError("incident direction must have positive z component");
  }
};

/// Incident field of a point source at an aperture, with exact derivative.
inline IncidentField incident_from_source(const SourceSpec& src, const Aperture& aperture) {
  IncidentField f;
  f.amplitude = [src](const Point3& p) { return source_field(src, p); };
  f.normal_derivative = [src](const Point3& p) {
    // d/dz' of G(r', r_src) = d/dz' G(r_src, r')
    return src.amplitude * std::exp(I * src.phase) * green_gradient_primed(src.position, p)[2];
  };
  f.direction = (aperture.center - src.position).normalized();
  return f;
}

namespace detail {
inline void require_beyond(const Aperture& aperture, const Point3& r) {
  if (!(r.z > aperture.center.z))
    throw PreconditionError("observation point must lie beyond the aperture plane");
}
}  // namespace detail

/// Direct numerical Kirchhoff surface integral over the aperture,
///   E(r) = int d^2r' z.(E(r') grad' G(r, r') - G(r, r') grad' E(r')),
/// with no far-field or small-aperture simplification of the kernel.
inline Complex kirchhoff_integral(const Aperture& aperture, const IncidentField& incident,
                                  const Point3& r, const QuadratureSpec& quad = {}) {
  incident.validate();
  detail::require_beyond(aperture, r);
  const double z = aperture.center.z;
  auto integrand = [&](double x, double y) {
    const Point3 p{x, y, z};
    const Complex e = incident.amplitude(p);
    const Complex de = incident.normal_derivative
                           ? incident.normal_derivative(p)
                           : I * wavenumber * incident.direction.z * e;
    return e * green_gradient_primed(r, p)[2] - green(r, p) * de;
  };
  return integrate_rect(integrand, aperture.rect(), quad).value;
}

inline double sinc(double u) { return u == 0.0 ? 1.0 : std::sin(u) / u; }

/// Closed-form far-field, small-slit diffraction of a point source through
/// a rectangular slit:
///   -ik wx wy (cos_out + cos_in) G(r, Rs) G(Rs, rf) sinc_x sinc_y,
/// scaled by the source amplitude and phase.
inline Complex diffract_point_source(const Aperture& aperture, const SourceSpec& src, const Point3& r) {
  const Point3& rs = aperture.center;
  const Point3 out = r - rs;
  const Point3 in = rs - src.position;
  const double out_len = out.norm();
  const double in_len = in.norm();
  const Point3 dir_diff = out / out_len - in / in_len;
  const double obliquity = out.z / out_len + in.z / in_len;
  const double k = wavenumber;
  const Complex value = -I * k * aperture.width_x * aperture.width_y * obliquity * green(r, rs) *
                        green(rs, src.position) * sinc(0.5 * k * aperture.width_x * dir_diff.x) *
                        sinc(0.5 * k * aperture.width_y * dir_diff.y);
  return src.amplitude * std::exp(I * src.phase) * value;
}

/// Warnings when the closed form is used outside its regime.
inline std::vector<std::string> fraunhofer_diagnostics(const Aperture& aperture, const SourceSpec& src,
                                                       const Point3& r) {
  std::vector<std::string> warnings;
  const double in_len = (aperture.center - src.position).norm();
  const double out_len = (r - aperture.center).norm();
  const double half_diag = 0.5 * std::hypot(aperture.width_x, aperture.width_y);
  if (wavenumber * std::min(in_len, out_len) < 100.0)
    warnings.push_back("far-field condition k*distance >> 1 is weak");
  if (half_diag > 0.05 * std::min(in_len, out_len))
    warnings.push_back("small-slit condition w << distance is weak");
  if (!(r.z > aperture.center.z) || !(src.position.z < aperture.center.z))
    warnings.push_back("source and observation point are not on opposite sides of the aperture");
  return warnings;
}

/// Far-field diffraction of an arbitrary incident amplitude,
///   -ik int d^2r' E_in(r') G(r, r') (cos_out + cos_in),
/// with cos_in taken from the incident direction.
inline Complex diffract_general(const Aperture& aperture, const IncidentField& incident, const Point3& r,
                                const QuadratureSpec& quad = {}) {
  incident.validate();
  detail::require_beyond(aperture, r);
  const double z = aperture.center.z;
  const double cos_in = incident.direction.z;
  auto integrand = [&](double x, double y) {
    const Point3 p{x, y, z};
    const Point3 d = r - p;
    const double dist = d.norm();
    return incident.amplitude(p) * green(r, p) * (d.z / dist + cos_in);
  };
  return -I * wavenumber * integrate_rect(integrand, aperture.rect(), quad).value;
}

/// Thin phase plate: the field is multiplied by e^{i alpha}.
inline Complex apply_phase_shift(Complex value, double alpha) { return value * std::exp(I * alpha); }

inline CVector apply_phase_shift(const CVector& values, double alpha) { return values * std::exp(I * alpha); }

/// Extra phase of a plate of refractive index n and thickness t (in
/// wavelengths): 2 pi (n - 1) t.
inline double phase_plate_alpha(double refractive_index, double thickness) {
  return two_pi * (refractive_index - 1.0) * thickness;
}

// ---------------------------------------------------------------------------
// Node-based propagation: fields sampled on quadrature nodes of an aperture
// are pushed to arbitrary target points with the far-field kernel. Used for
// cascades, where each stage's incident field is itself a quadrature sum.

struct SampledAperture {
  std::vector<Point3> nodes;
  std::vector<double> weights;
  std::vector<Complex> values;
};

inline SampledAperture sample_aperture(const Rect& rect, double z, int points, int cells = 1) {
  const TensorNodes t = tensor_nodes(rect, points, cells);
  SampledAperture s;
  s.nodes.reserve(t.w.size());
  for (std::size_t i = 0; i < t.w.size(); ++i) s.nodes.push_back({t.x[i], t.y[i], z});
  s.weights = t.w;
  s.values.assign(t.w.size(), Complex{});
  return s;
}

/// -ik sum_n w_n E_n G(r, r_n) (cos_out + cos_in) for every target.
inline std::vector<Complex> propagate_samples(const SampledAperture& from, double cos_in,
                                              const std::vector<Point3>& targets) {
  std::vector<Complex> out(targets.size());
  parallel_for(targets.size(), [&](std::size_t t) {
    const Point3& r = targets[t];
    Complex acc{};
    for (std::size_t n = 0; n < from.nodes.size(); ++n) {
      const Point3 d = r - from.nodes[n];
      const double dist = d.norm();
      const Complex g = -std::exp(I * (wavenumber * dist)) / (four_pi * dist);
      acc += from.weights[n] * from.values[n] * g * (d.z / dist + cos_in);
    }
    out[t] = -I * wavenumber * acc;
  });
  return out;
}

/// Matrix of the free slice-to-slice propagator between two finite Haar
/// bases: P_ij = int int g_i(r; z_to) K(r, r') g_j(r'; z_from) with the
/// far-field kernel K = -ik G(r, r') (cos_out + cos_in). All functions of a
/// truncated patch basis are constant on its finest cells, so both planes are
/// discretized on those cells with quad.points Gauss-Legendre points per
/// cell axis; the point count doubles until the matrix changes by less than
/// rel_tolerance (max-norm relative).
inline CMatrix free_propagator_matrix(double z_from, double z_to, const std::vector<HaarBasisFn>& basis_from,
                                      const std::vector<HaarBasisFn>& basis_to, const QuadratureSpec& quad,
                                      const Point3& incident_direction = {0.0, 0.0, 1.0}) {
  if (!(z_to > z_from)) throw PreconditionError("free propagator needs z_to > z_from");
  if (basis_from.empty() || basis_to.empty()) throw PreconditionError("free propagator needs nonempty bases");
  const double cos_in = incident_direction.normalized().z;

  auto finest = [](const std::vector<HaarBasisFn>& basis) {
    int level = basis.front().patch.j0 - 1;
    for (const auto& g : basis) {
      if (g.x.kind == HaarKind::wavelet) level = std::max(level, g.x.level);
      if (g.y.kind == HaarKind::wavelet) level = std::max(level, g.y.level);
    }
    return level;
  };
  auto plane_nodes = [](const std::vector<HaarBasisFn>& basis, int level, double z, int points) {
    // union of the patches touched by the basis, each split in fine cells
    std::vector<PatchIndex> patches;
    for (const auto& g : basis)
      if (std::find(patches.begin(), patches.end(), g.patch) == patches.end()) patches.push_back(g.patch);
    SampledAperture all;
    for (const auto& p : patches) {
      const int cells = 1 << std::max(0, level - p.j0 + 1);
      auto s = sample_aperture(p.rect(), z, points, cells);
      all.nodes.insert(all.nodes.end(), s.nodes.begin(), s.nodes.end());
      all.weights.insert(all.weights.end(), s.weights.begin(), s.weights.end());
    }
    return all;
  };
  auto evaluate = [&](int points) {
    const auto from = plane_nodes(basis_from, finest(basis_from), z_from, points);
    const auto to = plane_nodes(basis_to, finest(basis_to), z_to, points);
    // weighted basis values on the source nodes
    CMatrix gj(static_cast<Eigen::Index>(from.nodes.size()), static_cast<Eigen::Index>(basis_from.size()));
    for (std::size_t n = 0; n < from.nodes.size(); ++n)
      for (std::size_t j = 0; j < basis_from.size(); ++j)
        gj(n, j) = from.weights[n] * basis_from[j](from.nodes[n].x, from.nodes[n].y);
    CMatrix result(static_cast<Eigen::Index>(basis_to.size()), static_cast<Eigen::Index>(basis_from.size()));
    result.setZero();
    // kernel applied row by row on the target nodes
    std::vector<CVector> rows(to.nodes.size());
    parallel_for(to.nodes.size(), [&](std::size_t t) {
      CVector krow(static_cast<Eigen::Index>(from.nodes.size()));
      for (std::size_t n = 0; n < from.nodes.size(); ++n) {
        const Point3 d = to.nodes[t] - from.nodes[n];
        const double dist = d.norm();
        const Complex g = -std::exp(I * (wavenumber * dist)) / (four_pi * dist);
        krow[static_cast<Eigen::Index>(n)] = -I * wavenumber * g * (d.z / dist + cos_in);
      }
      rows[t] = (krow.transpose() * gj).transpose();
    });
    for (std::size_t t = 0; t < to.nodes.size(); ++t)
      for (std::size_t i = 0; i < basis_to.size(); ++i) {
        const double gi = to.weights[t] * basis_to[i](to.nodes[t].x, to.nodes[t].y);
        if (gi != 0.0) result.row(static_cast<Eigen::Index>(i)) += gi * rows[t].transpose();
      }
    return result;
  };

  CMatrix previous = evaluate(quad.points);
  for (int level = 1; level <= quad.max_refinements; ++level) {
    CMatrix current = evaluate(quad.points << level);
    const double scale = current.cwiseAbs().maxCoeff();
    if ((current - previous).cwiseAbs().maxCoeff() <= quad.rel_tolerance * scale) return current;
    previous = std::move(current);
  }
  if (quad.max_refinements == 0) return previous;
  throw QuadratureError("free propagator matrix did not converge");
}

}  // namespace slicebench
