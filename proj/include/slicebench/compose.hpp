#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "slicebench/common.hpp"
#include "slicebench/correlation.hpp"
#include "slicebench/io.hpp"
#include "slicebench/parallel.hpp"
#include "slicebench/propagator.hpp"
#include "slicebench/scenario.hpp"
#include "slicebench/slicespace.hpp"
#include "slicebench/transfer.hpp"

namespace slicebench {

/// Two double-slit modules in series. Stage 1 is an ordinary scenario whose
/// detector windows D_j double as slits; behind them sit the stage-2 slits
/// A'_l (plane z3) and the final detectors D'_m (plane z4). Every D_j
/// illuminates every A'_l; `stage2_barrier` says which A'_l reach which D'_m.
struct CascadeConfig {
  ScenarioConfig stage1;
  std::vector<Aperture> stage2_slits;
  std::vector<DetectorPort> stage2_detectors;
  BarrierRule stage2_barrier;
  int shifter_port = 1;  // 0-based index of the D port carrying the phase plate
  double alpha = 0.0;
  std::vector<Complex> drive{1.0, 1.0};  // per stage-1 source multiplier
  QuadratureSpec quad{16, 3, 1e-6};      // nodes per aperture axis

  double z3() const { return stage2_slits.empty() ? 0.0 : stage2_slits.front().center.z; }
  double z4() const { return stage2_detectors.empty() ? 0.0 : stage2_detectors.front().aperture.center.z; }

  void validate() const {
    stage1.validate();
    quad.validate();
    const auto n = stage1.detectors.size();
    if (stage2_slits.size() != n || stage2_detectors.size() != n)
      throw ConfigError("stage 2 needs one slit and one detector per stage-1 port");
    if (drive.size() != stage1.sources.size()) throw ConfigError("drive needs one entry per stage-1 source");
    if (shifter_port < 0 || static_cast<std::size_t>(shifter_port) >= n)
      throw ConfigError("phase shifter port out of range");
    const double z2 = stage1.output_plane_z;
    if (!(z2 < z3() && z3() < z4())) throw ConfigError("plane ordering violated: need z2 < z3 < z4");
    for (std::size_t l = 0; l < n; ++l) {
      const Aperture& a = stage2_slits[l];
      const Aperture& d = stage1.detectors[l].aperture;
      if (!(a.width_x > 0.0) || !(a.width_y > 0.0)) throw ConfigError("aperture width must be positive");
      if (!detail::nearly(a.center.z, z3())) throw ConfigError("stage-2 slits must share one plane");
      if (!detail::nearly(a.center.x, d.center.x) || !detail::nearly(a.center.y, d.center.y))
        throw ConfigError("stage-2 slit " + std::to_string(l + 1) + " is not aligned with stage-1 port " +
                          std::to_string(l + 1));
      const DetectorPort& p = stage2_detectors[l];
      if (!detail::nearly(p.aperture.center.z, z4())) throw ConfigError("stage-2 detectors must share one plane");
      if (!(p.aperture.width_x > 0.0) || !(p.aperture.width_y > 0.0))
        throw ConfigError("aperture width must be positive");
    }
    for (const auto& row : stage2_barrier.allowed)
      for (int l : row)
        if (l < 0 || static_cast<std::size_t>(l) >= n) throw ConfigError("stage-2 barrier index out of range");
    if (stage2_barrier.allowed.size() != n) throw ConfigError("stage-2 barrier needs one row per detector");
  }
};

/// Second module placed behind the first with the same spacings:
/// z3 = z2 + L, z4 = z2 + 2L, where L is the slit-to-detector distance.
inline CascadeConfig build_mzi(const ScenarioConfig& base, double alpha) {
  base.validate();
  if (base.size() != 2) throw PreconditionError("build_mzi needs a double slit");
  const double spacing = base.output_plane_z - base.slit_plane_z;
  CascadeConfig c;
  c.stage1 = base;
  c.alpha = alpha;
  for (int l = 0; l < base.size(); ++l) {
    const auto& d = base.detectors[static_cast<std::size_t>(l)];
    Aperture slit = base.slits[static_cast<std::size_t>(l)];
    slit.center = {d.aperture.center.x, d.aperture.center.y, base.output_plane_z + spacing};
    c.stage2_slits.push_back(slit);
    DetectorPort out = d;
    out.aperture.center.z = base.output_plane_z + 2.0 * spacing;
    c.stage2_detectors.push_back(out);
  }
  c.stage2_barrier = BarrierRule::one_to_one(base.size());
  return c;
}

/// Channel amplitudes c[i][j][m]: post-selected projection at D'_m of the
/// field that leaves source i and passes through D_j. The D-port fields are
/// sampled on Gauss-Legendre nodes and re-diffracted node by node.
using ChannelTensor = std::vector<std::vector<std::vector<Complex>>>;

namespace detail {

inline ChannelTensor cascade_channels_at(const CascadeConfig& c, int points) {
  const auto& s1 = c.stage1;
  const auto nsrc = s1.sources.size();
  const auto nport = s1.detectors.size();
  ChannelTensor ch(nsrc, std::vector<std::vector<Complex>>(nport, std::vector<Complex>(nport)));

  std::vector<HaarBasisFn> modes;
  for (const auto& d : c.stage2_detectors) modes.push_back(patch_scaling(d.patch));

  parallel_for(nsrc * nport, [&](std::size_t task) {
    const std::size_t i = task / nport, j = task % nport;
    const SourceSpec& src = s1.sources[i];
    const Aperture& dport = s1.detectors[j].aperture;
    SampledAperture at_d = sample_aperture(dport.rect(), dport.center.z, points);
    for (std::size_t n = 0; n < at_d.nodes.size(); ++n) {
      Complex sum{};
      for (std::size_t l = 0; l < s1.slits.size(); ++l)
        if (s1.barrier.reaches(static_cast<int>(l), static_cast<int>(j)))
          sum += diffract_point_source(s1.slits[l], src, at_d.nodes[n]);
      at_d.values[n] = sum;
    }
    // the stage-1 leg into D_j is straight down its own column
    Point3 previous = s1.slits[j].center;
    const double cos_d = (dport.center - previous).normalized().z;

    for (std::size_t l = 0; l < nport; ++l) {
      const Aperture& a = c.stage2_slits[l];
      SampledAperture at_a = sample_aperture(a.rect(), a.center.z, points);
      at_a.values = propagate_samples(at_d, cos_d, at_a.nodes);
      const double cos_a = (a.center - dport.center).normalized().z;
      for (std::size_t m = 0; m < nport; ++m) {
        if (!c.stage2_barrier.reaches(static_cast<int>(l), static_cast<int>(m))) continue;
        const Aperture& out = c.stage2_detectors[m].aperture;
        SampledAperture at_out = sample_aperture(out.rect(), out.center.z, points);
        const auto values = propagate_samples(at_a, cos_a, at_out.nodes);
        Complex proj{};
        for (std::size_t q = 0; q < values.size(); ++q)
          proj += at_out.weights[q] * modes[m](at_out.nodes[q].x, at_out.nodes[q].y) * values[q];
        ch[i][j][m] += proj;
      }
    }
  });
  return ch;
}

inline double channel_change(const ChannelTensor& a, const ChannelTensor& b) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j)
      for (std::size_t m = 0; m < a[i][j].size(); ++m) {
        diff = std::max(diff, std::abs(a[i][j][m] - b[i][j][m]));
        scale = std::max(scale, std::abs(b[i][j][m]));
      }
  return scale > 0.0 ? diff / scale : diff;
}

}  // namespace detail

/// Node count doubles from quad.points until the tensor changes by less than
/// quad.rel_tolerance relative to its largest entry.
inline ChannelTensor cascade_channels(const CascadeConfig& c) {
  c.validate();
  ChannelTensor previous = detail::cascade_channels_at(c, c.quad.points);
  if (c.quad.max_refinements == 0) return previous;
  for (int level = 1; level <= c.quad.max_refinements; ++level) {
    ChannelTensor current = detail::cascade_channels_at(c, c.quad.points << level);
    if (detail::channel_change(current, previous) <= c.quad.rel_tolerance) return current;
    previous = std::move(current);
  }
  throw QuadratureError("cascade propagation did not converge");
}

/// Output amplitude at D'_m for a given drive and phase-shifter setting.
inline Complex cascade_amplitude(const ChannelTensor& ch, const std::vector<Complex>& drive, int shifter_port,
                                 double alpha, std::size_t m) {
  Complex total{};
  for (std::size_t i = 0; i < ch.size(); ++i)
    for (std::size_t j = 0; j < ch[i].size(); ++j) {
      const Complex via = static_cast<int>(j) == shifter_port ? apply_phase_shift(ch[i][j][m], alpha) : ch[i][j][m];
      total += drive[i] * via;
    }
  return total;
}

inline std::vector<double> mzi_output_intensities(const CascadeConfig& c, const ChannelTensor& ch) {
  std::vector<double> out(c.stage2_detectors.size());
  for (std::size_t m = 0; m < out.size(); ++m)
    out[m] = std::norm(cascade_amplitude(ch, c.drive, c.shifter_port, c.alpha, m));
  return out;
}

inline std::vector<double> mzi_output_intensities(const CascadeConfig& c) {
  return mzi_output_intensities(c, cascade_channels(c));
}

/// I = offset (1 + sign * visibility * sin(alpha - delta)), with sign
/// chosen so that |delta| <= pi/2.
struct FringeFit {
  double offset = 0.0;
  double amplitude = 0.0;
  double delta = 0.0;
  int sign = 1;
  double visibility = 0.0;  // amplitude / offset = (I_max - I_min)/(I_max + I_min)
  double residual = 0.0;
};

inline FringeFit fit_fringe(const std::vector<double>& alphas, const std::vector<double>& values) {
  if (alphas.size() != values.size() || alphas.size() < 3) throw PreconditionError("fringe fit needs at least three points");
  const auto n = static_cast<Eigen::Index>(alphas.size());
  Eigen::MatrixXd design(n, 3);
  Eigen::VectorXd rhs(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const double a = alphas[static_cast<std::size_t>(r)];
    design(r, 0) = 1.0;
    design(r, 1) = std::sin(a);
    design(r, 2) = std::cos(a);
    rhs[r] = values[static_cast<std::size_t>(r)];
  }
  const auto qr = design.colPivHouseholderQr();
  if (qr.rank() < 3) throw NumericError("fringe fit is rank deficient: alpha grid too narrow");
  const Eigen::VectorXd coef = qr.solve(rhs);
  FringeFit f;
  f.offset = coef[0];
  f.amplitude = std::hypot(coef[1], coef[2]);
  if (!(f.offset > 0.0) || !(f.amplitude > 1e-12 * f.offset)) throw NumericError("fringe fit failed: flat curve");
  // coef1 sin a + coef2 cos a = amplitude sin(a + psi)
  double psi = std::atan2(coef[2], coef[1]);
  if (std::abs(psi) > 0.5 * pi) {
    f.sign = -1;
    psi = psi > 0.0 ? psi - pi : psi + pi;
  }
  f.delta = -psi;
  f.visibility = f.amplitude / f.offset;
  f.residual = std::sqrt((design * coef - rhs).squaredNorm() / static_cast<double>(n));
  return f;
}

struct FringeCurve {
  std::vector<double> alphas;
  std::vector<double> i1;
  std::vector<double> i2;
  FringeFit fit1;
  FringeFit fit2;

  /// The smaller of the two port visibilities.
  double visibility() const { return std::min(fit1.visibility, fit2.visibility); }
};

inline FringeCurve mzi_scan(const CascadeConfig& c, const std::vector<double>& alphas) {
  if (alphas.empty()) throw PreconditionError("alpha grid is empty");
  if (c.stage2_detectors.size() != 2) throw PreconditionError("mzi_scan needs two output ports");
  const ChannelTensor ch = cascade_channels(c);
  FringeCurve f;
  f.alphas = alphas;
  f.i1.resize(alphas.size());
  f.i2.resize(alphas.size());
  parallel_for(alphas.size(), [&](std::size_t k) {
    f.i1[k] = std::norm(cascade_amplitude(ch, c.drive, c.shifter_port, alphas[k], 0));
    f.i2[k] = std::norm(cascade_amplitude(ch, c.drive, c.shifter_port, alphas[k], 1));
  });
  f.fit1 = fit_fringe(f.alphas, f.i1);
  f.fit2 = fit_fringe(f.alphas, f.i2);
  return f;
}

/// Source-by-source characterization: inputs at the stage-1 input plane,
/// outputs projected at D'.
inline TransferResult characterize_mzi(const CascadeConfig& c, const QuadratureSpec& slice_quad = {}) {
  if (c.alpha != 0.0) throw PreconditionError("characterize_mzi needs alpha = 0");
  const ChannelTensor ch = cascade_channels(c);
  const int n = c.stage1.size();
  CMatrix x(n, n), y(n, n);
  for (int i = 0; i < n; ++i) {
    x.col(i) = input_slice_vector(c.stage1, i, slice_quad).entries;
    std::vector<Complex> only(static_cast<std::size_t>(n), Complex{});
    only[static_cast<std::size_t>(i)] = 1.0;
    for (int m = 0; m < n; ++m)
      y(m, i) = cascade_amplitude(ch, only, c.shifter_port, 0.0, static_cast<std::size_t>(m));
  }
  return transfer_from_slices(x, y);
}

inline std::string fringe_csv(const FringeCurve& f, const std::string& header_comment = {}) {
  std::string out = header_comment + "alpha,I1,I2\n";
  for (std::size_t k = 0; k < f.alphas.size(); ++k)
    out += format_real(f.alphas[k]) + "," + format_real(f.i1[k]) + "," + format_real(f.i2[k]) + "\n";
  return out;
}

inline nlohmann::json fringe_fit_to_json(const FringeFit& f) {
  return {{"A", round15(f.offset)},
          {"amplitude", round15(f.amplitude)},
          {"sign", f.sign},
          {"delta", round15(f.delta)},
          {"V", round15(f.visibility)},
          {"residual", round15(f.residual)}};
}

inline nlohmann::json fringe_to_json(const FringeCurve& f) {
  return {{"port1", fringe_fit_to_json(f.fit1)},
          {"port2", fringe_fit_to_json(f.fit2)},
          {"visibility", round15(f.visibility())},
          {"points", f.alphas.size()}};
}

}  // namespace slicebench
