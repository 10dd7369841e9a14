#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "slicebench/common.hpp"
#include "slicebench/io.hpp"
#include "slicebench/parallel.hpp"
#include "slicebench/transfer.hpp"

namespace slicebench {

/// p(phi) = 1 / 2pi on [0, 2pi).
struct UniformPhase {};
/// p(phi) = (delta(phi - pi/2) + delta(phi + pi/2)) / 2.
struct TwoPointPhase {};
/// Explicit weighted phases; weights sum to one.
struct SampledPhase {
  std::vector<double> phases;
  std::vector<double> weights;
};

using PhaseDistribution = std::variant<UniformPhase, TwoPointPhase, SampledPhase>;

inline std::string distribution_name(const PhaseDistribution& d) {
  if (std::holds_alternative<UniformPhase>(d)) return "uniform";
  if (std::holds_alternative<TwoPointPhase>(d)) return "twopoint";
  return "sampled";
}

inline void validate(const SampledPhase& d) {
  if (d.phases.empty() || d.phases.size() != d.weights.size())
    throw PreconditionError("sampled phase distribution needs one weight per phase");
  double total = 0.0;
  for (double w : d.weights) {
    if (w < 0.0) throw PreconditionError("phase weights must be non-negative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw PreconditionError("phase weights must sum to one");
}

/// How the uniform phase average is taken.
enum class PhaseAveraging { analytic, quadrature };

/// Intensity in a port's post-selected mode when the first source
/// contributes amplitude a and the second contributes b with relative phase
/// phi and polarization angle theta:
///   |a|^2 + |b|^2 + 2 Re{a* b e^{i phi}} cos(theta).
inline double port_intensity(Complex a, Complex b, double theta, double phi) {
  return std::norm(a) + std::norm(b) + 2.0 * std::real(std::conj(a) * b * std::exp(I * phi)) * std::cos(theta);
}

/// Port intensity for a scenario from its output slice vectors: port p
/// receives Y(p, 0) from source 1 and Y(p, 1) from source 2.
inline double superposed_port_intensity(const CMatrix& outputs, double theta, double phi, int port) {
  if (outputs.cols() < 2 || port < 0 || port >= outputs.rows()) throw PreconditionError("port index out of range");
  return port_intensity(outputs(port, 0), outputs(port, 1), theta, phi);
}

inline CMatrix output_matrix(const ScenarioConfig& s, const QuadratureSpec& quad = {}) {
  CMatrix y(s.size(), s.size());
  for (int i = 0; i < s.size(); ++i) y.col(i) = output_slice_vector(s, i, quad).entries;
  return y;
}

inline double superposed_port_intensity(const ScenarioConfig& s, double theta, double phi, int port,
                                        const QuadratureSpec& quad = {}) {
  return superposed_port_intensity(output_matrix(s, quad), theta, phi, port);
}

/// C(theta) = <I+ I-> / (<I+> <I->) with the average over the phase
/// distribution; I+ and I- are the intensities of ports 1 and 2.
inline double correlation_value(const CMatrix& outputs, double theta, const PhaseDistribution& dist,
                                PhaseAveraging averaging = PhaseAveraging::analytic) {
  if (outputs.rows() < 2 || outputs.cols() < 2) throw PreconditionError("correlation needs two ports and two sources");
  const Complex a1 = outputs(0, 0), b1 = outputs(0, 1);
  const Complex a2 = outputs(1, 0), b2 = outputs(1, 1);

  auto weighted = [&](const std::vector<double>& phases, const std::vector<double>& weights) {
    double prod = 0.0, plus = 0.0, minus = 0.0;
    for (std::size_t n = 0; n < phases.size(); ++n) {
      const double ip = port_intensity(a1, b1, theta, phases[n]);
      const double im = port_intensity(a2, b2, theta, phases[n]);
      prod += weights[n] * ip * im;
      plus += weights[n] * ip;
      minus += weights[n] * im;
    }
    return std::array<double, 3>{prod, plus, minus};
  };

  std::array<double, 3> m{};
  if (std::holds_alternative<UniformPhase>(dist)) {
    if (averaging == PhaseAveraging::analytic) {
      // I(phi) = c + Re(z e^{i phi}); the mean of Re(z+ e^{i phi}) Re(z- e^{i phi}) is Re(z+ conj z-)/2.
      const double cp = std::norm(a1) + std::norm(b1);
      const double cm = std::norm(a2) + std::norm(b2);
      const Complex zp = 2.0 * std::conj(a1) * b1 * std::cos(theta);
      const Complex zm = 2.0 * std::conj(a2) * b2 * std::cos(theta);
      m = {cp * cm + 0.5 * std::real(zp * std::conj(zm)), cp, cm};
    } else {
      // equispaced rule, exact for the degree-2 trigonometric integrand
      constexpr int nodes = 32;
      std::vector<double> phases(nodes), weights(nodes, 1.0 / nodes);
      for (int n = 0; n < nodes; ++n) phases[static_cast<std::size_t>(n)] = two_pi * n / nodes;
      m = weighted(phases, weights);
    }
  } else if (std::holds_alternative<TwoPointPhase>(dist)) {
    m = weighted({0.5 * pi, -0.5 * pi}, {0.5, 0.5});
  } else {
    const auto& d = std::get<SampledPhase>(dist);
    validate(d);
    m = weighted(d.phases, d.weights);
  }
  if (!(m[1] > 0.0) || !(m[2] > 0.0)) throw NumericError("degenerate correlation: a port has zero mean intensity");
  return m[0] / (m[1] * m[2]);
}

struct Cos2Fit {
  double a = 0.0;  // C ~ a - b cos(2 theta)
  double b = 0.0;
  double dip = 0.0;       // (C_max - C_min) / C_max of the fitted curve
  double residual = 0.0;  // RMS of the fit residuals
};

/// Least-squares fit of a - b cos(2 theta).
inline Cos2Fit fit_cos2(const std::vector<double>& thetas, const std::vector<double>& values) {
  if (thetas.size() != values.size()) throw PreconditionError("fit needs one value per angle");
  if (thetas.size() < 3) throw PreconditionError("fit needs at least three points");
  std::vector<double> distinct;
  for (double t : thetas) {
    const double c = std::cos(2.0 * t);
    if (std::none_of(distinct.begin(), distinct.end(), [&](double d) { return std::abs(d - c) < 1e-12; }))
      distinct.push_back(c);
  }
  if (distinct.size() < 2) throw NumericError("fit is rank deficient: fewer than two distinct cos(2 theta) values");

  const auto n = static_cast<Eigen::Index>(thetas.size());
  Eigen::MatrixXd design(n, 2);
  Eigen::VectorXd rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    design(i, 0) = 1.0;
    design(i, 1) = -std::cos(2.0 * thetas[static_cast<std::size_t>(i)]);
    rhs[i] = values[static_cast<std::size_t>(i)];
  }
  const Eigen::VectorXd coef = design.colPivHouseholderQr().solve(rhs);
  Cos2Fit fit;
  fit.a = coef[0];
  fit.b = coef[1];
  const double top = fit.a + std::abs(fit.b);
  fit.dip = top > 0.0 ? 2.0 * std::abs(fit.b) / top : 0.0;
  fit.residual = std::sqrt((design * coef - rhs).squaredNorm() / static_cast<double>(n));
  return fit;
}

struct CorrelationCurve {
  std::vector<double> thetas;
  std::vector<double> values;
  Cos2Fit fit;
  std::string distribution;
};

/// n points evenly spaced on [first, last].
inline std::vector<double> linear_grid(double first, double last, int n) {
  if (n < 1) throw PreconditionError("grid needs at least one point");
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = n == 1 ? first : first + (last - first) * i / (n - 1);
  return g;
}

inline std::vector<double> default_theta_grid() { return linear_grid(0.0, 0.5 * pi, 64); }

inline CorrelationCurve correlation_curve(const CMatrix& outputs, const std::vector<double>& thetas,
                                          const PhaseDistribution& dist,
                                          PhaseAveraging averaging = PhaseAveraging::analytic) {
  if (thetas.empty()) throw PreconditionError("theta grid is empty");
  for (std::size_t i = 1; i < thetas.size(); ++i)
    if (!(thetas[i] > thetas[i - 1])) throw PreconditionError("theta grid must be strictly increasing");
  CorrelationCurve c;
  c.thetas = thetas;
  c.values.resize(thetas.size());
  c.distribution = distribution_name(dist);
  parallel_for(thetas.size(), [&](std::size_t i) { c.values[i] = correlation_value(outputs, thetas[i], dist, averaging); });
  if (thetas.size() >= 3) c.fit = fit_cos2(c.thetas, c.values);
  return c;
}

inline CorrelationCurve correlation_curve(const ScenarioConfig& s, const std::vector<double>& thetas,
                                          const PhaseDistribution& dist, const QuadratureSpec& quad = {}) {
  return correlation_curve(output_matrix(s, quad), thetas, dist);
}

/// Cubic 50:50 splitter (1/sqrt2)[[1, i], [i, 1]].
inline CMatrix ideal_beam_splitter() {
  CMatrix u(2, 2);
  u << 1.0, I, I, 1.0;
  return u / std::sqrt(2.0);
}

/// Reference curve for the ideal splitter fed with identical unit inputs.
inline CorrelationCurve ideal_bs_correlation(const std::vector<double>& thetas, const PhaseDistribution& dist) {
  return correlation_curve(ideal_beam_splitter(), thetas, dist);
}

inline std::string correlation_csv(const CorrelationCurve& c, const std::string& header_comment = {}) {
  std::string out = header_comment + "theta,C\n";
  for (std::size_t i = 0; i < c.thetas.size(); ++i)
    out += format_real(c.thetas[i]) + "," + format_real(c.values[i]) + "\n";
  return out;
}

inline nlohmann::json fit_to_json(const CorrelationCurve& c) {
  return {{"distribution", c.distribution},
          {"a", round15(c.fit.a)},
          {"b", round15(c.fit.b)},
          {"dip", round15(c.fit.dip)},
          {"residual", round15(c.fit.residual)},
          {"points", c.thetas.size()}};
}

}  // namespace slicebench
