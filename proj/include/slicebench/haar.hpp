#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "slicebench/common.hpp"
#include "slicebench/quadrature.hpp"

namespace slicebench {

// ---------------------------------------------------------------------------
// 1D Haar functions. Supports are half-open so that neighbouring patches tile
// the line without sharing edge points.

/// phi_{j,k}(x) = 2^{j/2} phi(2^j x - k), phi the indicator of [0, 1).
inline double scaling_1d(int j, int k, double x) {
  const double u = std::ldexp(x, j) - k;
  return (u >= 0.0 && u < 1.0) ? std::exp2(0.5 * j) : 0.0;
}

/// psi_{m,n}(x) = 2^{m/2} psi(2^m x - n): +amplitude on the first half of
/// the support, -amplitude on the second.
inline double wavelet_1d(int m, int n, double x) {
  const double u = std::ldexp(x, m) - n;
  if (u < 0.0 || u >= 1.0) return 0.0;
  const double a = std::exp2(0.5 * m);
  return u < 0.5 ? a : -a;
}

enum class HaarKind { scaling, wavelet };

/// One axis factor of a 2D basis function.
struct Haar1D {
  HaarKind kind = HaarKind::scaling;
  int level = 0;  // j for scaling, m for wavelets
  int shift = 0;  // k for scaling, n for wavelets

  bool operator==(const Haar1D&) const = default;

  double operator()(double x) const {
    return kind == HaarKind::scaling ? scaling_1d(level, shift, x)
                                     : wavelet_1d(level, shift, x);
  }
  double support_begin() const { return std::ldexp(static_cast<double>(shift), -level); }
  double support_end() const { return std::ldexp(static_cast<double>(shift) + 1.0, -level); }

  /// Intervals on which the function is constant, in order.
  std::vector<std::pair<double, double>> constant_pieces() const {
    const double a = support_begin();
    const double b = support_end();
    if (kind == HaarKind::scaling) return {{a, b}};
    const double mid = 0.5 * (a + b);
    return {{a, mid}, {mid, b}};
  }
};

/// Exact L2 inner product of two 1D Haar functions by integrating the
/// product over the common refinement of their constant pieces.
inline double inner_product_1d(const Haar1D& f, const Haar1D& g) {
  std::vector<double> breaks;
  for (auto [a, b] : f.constant_pieces()) {
    breaks.push_back(a);
    breaks.push_back(b);
  }
  for (auto [a, b] : g.constant_pieces()) {
    breaks.push_back(a);
    breaks.push_back(b);
  }
  std::sort(breaks.begin(), breaks.end());
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double a = breaks[i];
    const double b = breaks[i + 1];
    if (b <= a) continue;
    const double mid = 0.5 * (a + b);
    sum += f(mid) * g(mid) * (b - a);
  }
  return sum;
}

// ---------------------------------------------------------------------------
// Patches and 2D basis functions.

/// Square patch of side 2^{-j0}. The x-range is [2^{-j0} k, 2^{-j0}(k+1));
/// the y-range carries the extra offset j0 of the mode convention
/// g(x, y) = phi_{j0,k}(x) phi_{j0,k'}(y - j0).
struct PatchIndex {
  int k = 0;
  int k_prime = 0;
  int j0 = 0;

  bool operator==(const PatchIndex&) const = default;

  double side() const { return std::exp2(-j0); }
  double y_offset() const { return static_cast<double>(j0); }
  Rect rect() const {
    const double s = side();
    return {s * k, s * (k + 1), s * k_prime + y_offset(), s * (k_prime + 1) + y_offset()};
  }
  double center_x() const { return side() * (k + 0.5); }
  double center_y() const { return side() * (k_prime + 0.5) + y_offset(); }
};

struct HaarBasisFn {
  PatchIndex patch;
  Haar1D x;
  Haar1D y;       // evaluated at (y - j0)
  int ordinal = 1;  // 1-based position in the patch basis

  HaarKind kind() const {
    return (x.kind == HaarKind::scaling && y.kind == HaarKind::scaling) ? HaarKind::scaling
                                                                        : HaarKind::wavelet;
  }

  double operator()(double px, double py) const {
    return x(px) * y(py - patch.y_offset());
  }

  /// Constant-value sub-rectangles covering the support.
  std::vector<Rect> constant_cells() const {
    std::vector<Rect> cells;
    for (auto [xa, xb] : x.constant_pieces())
      for (auto [ya, yb] : y.constant_pieces())
        cells.push_back({xa, xb, ya + patch.y_offset(), yb + patch.y_offset()});
    return cells;
  }
};

/// The patch scaling function g_1 (the post-selected mode of a detector).
inline HaarBasisFn patch_scaling(const PatchIndex& p) {
  return {p, {HaarKind::scaling, p.j0, p.k}, {HaarKind::scaling, p.j0, p.k_prime}, 1};
}

/// Exact inner product of two 2D basis functions (separable).
inline double inner_product(const HaarBasisFn& f, const HaarBasisFn& g) {
  // Shifted y coordinates only matter when the patches differ in j0.
  if (f.patch.j0 != g.patch.j0) {
    double total = 0.0;
    for (const Rect& a : f.constant_cells()) {
      for (const Rect& b : g.constant_cells()) {
        const double x0 = std::max(a.x0, b.x0), x1 = std::min(a.x1, b.x1);
        const double y0 = std::max(a.y0, b.y0), y1 = std::min(a.y1, b.y1);
        if (x1 <= x0 || y1 <= y0) continue;
        const double cx = 0.5 * (x0 + x1), cy = 0.5 * (y0 + y1);
        total += f(cx, cy) * g(cx, cy) * (x1 - x0) * (y1 - y0);
      }
    }
    return total;
  }
  return inner_product_1d(f.x, g.x) * inner_product_1d(f.y, g.y);
}

namespace detail {
// 1D factors supported on [2^{-j0} k, 2^{-j0}(k+1)) up to max_level, the
// scaling function first and then wavelets by (m, n).
inline std::vector<Haar1D> axis_factors(int j0, int k, int max_level) {
  std::vector<Haar1D> out{{HaarKind::scaling, j0, k}};
  for (int m = j0; m <= max_level; ++m) {
    const long span = 1L << (m - j0);
    for (long n = span * k; n < span * (k + 1); ++n)
      out.push_back({HaarKind::wavelet, m, static_cast<int>(n)});
  }
  return out;
}
}  // namespace detail

/// Complete orthonormal Haar basis of a patch truncated at wavelet level
/// max_level: tensor products of the patch scaling function and all
/// supported wavelets per axis. Ordered by (m, n, m', n') with the scaling
/// factor preceding every wavelet level, so ordinal 1 is g_1.
inline std::vector<HaarBasisFn> patch_basis(const PatchIndex& patch, int max_level) {
  if (max_level < patch.j0)
    throw PreconditionError("max_level must be at least j0");
  const auto xs = detail::axis_factors(patch.j0, patch.k, max_level);
  const auto ys = detail::axis_factors(patch.j0, patch.k_prime, max_level);
  std::vector<HaarBasisFn> basis;
  basis.reserve(xs.size() * ys.size());
  // axis_factors is already sorted by (kind, level, shift) in the required
  // order, so the nested loop yields the (m, n, m', n') ordering.
  for (const auto& fx : xs)
    for (const auto& fy : ys) basis.push_back({patch, fx, fy, 0});
  for (std::size_t i = 0; i < basis.size(); ++i) basis[i].ordinal = static_cast<int>(i) + 1;
  return basis;
}

using ScalarField = std::function<Complex(double, double)>;

/// <g, E> = integral of g(x, y) E(x, y) over the support of g (g is real),
/// integrated cell by cell over the regions where g is constant.
inline Complex project(const ScalarField& field, const HaarBasisFn& g,
                       const QuadratureSpec& quad = {}) {
  Complex total{};
  for (const Rect& cell : g.constant_cells()) {
    const double gx = 0.5 * (cell.x0 + cell.x1);
    const double gy = 0.5 * (cell.y0 + cell.y1);
    const double value = g(gx, gy);
    total += value * integrate_rect(field, cell, quad).value;
  }
  return total;
}

/// Sum_i A_i g_i(x, y).
inline Complex reconstruct(const CVector& coeffs, const std::vector<HaarBasisFn>& basis,
                           double x, double y) {
  if (static_cast<std::size_t>(coeffs.size()) != basis.size())
    throw PreconditionError("coefficient count does not match basis size");
  Complex sum{};
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const double g = basis[i](x, y);
    if (g != 0.0) sum += coeffs[static_cast<Eigen::Index>(i)] * g;
  }
  return sum;
}

/// Full-patch decomposition: coefficients of every basis function up to
/// max_level plus the field energy on the patch.
struct PatchDecomposition {
  PatchIndex patch;
  int max_level = 0;
  std::vector<HaarBasisFn> basis;
  CVector coefficients;
  double field_energy = 0.0;  // integral of |E|^2 over the patch

  double captured_energy() const { return coefficients.squaredNorm(); }
  /// ||E - sum A_i g_i||^2 on the patch, by orthonormality.
  double residual_energy() const { return std::max(0.0, field_energy - captured_energy()); }

  /// Sum_i A_i g_i(x, y), using only the factors that are nonzero at the point.
  Complex value(double x, double y) const {
    const std::size_t side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(basis.size()))));
    std::vector<std::pair<std::size_t, double>> fx, fy;
    for (std::size_t a = 0; a < side; ++a) {
      const double v = basis[a * side].x(x);
      if (v != 0.0) fx.emplace_back(a, v);
    }
    for (std::size_t b = 0; b < side; ++b) {
      const double v = basis[b].y(y - patch.y_offset());
      if (v != 0.0) fy.emplace_back(b, v);
    }
    Complex sum{};
    for (auto [a, va] : fx)
      for (auto [b, vb] : fy) sum += coefficients[static_cast<Eigen::Index>(a * side + b)] * (va * vb);
    return sum;
  }
};

/// Decomposes a field on a patch. The patch is split into the finest cells
/// of the truncated basis (side 2^{-(max_level+1)}); every basis function is
/// constant on those cells, so all coefficients are exact signed sums of the
/// cell integrals. cell_points Gauss-Legendre points per axis are used in
/// each fine cell.
inline PatchDecomposition decompose_patch(const ScalarField& field, const PatchIndex& patch,
                                          int max_level, int cell_points = 6) {
  PatchDecomposition out;
  out.patch = patch;
  out.max_level = max_level;
  out.basis = patch_basis(patch, max_level);

  const int cells = 1 << (max_level - patch.j0 + 1);
  const Rect r = patch.rect();
  const double h = (r.x1 - r.x0) / cells;
  const auto& rule = gauss_legendre(cell_points);

  CMatrix cell_integral(cells, cells);
  double energy = 0.0;
  for (int cx = 0; cx < cells; ++cx) {
    for (int cy = 0; cy < cells; ++cy) {
      Complex acc{};
      for (int i = 0; i < cell_points; ++i) {
        const double x = r.x0 + h * (cx + 0.5 * (rule.nodes[i] + 1.0));
        for (int j = 0; j < cell_points; ++j) {
          const double y = r.y0 + h * (cy + 0.5 * (rule.nodes[j] + 1.0));
          const double w = 0.25 * h * h * rule.weights[i] * rule.weights[j];
          const Complex v = field(x, y);
          acc += w * v;
          energy += w * std::norm(v);
        }
      }
      cell_integral(cx, cy) = acc;
    }
  }
  out.field_energy = energy;

  // Values of the 1D factors on the fine cells (cell midpoints).
  auto factor_table = [&](const std::vector<Haar1D>& factors, double origin) {
    Eigen::MatrixXd t(static_cast<Eigen::Index>(factors.size()), cells);
    for (std::size_t f = 0; f < factors.size(); ++f)
      for (int c = 0; c < cells; ++c)
        t(static_cast<Eigen::Index>(f), c) = factors[f](origin + h * (c + 0.5));
    return t;
  };
  const auto xs = detail::axis_factors(patch.j0, patch.k, max_level);
  const auto ys = detail::axis_factors(patch.j0, patch.k_prime, max_level);
  const Eigen::MatrixXd fx = factor_table(xs, r.x0);
  const Eigen::MatrixXd fy = factor_table(ys, r.y0 - patch.y_offset());
  const CMatrix coeff_grid = fx.cast<Complex>() * cell_integral * fy.transpose().cast<Complex>();

  out.coefficients.resize(static_cast<Eigen::Index>(out.basis.size()));
  Eigen::Index idx = 0;
  for (Eigen::Index i = 0; i < coeff_grid.rows(); ++i)
    for (Eigen::Index j = 0; j < coeff_grid.cols(); ++j) out.coefficients[idx++] = coeff_grid(i, j);
  return out;
}

}  // namespace slicebench
