#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "slicebench/common.hpp"

namespace slicebench {

struct QuadratureSpec {
  int points = 32;           // Gauss-Legendre points per axis per cell
  int max_refinements = 4;   // each refinement halves the cell size
  double rel_tolerance = 1e-6;

  bool operator==(const QuadratureSpec&) const = default;

  void validate() const {
    if (points < 2) throw ConfigError("quadrature points must be at least 2");
    if (max_refinements < 0) throw ConfigError("max refinements must be non-negative");
    if (!(rel_tolerance > 0.0)) throw ConfigError("quadrature tolerance must be positive");
  }
};

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline GaussLegendreRule compute_gauss_legendre(int n) {
  GaussLegendreRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Tricomi initial guess, then Newton on P_n.
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // recompute derivative at the converged node
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
      double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

/// Cached rules; safe to call from several threads.
inline const GaussLegendreRule& gauss_legendre(int n) {
  static std::mutex mutex;
  static std::map<int, GaussLegendreRule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, compute_gauss_legendre(n)).first;
  return it->second;
}

/// Axis-aligned half-open rectangle [x0, x1) x [y0, y1).
struct Rect {
  double x0 = 0.0;
  double x1 = 0.0;
  double y0 = 0.0;
  double y1 = 0.0;

  double area() const { return (x1 - x0) * (y1 - y0); }
  bool contains(double x, double y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
};

/// Tensor nodes for a rectangle split into cells x cells sub-rectangles,
/// each carrying an n x n Gauss-Legendre rule.
struct TensorNodes {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> w;
};

inline TensorNodes tensor_nodes(const Rect& r, int points, int cells_per_axis) {
  const auto& rule = gauss_legendre(points);
  std::vector<double> xs, wx, ys, wy;
  const double hx = (r.x1 - r.x0) / cells_per_axis;
  const double hy = (r.y1 - r.y0) / cells_per_axis;
  for (int c = 0; c < cells_per_axis; ++c) {
    for (int i = 0; i < points; ++i) {
      xs.push_back(r.x0 + hx * (c + 0.5 * (rule.nodes[i] + 1.0)));
      wx.push_back(0.5 * hx * rule.weights[i]);
      ys.push_back(r.y0 + hy * (c + 0.5 * (rule.nodes[i] + 1.0)));
      wy.push_back(0.5 * hy * rule.weights[i]);
    }
  }
  TensorNodes out;
  out.x.reserve(xs.size() * ys.size());
  out.y.reserve(xs.size() * ys.size());
  out.w.reserve(xs.size() * ys.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = 0; j < ys.size(); ++j) {
      out.x.push_back(xs[i]);
      out.y.push_back(ys[j]);
      out.w.push_back(wx[i] * wy[j]);
    }
  }
  return out;
}

template <typename Scalar>
struct QuadratureResult {
  Scalar value{};
  double magnitude = 0.0;  // integral of |f|, the scale for convergence
  int refinements = 0;
};

/// Integrates f(x, y) over a rectangle. The cell count per axis doubles
/// until two successive estimates differ by at most rel_tolerance times the
/// integral of |f|; throws QuadratureError if max_refinements is exhausted.
template <typename F>
auto integrate_rect(F&& f, const Rect& r, const QuadratureSpec& q)
    -> QuadratureResult<decltype(f(0.0, 0.0))> {
  using Scalar = decltype(f(0.0, 0.0));
  auto estimate = [&](int cells) {
    const TensorNodes nodes = tensor_nodes(r, q.points, cells);
    QuadratureResult<Scalar> res;
    for (std::size_t i = 0; i < nodes.w.size(); ++i) {
      const Scalar v = f(nodes.x[i], nodes.y[i]);
      res.value += nodes.w[i] * v;
      res.magnitude += nodes.w[i] * std::abs(v);
    }
    return res;
  };
  auto previous = estimate(1);
  for (int level = 1; level <= q.max_refinements; ++level) {
    auto current = estimate(1 << level);
    current.refinements = level;
    const double diff = std::abs(current.value - previous.value);
    if (diff <= q.rel_tolerance * current.magnitude) return current;
    previous = current;
  }
  if (q.max_refinements == 0) return previous;
  throw QuadratureError("quadrature did not converge after " +
                        std::to_string(q.max_refinements) + " refinements");
}

}  // namespace slicebench
