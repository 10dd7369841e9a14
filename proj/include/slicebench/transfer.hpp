#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "slicebench/common.hpp"
#include "slicebench/io.hpp"
#include "slicebench/parallel.hpp"
#include "slicebench/slicespace.hpp"

namespace slicebench {

inline constexpr double max_condition_number = 1e8;

inline double condition_number(const CMatrix& m) {
  Eigen::JacobiSVD<CMatrix> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0) return 0.0;
  const double smallest = s[s.size() - 1];
  return smallest > 0.0 ? s[0] / smallest : std::numeric_limits<double>::infinity();
}

/// T = Y X^{-1}, columns of X and Y being the input and output slice
/// vectors of one source each.
inline CMatrix solve_transfer(const CMatrix& inputs, const CMatrix& outputs) {
  if (inputs.rows() != inputs.cols() || outputs.rows() != inputs.rows() || outputs.cols() != inputs.cols())
    throw PreconditionError("solve_transfer needs square X and Y of equal size");
  const double cond = condition_number(inputs);
  if (!(cond <= max_condition_number))
    throw NumericError("input matrix is singular or ill-conditioned (condition number " + format_real(cond) + ")");
  // T X = Y  <=>  X^T T^T = Y^T
  return inputs.transpose().fullPivLu().solve(outputs.transpose()).transpose();
}

struct PolarFactors {
  CMatrix unitary;    // U
  CMatrix hermitian;  // P, positive semidefinite
};

/// Right polar decomposition T = U P from the SVD T = W S V^H:
/// U = W V^H, P = V S V^H. For rank-deficient T the full SVD still yields a
/// unitary U (the isometry is completed by the null-space singular vectors).
inline PolarFactors polar_decompose(const CMatrix& t) {
  if (t.rows() != t.cols()) throw PreconditionError("polar decomposition needs a square matrix");
  Eigen::JacobiSVD<CMatrix> svd(t, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const CMatrix& w = svd.matrixU();
  const CMatrix& v = svd.matrixV();
  PolarFactors f;
  f.unitary = w * v.adjoint();
  f.hermitian = v * svd.singularValues().cast<Complex>().asDiagonal() * v.adjoint();
  // symmetrize away rounding
  f.hermitian = 0.5 * (f.hermitian + f.hermitian.adjoint()).eval();
  return f;
}

struct UnitarityDefect {
  CMatrix gram;       // T T^H
  double distance = 0.0;  // ||T T^H - I||_F
};

inline UnitarityDefect unitarity_defect(const CMatrix& t) {
  UnitarityDefect d;
  d.gram = t * t.adjoint();
  d.distance = (d.gram - CMatrix::Identity(t.rows(), t.rows())).norm();
  return d;
}

/// Share of the first input routed to the first output by U, i.e.
/// |U11|^2 / (|U11|^2 + |U12|^2); about 0.54 for the canonical double slit.
inline double splitter_ratio(const CMatrix& u) {
  const double a = std::norm(u(0, 0));
  const double b = std::norm(u(0, 1));
  return a / (a + b);
}

struct TransferResult {
  CMatrix inputs;   // X, columns per source
  CMatrix outputs;  // Y, columns per source
  CMatrix transfer; // T
  CMatrix unitary;  // U
  CMatrix hermitian;  // P
  CMatrix gram;     // T T^H
  double unitarity_defect = 0.0;
  double condition = 0.0;

  /// ||T - U P||_F / ||T||_F
  double reconstruction_error() const { return (transfer - unitary * hermitian).norm() / transfer.norm(); }
};

inline TransferResult transfer_from_slices(const CMatrix& inputs, const CMatrix& outputs) {
  TransferResult r;
  r.inputs = inputs;
  r.outputs = outputs;
  r.condition = condition_number(inputs);
  r.transfer = solve_transfer(inputs, outputs);
  auto polar = polar_decompose(r.transfer);
  r.unitary = std::move(polar.unitary);
  r.hermitian = std::move(polar.hermitian);
  auto defect = unitarity_defect(r.transfer);
  r.gram = std::move(defect.gram);
  r.unitarity_defect = defect.distance;
  return r;
}

/// Input and output slice vectors of every source, one source on at a time.
inline std::pair<CMatrix, CMatrix> slice_matrices(const ScenarioConfig& s, const QuadratureSpec& quad = {}) {
  const int n = s.size();
  CMatrix x(n, n), y(n, n);
  std::vector<SliceVector> ins(static_cast<std::size_t>(n)), outs(static_cast<std::size_t>(n));
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    ins[i] = input_slice_vector(s, static_cast<int>(i), quad);
    outs[i] = output_slice_vector(s, static_cast<int>(i), quad);
  });
  for (int i = 0; i < n; ++i) {
    x.col(i) = ins[static_cast<std::size_t>(i)].entries;
    y.col(i) = outs[static_cast<std::size_t>(i)].entries;
  }
  return {x, y};
}

inline TransferResult characterize(const ScenarioConfig& s, const QuadratureSpec& quad = {}) {
  s.validate();
  auto [x, y] = slice_matrices(s, quad);
  return transfer_from_slices(x, y);
}

inline nlohmann::json to_json(const TransferResult& r) {
  return {{"X", matrix_to_json(r.inputs)},
          {"Y", matrix_to_json(r.outputs)},
          {"T", matrix_to_json(r.transfer)},
          {"U", matrix_to_json(r.unitary)},
          {"P", matrix_to_json(r.hermitian)},
          {"TTdagger", matrix_to_json(r.gram)},
          {"unitarity_defect", round15(r.unitarity_defect)},
          {"condition_number", round15(r.condition)},
          {"splitter_ratio", round15(splitter_ratio(r.unitary))}};
}

}  // namespace slicebench
