#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "slicebench/common.hpp"
#include "slicebench/quadrature.hpp"

namespace slicebench {

/// Decimal text with 15 significant digits.
inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

/// Value rounded to 15 significant digits, so JSON output carries the same
/// precision as CSV output.
inline double round15(double v) { return std::strtod(format_real(v).c_str(), nullptr); }

inline nlohmann::json complex_to_json(Complex c) {
  return nlohmann::json::array({round15(c.real()), round15(c.imag())});
}

inline Complex complex_from_json(const nlohmann::json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>()};
}

/// Rows of [re, im] pairs.
inline nlohmann::json matrix_to_json(const CMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(complex_to_json(m(i, j)));
    rows.push_back(row);
  }
  return rows;
}

inline CMatrix matrix_from_json(const nlohmann::json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(j.at(0).size());
  CMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = complex_from_json(j.at(i).at(k));
  return m;
}

inline nlohmann::json quadrature_to_json(const QuadratureSpec& q) {
  return {{"points", q.points}, {"max_refinements", q.max_refinements}, {"rel_tolerance", q.rel_tolerance}};
}

inline std::string hash_hex(std::uint64_t h) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

/// Comment line carried at the top of every CSV artifact.
inline std::string provenance_comment(std::uint64_t scenario_hash, const QuadratureSpec& q) {
  return "# scenario_hash=" + hash_hex(scenario_hash) + " quad_points=" + std::to_string(q.points) +
         " quad_max_refinements=" + std::to_string(q.max_refinements) +
         " quad_rel_tolerance=" + format_real(q.rel_tolerance) + "\n";
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path);
}

}  // namespace slicebench
