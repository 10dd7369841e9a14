#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "slicebench/slicespace.hpp"

using namespace slicebench;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Plain midpoint rule on an n x n grid over the patch, independent of the
// Gauss-Legendre machinery.
Complex midpoint_projection(const ScalarField& f, const HaarBasisFn& g, int n) {
  const Rect r = g.patch.rect();
  const double hx = (r.x1 - r.x0) / n, hy = (r.y1 - r.y0) / n;
  Complex sum{};
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      const double x = r.x0 + hx * (a + 0.5), y = r.y0 + hy * (b + 0.5);
      sum += g(x, y) * f(x, y);
    }
  return sum * hx * hy;
}

void check_printed(Complex value, double re, double im, double half_unit) {
  CHECK_THAT(value.real(), WithinAbs(re, half_unit));
  CHECK_THAT(value.imag(), WithinAbs(im, half_unit));
}

}  // namespace

TEST_CASE("input slice vectors reproduce the printed entries") {
  const auto s = canonical_double_slit();
  const auto x1 = input_slice_vector(s, 0);
  check_printed(x1.entries[0], -394.761, -41.473, 5.1e-4);
  check_printed(x1.entries[1], 10.284, -13.398, 5.1e-4);
  CHECK(x1.z == -720.0);

  const auto x2 = input_slice_vector(s, 1);
  CHECK(std::abs(x2.entries[0] - x1.entries[1]) < 1e-9 * std::abs(x1.entries[1]));
  CHECK(std::abs(x2.entries[1] - x1.entries[0]) < 1e-9 * std::abs(x1.entries[0]));
}

TEST_CASE("output slice vectors reproduce the printed entries") {
  const auto s = canonical_double_slit();
  const auto y1 = output_slice_vector(s, 0);
  check_printed(y1.entries[0], 0.008, -0.796, 5.1e-4);
  check_printed(y1.entries[1], 0.782, 0.008, 5.1e-4);
  const auto y2 = output_slice_vector(s, 1);
  CHECK(std::abs(y2.entries[0] - y1.entries[1]) < 1e-9 * std::abs(y1.entries[1]));
}

TEST_CASE("projections agree with an independent midpoint rule") {
  const auto s = canonical_double_slit();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const auto g = s.mode(j);
      const Complex in = project(input_field(s, i), g);
      CHECK(std::abs(midpoint_projection(input_field(s, i), g, 400) - in) < 1e-5 * std::abs(in));
      const Complex out = project(output_field(s, i, j), g);
      CHECK(std::abs(midpoint_projection(output_field(s, i, j), g, 400) - out) < 1e-5 * std::abs(out));
    }
}

TEST_CASE("barrier restricts each detector to its own slit") {
  const auto s = canonical_double_slit();
  const Point3 r{-10.5, 0.3, 800.0};
  const Complex direct = diffract_point_source(s.slits[1], s.sources[0], r);
  CHECK(output_field(s, 0, 1)(r.x, r.y) == direct);

  auto open = s;
  open.barrier.allowed = {{0, 1}, {0, 1}};
  const Complex both = direct + diffract_point_source(s.slits[0], s.sources[0], r);
  CHECK(std::abs(output_field(open, 0, 1)(r.x, r.y) - both) < 1e-15 * std::abs(both));
  CHECK_THROWS_AS(input_field(s, 2), PreconditionError);
}

TEST_CASE("power table reproduces the printed intercepted powers and ratios") {
  const auto s = canonical_double_slit();
  const auto r1 = power_report(s, 0);
  const auto r2 = power_report(s, 1);
  CHECK_THAT(r1.ports[0].intercepted, WithinAbs(0.633115, 5.1e-7));
  CHECK_THAT(r1.ports[0].mode_power, WithinAbs(0.633087, 5.1e-7));
  CHECK_THAT(100.0 * r1.ports[0].ratio, WithinAbs(99.9956, 5.1e-5));
  CHECK_THAT(r1.ports[1].intercepted, WithinAbs(0.61200, 5.1e-6));
  CHECK_THAT(r1.ports[1].mode_power, WithinAbs(0.611971, 5.1e-7));
  CHECK_THAT(100.0 * r1.ports[1].ratio, WithinAbs(99.9952, 5.1e-5));
  CHECK_THAT(r2.ports[1].intercepted, WithinRel(r1.ports[0].intercepted, 1e-9));
  CHECK_THAT(r2.ports[0].mode_power, WithinRel(r1.ports[1].mode_power, 1e-9));
  for (const auto& r : {r1, r2})
    for (const auto& p : r.ports) {
      CHECK(p.mode_power <= p.intercepted);
      CHECK(r.scale == 1.0);
    }
}

TEST_CASE("mode power equals the squared projection") {
  const auto s = canonical_double_slit();
  const auto r = power_report(s, 0);
  const auto y = output_slice_vector(s, 0);
  CHECK_THAT(r.ports[0].mode_power, WithinRel(std::norm(y.entries[0]), 1e-12));
  CHECK_THAT(r.ports[1].mode_power, WithinRel(std::norm(y.entries[1]), 1e-12));
}

TEST_CASE("power table csv layout") {
  const auto s = canonical_double_slit();
  const std::vector<PowerReport> reports{power_report(s, 0), power_report(s, 1)};
  const std::string csv = power_report_csv(reports, true);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "source,port,intercepted,mode_power,ratio");
  std::vector<std::string> rows;
  while (std::getline(in, line)) rows.push_back(line);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].rfind("1,1,0.63311", 0) == 0);
  CHECK(rows[3].rfind("2,2,0.63311", 0) == 0);
  CHECK(power_report_csv({reports[0]}).rfind("port,intercepted", 0) == 0);
}

TEST_CASE("triple slit slice vectors are symmetric under column exchange") {
  const auto s = canonical_triple_slit();
  const auto y1 = output_slice_vector(s, 0);
  const auto y3 = output_slice_vector(s, 2);
  // the outer columns sit at x = 10 and x = -30, mirror images about x = -10
  CHECK(std::abs(y1.entries[0] - y3.entries[2]) < 1e-9 * std::abs(y1.entries[0]));
  CHECK(std::abs(y1.entries[2] - y3.entries[0]) < 1e-9 * std::abs(y1.entries[2]));
}
