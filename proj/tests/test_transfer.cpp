#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "slicebench/transfer.hpp"

using namespace slicebench;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

CMatrix random_matrix(std::mt19937& rng, int n, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, 1.0);
  CMatrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = scale * Complex(g(rng), g(rng));
  return m;
}

CMatrix random_unitary(std::mt19937& rng, int n) {
  Eigen::HouseholderQR<CMatrix> qr(random_matrix(rng, n));
  return qr.householderQ() * CMatrix::Identity(n, n);
}

// U = T (T^H T)^{-1/2} through an eigendecomposition of T^H T.
CMatrix unitary_by_eigen(const CMatrix& t) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(t.adjoint() * t);
  const Eigen::VectorXd inv_sqrt = es.eigenvalues().cwiseSqrt().cwiseInverse();
  return t * es.eigenvectors() * inv_sqrt.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
}

void check_polar_invariants(const CMatrix& t) {
  const auto f = polar_decompose(t);
  const auto n = t.rows();
  CHECK((f.unitary.adjoint() * f.unitary - CMatrix::Identity(n, n)).norm() <= 1e-12);
  CHECK((f.hermitian - f.hermitian.adjoint()).norm() <= 1e-12 * std::max(1.0, f.hermitian.norm()));
  CHECK((f.unitary * f.hermitian - t).norm() <= 1e-12 * std::max(1.0, t.norm()));
  Eigen::SelfAdjointEigenSolver<CMatrix> es(f.hermitian);
  CHECK(es.eigenvalues().minCoeff() >= -1e-12 * std::max(1.0, t.norm()));
}

}  // namespace

TEST_CASE("solve_transfer satisfies T X = Y") {
  std::mt19937 rng(5);
  for (int n : {2, 3, 5}) {
    const CMatrix x = random_matrix(rng, n, 100.0);
    const CMatrix y = random_matrix(rng, n, 0.5);
    const CMatrix t = solve_transfer(x, y);
    CHECK((t * x - y).norm() <= 1e-12 * y.norm());
  }
}

TEST_CASE("singular or ill-conditioned inputs are rejected") {
  CMatrix x(2, 2);
  x << 1.0, 2.0, 2.0, 4.0;
  CHECK_THROWS_AS(solve_transfer(x, CMatrix::Identity(2, 2)), NumericError);
  x << 1.0, 0.0, 0.0, 1e-9;
  CHECK_THROWS_WITH(solve_transfer(x, CMatrix::Identity(2, 2)), Catch::Matchers::ContainsSubstring("condition number"));
  x << 1.0, 0.0, 0.0, 1e-7;
  CHECK_NOTHROW(solve_transfer(x, CMatrix::Identity(2, 2)));
  CHECK_THROWS_AS(solve_transfer(CMatrix::Identity(2, 2), CMatrix::Identity(3, 3)), PreconditionError);
}

TEST_CASE("polar factors satisfy the invariant suite on random matrices") {
  std::mt19937 rng(17);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + trial % 4;
    check_polar_invariants(random_matrix(rng, n, trial % 2 ? 1e-3 : 1.0));
  }
  // rank deficient: U must still be unitary
  CMatrix low(3, 3);
  low << 1.0, 2.0, 3.0, 2.0, 4.0, 6.0, Complex(0, 1), 0.0, 1.0;
  check_polar_invariants(low);
  check_polar_invariants(CMatrix::Zero(2, 2));
}

TEST_CASE("polar decomposition recovers a known product") {
  std::mt19937 rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + trial % 3;
    const CMatrix u0 = random_unitary(rng, n);
    const CMatrix a = random_matrix(rng, n);
    const CMatrix p0 = a.adjoint() * a + 0.1 * CMatrix::Identity(n, n);
    const auto f = polar_decompose(u0 * p0);
    CHECK((f.unitary - u0).norm() <= 1e-10);
    CHECK((f.hermitian - p0).norm() <= 1e-10 * p0.norm());
  }
}

TEST_CASE("SVD route agrees with the eigendecomposition route") {
  std::mt19937 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const CMatrix t = random_matrix(rng, 2 + trial % 3, 2e-3);
    CHECK((polar_decompose(t).unitary - unitary_by_eigen(t)).norm() <= 1e-9);
  }
}

TEST_CASE("unitarity defect and splitter ratio") {
  CMatrix bs(2, 2);
  bs << 1.0, I, I, 1.0;
  bs /= std::sqrt(2.0);
  CHECK(unitarity_defect(bs).distance <= 1e-15);
  CHECK_THAT(splitter_ratio(bs), WithinAbs(0.5, 1e-15));
  CHECK_THAT(unitarity_defect(CMatrix::Zero(2, 2)).distance, WithinRel(std::sqrt(2.0), 1e-15));
}

TEST_CASE("canonical double slit transfer matrix") {
  const auto r = characterize(canonical_double_slit());
  const CMatrix& t = r.transfer;
  CHECK_THAT(std::abs(t(0, 0)) * 1e3, WithinAbs(2.07, 0.005));
  CHECK_THAT(std::abs(t(0, 1)) * 1e3, WithinAbs(1.90, 0.005));
  CHECK_THAT(std::arg(t(0, 0)) / pi, WithinAbs(0.476, 0.0005));
  CHECK_THAT(std::arg(t(0, 1) / t(0, 0)) / pi, WithinAbs(0.486, 0.0005));
  CHECK(std::abs(t(0, 1) - t(1, 0)) <= 1e-9 * std::abs(t(0, 1)));
  CHECK(std::abs(t(0, 0) - t(1, 1)) <= 1e-9 * std::abs(t(0, 0)));
  CHECK((t * r.inputs - r.outputs).norm() <= 1e-12 * r.outputs.norm());

  CHECK_THAT(r.gram(0, 0).real() * 1e6, WithinAbs(7.90, 0.005));
  CHECK_THAT(std::abs(r.gram(0, 1)) * 1e6, WithinAbs(0.35, 0.005));

  CHECK_THAT(std::abs(r.unitary(0, 0)) * std::sqrt(2.0), WithinAbs(1.04, 0.005));
  CHECK_THAT(std::abs(r.unitary(0, 1)) * std::sqrt(2.0), WithinAbs(0.95, 0.005));
  CHECK_THAT(std::arg(r.unitary(0, 0)) / pi, WithinAbs(0.47, 0.005));
  CHECK_THAT(std::arg(r.unitary(0, 1) / r.unitary(0, 0)) / pi, WithinAbs(0.5, 0.005));
  CHECK_THAT(r.hermitian(0, 0).real() * 1e3, WithinAbs(2.81, 0.005));
  CHECK_THAT(std::abs(r.hermitian(0, 1)) * 1e3, WithinAbs(0.06, 0.005));
  CHECK_THAT(splitter_ratio(r.unitary), WithinAbs(0.54, 0.01));
  CHECK(r.reconstruction_error() <= 1e-12);
}

TEST_CASE("swapping the sources permutes the transfer matrix") {
  auto s = canonical_double_slit();
  const auto base = characterize(s);
  std::swap(s.sources[0], s.sources[1]);
  const auto swapped = characterize(s);
  // exchanging the inputs permutes the columns of X and Y; T = Y X^{-1} is unchanged
  CMatrix perm(2, 2);
  perm << 0.0, 1.0, 1.0, 0.0;
  CHECK((swapped.inputs - base.inputs * perm).norm() <= 1e-12 * base.inputs.norm());
  CHECK((swapped.transfer - base.transfer).norm() <= 1e-9 * base.transfer.norm());
}

TEST_CASE("transfer json carries every factor") {
  const auto r = characterize(canonical_double_slit());
  const auto j = to_json(r);
  for (const char* key : {"X", "Y", "T", "U", "P", "TTdagger", "unitarity_defect", "condition_number", "splitter_ratio"})
    CHECK(j.contains(key));
  CHECK((matrix_from_json(j["T"]) - r.transfer).norm() <= 1e-14 * r.transfer.norm());
}
