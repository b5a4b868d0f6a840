#include "doctest.h"
#include "oracles.hpp"

#include "sgqif/correlation.hpp"
#include "sgqif/error.hpp"

#include <cmath>
#include <random>

using namespace sgqif;

namespace {

Matrix m2_exchangeable() {
  Matrix m(3, 3);
  m << 0, 1, 1, 1, 0, 1, 1, 1, 0;
  return m;
}

Matrix m2_ar1() {
  Matrix m(3, 3);
  m << 0, 1, 0, 1, 0, 1, 0, 1, 0;
  return m;
}

}  // namespace

TEST_SUITE("correlation") {

TEST_CASE("basis examples at k = 3") {
  const auto ind = basis_matrices({CorrelationKind::Independence}, 3);
  REQUIRE(ind.size() == 1);
  CHECK(ind[0] == Matrix::Identity(3, 3));

  const auto exch = basis_matrices({CorrelationKind::Exchangeable}, 3);
  REQUIRE(exch.size() == 2);
  CHECK(exch[0] == Matrix::Identity(3, 3));
  CHECK(exch[1] == m2_exchangeable());

  const auto ar1 = basis_matrices({CorrelationKind::Ar1}, 3);
  REQUIRE(ar1.size() == 2);
  CHECK(ar1[1] == m2_ar1());
}

TEST_CASE("basis count matches kind") {
  CHECK(WorkingCorrelation{CorrelationKind::Independence}.basis_count() == 1);
  CHECK(WorkingCorrelation{CorrelationKind::Exchangeable}.basis_count() == 2);
  CHECK(WorkingCorrelation{CorrelationKind::Ar1}.basis_count() == 2);
}

TEST_CASE("exchangeable inverse at k = 3, rho = 0.5 is a I + b M2") {
  const Matrix inv = oracle::exchangeable_corr(3, 0.5).inverse();
  CHECK(oracle::span_residual(inv, basis_matrices({CorrelationKind::Exchangeable}, 3)) < 1e-10);
}

TEST_CASE("span property: independence and exchangeable are exact") {
  for (int k = 2; k <= 6; ++k) {
    for (double rho : {0.2, 0.5, 0.8}) {
      CAPTURE(k);
      CAPTURE(rho);
      CHECK(oracle::span_residual(Matrix::Identity(k, k), basis_matrices({CorrelationKind::Independence}, k)) < 1e-8);
      const Matrix inv = oracle::exchangeable_corr(k, rho).inverse();
      CHECK(oracle::span_residual(inv, basis_matrices({CorrelationKind::Exchangeable}, k)) < 1e-8);
    }
  }
}

// The AR-1 inverse is tridiagonal but its first and last diagonal entries are
// 1/(1-rho^2) while the interior ones are (1+rho^2)/(1-rho^2). Two bases
// cannot carry that, so the residual is rho^2 sqrt(2(k-2)/k) / (1-rho^2).
TEST_CASE("span property: ar1 two-basis residual is the corner correction") {
  for (int k = 2; k <= 6; ++k) {
    for (double rho : {0.2, 0.5, 0.8}) {
      CAPTURE(k);
      CAPTURE(rho);
      const Matrix inv = oracle::ar1_corr(k, rho).inverse();
      const auto basis = basis_matrices({CorrelationKind::Ar1}, k);
      const double want = rho * rho * std::sqrt(2.0 * (k - 2) / k) / (1.0 - rho * rho);
      CHECK(oracle::span_residual(inv, basis) == doctest::Approx(want).epsilon(1e-9));
      auto with_corner = basis;
      Matrix corner = Matrix::Zero(k, k);
      corner(0, 0) = corner(k - 1, k - 1) = 1.0;
      with_corner.push_back(corner);
      CHECK(oracle::span_residual(inv, with_corner) < 1e-8);
    }
  }
}

TEST_CASE("ar1 inverse is exactly tridiagonal") {
  const Matrix inv = oracle::ar1_corr(5, 0.5).inverse();
  for (int a = 0; a < 5; ++a)
    for (int b = 0; b < 5; ++b)
      if (std::abs(a - b) > 1) CHECK(std::abs(inv(a, b)) < 1e-12);
}

TEST_CASE("transform examples") {
  const ClusterTransform t(0, 3, {0, 2});
  Vector v(3);
  v << 1.5, -2.0, 7.0;
  Vector want(2);
  want << 1.5, 7.0;
  CHECK(apply_transform(t, v) == want);
  CHECK(apply_transform(t, Matrix(Matrix::Identity(3, 3))) == Matrix::Identity(2, 2));

  const auto id = ClusterTransform::identity(0, 3);
  CHECK(id.is_identity());
  CHECK(apply_transform(id, v) == v);
  const Matrix a = oracle::ar1_corr(3, 0.3);
  CHECK(apply_transform(id, a) == a);
}

TEST_CASE("transform matches dense selection products") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  const int k = 6;
  const std::vector<int> kept{0, 2, 3, 5};
  const ClusterTransform t(0, k, kept);
  const Matrix s = oracle::selection_matrix(k, kept);
  Matrix a(k, k), w(k, 4);
  Vector v(k);
  for (Index c = 0; c < a.size(); ++c) a.data()[c] = normal(rng);
  for (Index c = 0; c < w.size(); ++c) w.data()[c] = normal(rng);
  for (Index c = 0; c < k; ++c) v(c) = normal(rng);
  CHECK(apply_transform(t, a) == s * a * s.transpose());
  CHECK(restrict_rows(t, w) == s * w);
  CHECK(apply_transform(t, v) == s * v);
}

TEST_CASE("restriction keeps positive definiteness") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 20; ++trial) {
    const int k = 5;
    Matrix b(k, k);
    for (Index c = 0; c < b.size(); ++c) b.data()[c] = normal(rng);
    Matrix a = b * b.transpose() + 0.1 * Matrix::Identity(k, k);
    a = (0.5 * (a + a.transpose())).eval();
    std::vector<int> kept;
    for (int j = 0; j < k; ++j)
      if (normal(rng) > -0.3 || kept.empty()) kept.push_back(j);
    const Matrix r = apply_transform(ClusterTransform(0, k, kept), a);
    CHECK(r == r.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(r);
    CHECK(eig.eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("transform rejects bad kept lists") {
  CHECK_THROWS_AS(ClusterTransform(0, 3, {}), Error);
  CHECK_THROWS_AS(ClusterTransform(0, 3, {0, 0}), Error);
  CHECK_THROWS_AS(ClusterTransform(0, 3, {2, 1}), Error);
  CHECK_THROWS_AS(ClusterTransform(0, 3, {3}), Error);
}

TEST_CASE("structure names round trip") {
  for (auto kind : {CorrelationKind::Independence, CorrelationKind::Exchangeable, CorrelationKind::Ar1})
    CHECK(parse_correlation(to_string(kind)) == kind);
  CHECK_THROWS_AS(parse_correlation("unstructured"), Error);
}

}
