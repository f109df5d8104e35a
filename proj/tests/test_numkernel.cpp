// Copyright (c) 2026 The tdsc developers
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "tds/numkernel.hpp"

using namespace tds::numkernel;
using oracles::multiset_distance;

TEST_CASE("generalized_eigs: diagonal pencil") {
  MatrixXd S = MatrixXd::Zero(2, 2);
  S(0, 0) = 2.0;
  S(1, 1) = 3.0;
  auto r = generalized_eigs(S, MatrixXd::Identity(2, 2));
  REQUIRE(r.pairs.size() == 2);
  std::vector<Complex> vals{r.pairs[0].value, r.pairs[1].value};
  CHECK(multiset_distance(vals, {Complex(2, 0), Complex(3, 0)}) < 1e-12);
  CHECK(r.infinite_count == 0);
}

TEST_CASE("generalized_eigs: singular P gives one infinite eigenvalue") {
  MatrixXd P = MatrixXd::Zero(2, 2);
  P(0, 0) = 1.0;
  auto r = generalized_eigs(MatrixXd::Identity(2, 2), P);
  REQUIRE(r.pairs.size() == 1);
  CHECK(std::abs(r.pairs[0].value - Complex(1, 0)) < 1e-12);
  CHECK(r.infinite_count == 1);
}

TEST_CASE("generalized_eigs: random 8x8 pencil against determinant oracle") {
  auto gen = oracles::rng(7);
  MatrixXd S = oracles::random_matrix(gen, 8, 8);
  MatrixXd P = oracles::random_matrix(gen, 8, 8);
  auto r = generalized_eigs(S, P);
  auto expected = oracles::poly_roots(oracles::det_pencil_coeffs(S, P));
  std::vector<Complex> got;
  for (const auto& p : r.pairs) got.push_back(p.value);
  CHECK(multiset_distance(got, expected) < 1e-8);
}

TEST_CASE("generalized_eigs: residual contract and P = I agreement") {
  auto gen = oracles::rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    int n = 3 + static_cast<int>(gen() % 5);
    MatrixXd A = oracles::random_matrix(gen, n, n);
    auto r = generalized_eigs(A, MatrixXd::Identity(n, n));
    REQUIRE(static_cast<int>(r.pairs.size()) == n);
    std::vector<Complex> got;
    for (const auto& p : r.pairs) {
      got.push_back(p.value);
      REQUIRE(p.right.size() == n);
      CHECK(p.right.norm() == doctest::Approx(1.0).epsilon(1e-12));
      double resid = (A.cast<Complex>() * p.right - p.value * p.right).norm();
      CHECK(resid <= 1e-10 * (A.norm() + std::abs(p.value)));
    }
    Eigen::EigenSolver<MatrixXd> es(A, false);
    std::vector<Complex> expected;
    for (int i = 0; i < n; ++i) expected.push_back(es.eigenvalues()(i));
    CHECK(multiset_distance(got, expected) < 1e-9 * (1.0 + A.norm()));
  }
}

TEST_CASE("generalized_eigs: left eigenvectors on request") {
  auto gen = oracles::rng(23);
  MatrixXd S = oracles::random_matrix(gen, 5, 5);
  MatrixXd P = MatrixXd::Identity(5, 5) + 0.1 * oracles::random_matrix(gen, 5, 5);
  auto r = generalized_eigs(S, P, true, true);
  for (const auto& p : r.pairs) {
    double resid = (p.left.adjoint() * S.cast<Complex>() -
                    p.value * (p.left.adjoint() * P.cast<Complex>()))
                       .norm();
    CHECK(resid <= 1e-9 * (S.norm() + std::abs(p.value) * P.norm()));
  }
}

TEST_CASE("nullspace_split: examples and orthonormality") {
  SUBCASE("rank-1 nilpotent") {
    MatrixXd E(2, 2);
    E << 0, 1, 0, 0;
    auto s = nullspace_split(E);
    CHECK(s.rank == 1);
    CHECK((s.U.transpose() * E).norm() < 1e-12);
    CHECK((E * s.V).norm() < 1e-12);
    // Right null space is e1, left null space is e2 (up to sign).
    CHECK(std::abs(std::abs(s.V(0, 0)) - 1.0) < 1e-12);
    CHECK(std::abs(std::abs(s.U(1, 0)) - 1.0) < 1e-12);
    MatrixXd core = s.Uperp.transpose() * E * s.Vperp;
    CHECK(std::abs(core.determinant()) > 1e-12);
  }
  SUBCASE("identity") {
    auto s = nullspace_split(MatrixXd::Identity(3, 3));
    CHECK(s.rank == 3);
    CHECK(s.U.cols() == 0);
    CHECK(s.V.cols() == 0);
  }
  SUBCASE("zero matrix") {
    auto s = nullspace_split(MatrixXd::Zero(3, 3));
    CHECK(s.rank == 0);
    CHECK(s.U.cols() == 3);
    CHECK((s.U.transpose() * s.U - MatrixXd::Identity(3, 3)).norm() < 1e-12);
  }
  SUBCASE("orthonormal bases on random singular matrices") {
    auto gen = oracles::rng(3);
    for (int trial = 0; trial < 10; ++trial) {
      MatrixXd L = oracles::random_matrix(gen, 5, 3);
      MatrixXd R = oracles::random_matrix(gen, 3, 5);
      MatrixXd E = L * R;  // rank <= 3
      auto s = nullspace_split(E);
      CHECK(s.rank == 3);
      CHECK((s.U.transpose() * s.U - MatrixXd::Identity(s.U.cols(), s.U.cols())).norm() < 1e-12);
      CHECK((s.V.transpose() * s.V - MatrixXd::Identity(s.V.cols(), s.V.cols())).norm() < 1e-12);
      CHECK((s.Uperp.transpose() * s.Uperp - MatrixXd::Identity(3, 3)).norm() < 1e-12);
      CHECK((s.Vperp.transpose() * s.Vperp - MatrixXd::Identity(3, 3)).norm() < 1e-12);
      CHECK((s.U.transpose() * E).norm() < 1e-10 * E.norm());
      CHECK((E * s.V).norm() < 1e-10 * E.norm());
    }
  }
}

TEST_CASE("cheb_grid: two-point grid is the finite difference") {
  auto g = cheb_grid(1, -1.0, 0.0);
  CHECK(g.points(0) == 0.0);
  CHECK(g.points(1) == -1.0);
  MatrixXd expect(2, 2);
  expect << 1, -1, 1, -1;
  CHECK((g.diff - expect).norm() < 1e-14);
}

TEST_CASE("cheb_grid: exact derivative for polynomials") {
  auto g = cheb_grid(8, -2.0, 0.0);
  VectorXd f(9), df_true(9);
  for (int i = 0; i <= 8; ++i) {
    double t = g.points(i);
    f(i) = t * t * t;
    df_true(i) = 3.0 * t * t;
  }
  CHECK(((g.diff * f) - df_true).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("cheb_grid: spectral accuracy on exp") {
  auto g = cheb_grid(32, -1.0, 0.0);
  VectorXd f(33), df_true(33);
  for (int i = 0; i <= 32; ++i) {
    f(i) = std::exp(2.0 * g.points(i));
    df_true(i) = 2.0 * std::exp(2.0 * g.points(i));
  }
  CHECK(((g.diff * f) - df_true).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("cheb_grid: differentiation matrix rows sum to zero") {
  for (int N : {4, 16, 64}) {
    auto g = cheb_grid(N, -3.0, 0.0);
    VectorXd ones = VectorXd::Ones(N + 1);
    CHECK((g.diff * ones).cwiseAbs().maxCoeff() < 1e-12 * g.diff.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("barycentric evaluation") {
  auto g = cheb_grid(8, -1.0, 0.0);
  SUBCASE("grid point is exact") {
    VectorXd f = VectorXd::Random(9);
    for (int i = 0; i <= 8; ++i) CHECK(barycentric_eval(g, f, g.points(i)) == f(i));
  }
  SUBCASE("degree-3 polynomial off the grid") {
    VectorXd f(9);
    auto poly = [](double t) { return 2.0 * t * t * t - t + 0.25; };
    for (int i = 0; i <= 8; ++i) f(i) = poly(g.points(i));
    CHECK(std::abs(barycentric_eval(g, f, -0.37) - poly(-0.37)) < 1e-13);
  }
  SUBCASE("exp on a finer grid") {
    auto g20 = cheb_grid(20, -1.0, 0.0);
    VectorXd f(21);
    for (int i = 0; i <= 20; ++i) f(i) = std::exp(g20.points(i));
    CHECK(std::abs(barycentric_eval(g20, f, -0.5) - std::exp(-0.5)) < 1e-12);
  }
  SUBCASE("outside the interval") {
    VectorXd f = VectorXd::Ones(9);
    CHECK_THROWS_AS((void)barycentric_eval(g, f, 0.5), tds::Error);
  }
}
