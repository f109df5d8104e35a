// Copyright (c) 2026 The tdsc developers
// SPDX-License-Identifier: Apache-2.0

#include "tds/numkernel.hpp"

#include <lapacke.h>

#include <cmath>
#include <limits>

namespace tds::numkernel {

GeneralizedEigs generalized_eigs(const MatrixXd& S, const MatrixXd& P, bool want_right,
                                 bool want_left) {
  if (S.rows() != S.cols() || P.rows() != P.cols() || S.rows() != P.rows())
    fail(Errc::DimensionMismatch, "pencil matrices must be square and of equal size");
  const int n = static_cast<int>(S.rows());
  GeneralizedEigs out;
  if (n == 0) return out;

  MatrixXd a = S, b = P;  // dggev overwrites
  VectorXd alphar(n), alphai(n), beta(n);
  MatrixXd vl(want_left ? n : 1, want_left ? n : 1);
  MatrixXd vr(want_right ? n : 1, want_right ? n : 1);
  int info = LAPACKE_dggev(LAPACK_COL_MAJOR, want_left ? 'V' : 'N', want_right ? 'V' : 'N', n,
                           a.data(), n, b.data(), n, alphar.data(), alphai.data(), beta.data(),
                           vl.data(), static_cast<int>(vl.rows()), vr.data(),
                           static_cast<int>(vr.rows()));
  if (info != 0) fail(Errc::IterationFailure, "dggev failed with info = " + std::to_string(info));

  const double beta_tol = 64.0 * std::numeric_limits<double>::epsilon() *
                          std::max(1.0, P.cwiseAbs().maxCoeff());
  auto column_pair = [&](const MatrixXd& v, int j) {
    VectorXcd c(n);
    if (alphai[j] == 0.0) {
      for (int i = 0; i < n; ++i) c[i] = Complex(v(i, j), 0.0);
    } else {
      // LAPACK packs a complex conjugate pair into columns j (real part) and
      // j+1 (imaginary part of the first member).
      const int jr = (alphai[j] > 0.0) ? j : j - 1;
      const double s = (alphai[j] > 0.0) ? 1.0 : -1.0;
      for (int i = 0; i < n; ++i) c[i] = Complex(v(i, jr), s * v(i, jr + 1));
    }
    double nrm = c.norm();
    if (nrm > 0) c /= nrm;
    return c;
  };

  for (int j = 0; j < n; ++j) {
    if (std::abs(beta[j]) <= beta_tol) {
      ++out.infinite_count;
      continue;
    }
    EigPair p;
    p.value = Complex(alphar[j], alphai[j]) / beta[j];
    if (want_right) p.right = column_pair(vr, j);
    if (want_left) p.left = column_pair(vl, j);
    out.pairs.push_back(std::move(p));
  }
  return out;
}

std::vector<Complex> generalized_eigvals(const MatrixXd& S, const MatrixXd& P,
                                         int* infinite_count) {
  if (S.rows() != S.cols() || P.rows() != P.cols() || S.rows() != P.rows())
    fail(Errc::DimensionMismatch, "pencil matrices must be square and of equal size");
  const int n = static_cast<int>(S.rows());
  std::vector<Complex> vals;
  if (infinite_count) *infinite_count = 0;
  if (n == 0) return vals;

  MatrixXd a = S, b = P;
  VectorXd alphar(n), alphai(n), beta(n);
  double dummy = 0;
  int info = LAPACKE_dggev(LAPACK_COL_MAJOR, 'N', 'N', n, a.data(), n, b.data(), n, alphar.data(),
                           alphai.data(), beta.data(), &dummy, 1, &dummy, 1);
  if (info != 0) fail(Errc::IterationFailure, "dggev failed with info = " + std::to_string(info));

  const double beta_tol = 64.0 * std::numeric_limits<double>::epsilon() *
                          std::max(1.0, P.cwiseAbs().maxCoeff());
  vals.reserve(n);
  for (int j = 0; j < n; ++j) {
    if (std::abs(beta[j]) <= beta_tol) {
      if (infinite_count) ++*infinite_count;
      continue;
    }
    vals.emplace_back(Complex(alphar[j], alphai[j]) / beta[j]);
  }
  return vals;
}

NullspaceSplit nullspace_split(const MatrixXd& E) {
  if (E.rows() != E.cols()) fail(Errc::DimensionMismatch, "E must be square");
  const int n = static_cast<int>(E.rows());
  NullspaceSplit out;
  if (n == 0) return out;

  Eigen::JacobiSVD<MatrixXd> svd(E, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const VectorXd& sv = svd.singularValues();
  const double tol =
      n * sv(0) * std::numeric_limits<double>::epsilon() * 64.0;
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > tol) ++rank;
  out.rank = rank;
  out.Uperp = svd.matrixU().leftCols(rank);
  out.U = svd.matrixU().rightCols(n - rank);
  out.Vperp = svd.matrixV().leftCols(rank);
  out.V = svd.matrixV().rightCols(n - rank);
  return out;
}

ChebGrid cheb_grid(int degree, double a, double b) {
  if (degree < 1) fail(Errc::DimensionMismatch, "Chebyshev degree must be >= 1");
  if (!(a < b)) fail(Errc::DimensionMismatch, "degenerate interval");
  ChebGrid g;
  g.degree = degree;
  g.a = a;
  g.b = b;
  const int N = degree;
  g.points.resize(N + 1);
  // x_i = cos(i pi / N) runs from 1 down to -1; map to [a, b].
  for (int i = 0; i <= N; ++i) {
    double x = std::cos(M_PI * i / N);
    g.points(i) = 0.5 * (a + b) + 0.5 * (b - a) * x;
  }
  g.points(0) = b;
  g.points(N) = a;

  // Trefethen's differentiation matrix, diagonal by the negative-sum trick.
  MatrixXd D(N + 1, N + 1);
  auto c = [N](int i) { return (i == 0 || i == N) ? 2.0 : 1.0; };
  for (int i = 0; i <= N; ++i) {
    for (int j = 0; j <= N; ++j) {
      if (i == j) continue;
      double sign = ((i + j) % 2 == 0) ? 1.0 : -1.0;
      D(i, j) = (c(i) / c(j)) * sign / (g.points(i) - g.points(j));
    }
  }
  for (int i = 0; i <= N; ++i) {
    double s = 0.0;
    for (int j = 0; j <= N; ++j)
      if (j != i) s += D(i, j);
    D(i, i) = -s;
  }
  g.diff = std::move(D);
  return g;
}

VectorXd barycentric_weights_row(const ChebGrid& grid, double theta) {
  const int N = grid.degree;
  const double slack = 1e-14 * (1.0 + std::abs(grid.a) + std::abs(grid.b));
  if (theta < grid.a - slack || theta > grid.b + slack)
    fail(Errc::OutOfInterval, "interpolation point outside the grid interval");
  theta = std::min(std::max(theta, grid.a), grid.b);

  VectorXd row = VectorXd::Zero(N + 1);
  // Barycentric weights for Chebyshev extreme points: (-1)^i, halved at ends.
  double denom = 0.0;
  for (int i = 0; i <= N; ++i) {
    double d = theta - grid.points(i);
    if (d == 0.0) {
      row.setZero();
      row(i) = 1.0;
      return row;
    }
    double w = ((i % 2 == 0) ? 1.0 : -1.0) * ((i == 0 || i == N) ? 0.5 : 1.0);
    row(i) = w / d;
    denom += row(i);
  }
  row /= denom;
  return row;
}

}  // namespace tds::numkernel
