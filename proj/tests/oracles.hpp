// Copyright (c) 2026 The tdsc developers
// SPDX-License-Identifier: Apache-2.0
//
// Independent reference computations used by the test suites. Everything in
// here deliberately avoids the library's own solution paths: scalar Newton
// iterations, determinant fitting and companion-matrix root finding only.

#pragma once

#include <Eigen/Dense>
#include <complex>
#include <random>
#include <vector>

namespace oracles {

using Complex = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

/// Scalar quasi-polynomial f(s) = sum_k (sum_i P(k,i) s^(n-i)) e^{-s tau_k}.
struct ScalarQp {
  MatrixXd P;
  VectorXd tau;

  Complex eval(Complex s) const {
    const int n = static_cast<int>(P.cols()) - 1;
    Complex f = 0.0;
    for (int k = 0; k < P.rows(); ++k) {
      Complex poly = 0.0;
      for (int i = 0; i <= n; ++i) poly = poly * s + P(k, i);
      f += poly * std::exp(-s * tau(k));
    }
    return f;
  }

  Complex deriv(Complex s) const {
    const int n = static_cast<int>(P.cols()) - 1;
    Complex f = 0.0;
    for (int k = 0; k < P.rows(); ++k) {
      Complex poly = 0.0, dpoly = 0.0;
      for (int i = 0; i <= n; ++i) {
        dpoly = dpoly * s + poly;
        poly = poly * s + P(k, i);
      }
      f += (dpoly - tau(k) * poly) * std::exp(-s * tau(k));
    }
    return f;
  }
};

/// Newton iteration on a scalar quasi-polynomial from a given start point.
inline bool qp_newton(const ScalarQp& qp, Complex start, Complex* root,
                      double tol = 1e-13, int maxit = 100) {
  Complex s = start;
  for (int it = 0; it < maxit; ++it) {
    Complex f = qp.eval(s);
    if (std::abs(f) <= tol) {
      *root = s;
      return true;
    }
    Complex d = qp.deriv(s);
    if (std::abs(d) == 0.0) return false;
    s -= f / d;
    if (!std::isfinite(s.real()) || !std::isfinite(s.imag())) return false;
  }
  *root = s;
  return std::abs(qp.eval(s)) <= 1e3 * tol;
}

/// Roots of a complex polynomial (coefficients highest power first) via the
/// companion matrix.
inline std::vector<Complex> poly_roots(std::vector<Complex> coeff) {
  while (!coeff.empty() && std::abs(coeff.front()) == 0.0) coeff.erase(coeff.begin());
  const int n = static_cast<int>(coeff.size()) - 1;
  std::vector<Complex> out;
  if (n < 1) return out;
  MatrixXcd C = MatrixXcd::Zero(n, n);
  for (int i = 1; i < n; ++i) C(i, i - 1) = 1.0;
  for (int i = 0; i < n; ++i) C(0, i) = -coeff[i + 1] / coeff[0];
  Eigen::ComplexEigenSolver<MatrixXcd> es(C, false);
  for (int i = 0; i < n; ++i) out.push_back(es.eigenvalues()(i));
  return out;
}

/// Coefficients of det(S - lambda P) (highest power first) by evaluating the
/// determinant at n+1 sample points and solving the Vandermonde system.
inline std::vector<Complex> det_pencil_coeffs(const MatrixXd& S, const MatrixXd& P) {
  const int n = static_cast<int>(S.rows());
  std::vector<Complex> pts;
  for (int i = 0; i <= n; ++i)
    pts.push_back(Complex(2.3 * std::cos(M_PI * i / n + 0.3), 1.7 * std::sin(M_PI * i / n)));
  MatrixXcd V(n + 1, n + 1);
  VectorXcd rhs(n + 1);
  for (int i = 0; i <= n; ++i) {
    Complex x = pts[i];
    Complex p = 1.0;
    for (int j = n; j >= 0; --j) {
      V(i, j) = p;
      p *= x;
    }
    MatrixXcd M = S.cast<Complex>() - x * P.cast<Complex>();
    rhs(i) = M.determinant();
  }
  VectorXcd c = V.colPivHouseholderQr().solve(rhs);
  // Column j holds x^(n-j), so c(0) already multiplies the highest power.
  std::vector<Complex> coeff(n + 1);
  for (int j = 0; j <= n; ++j) coeff[j] = c(j);
  return coeff;
}

/// Greedy multiset distance: max over elements of the distance to its
/// (unique) nearest unmatched partner; infinity on size mismatch.
inline double multiset_distance(std::vector<Complex> a, std::vector<Complex> b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  std::vector<bool> used(b.size(), false);
  for (Complex z : a) {
    double best = std::numeric_limits<double>::infinity();
    int jbest = -1;
    for (size_t j = 0; j < b.size(); ++j) {
      if (used[j]) continue;
      double d = std::abs(b[j] - z);
      if (d < best) {
        best = d;
        jbest = static_cast<int>(j);
      }
    }
    if (jbest < 0) return std::numeric_limits<double>::infinity();
    used[jbest] = true;
    worst = std::max(worst, best);
  }
  return worst;
}

inline std::mt19937_64 rng(unsigned long long seed) { return std::mt19937_64(seed); }

inline MatrixXd random_matrix(std::mt19937_64& gen, int rows, int cols, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = d(gen);
  return m;
}

}  // namespace oracles
