// Copyright (c) 2026 The tdsc developers
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "tds/errors.hpp"

namespace tds::numkernel {

using Complex = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

/// One finite eigenvalue of a pencil S v = lambda P v. The right eigenvector
/// has unit 2-norm; the left one is only filled on request.
struct EigPair {
  Complex value;
  VectorXcd right;
  VectorXcd left;  // empty unless requested
};

struct GeneralizedEigs {
  std::vector<EigPair> pairs;
  int infinite_count = 0;
};

/// All finite eigenvalues of the real pencil (S, P) via the QZ algorithm
/// (LAPACK dggev). Eigenvalues with a vanishing beta in the (alpha, beta)
/// representation are counted as infinite and dropped.
GeneralizedEigs generalized_eigs(const MatrixXd& S, const MatrixXd& P,
                                 bool want_right = true, bool want_left = false);

/// Eigenvalues only; cheaper when vectors are not needed.
std::vector<Complex> generalized_eigvals(const MatrixXd& S, const MatrixXd& P,
                                         int* infinite_count = nullptr);

struct NullspaceSplit {
  MatrixXd U;      // n x nu, orthonormal basis of the left null space of E
  MatrixXd Uperp;  // n x (n-nu), orthonormal complement
  MatrixXd V;      // n x nu, orthonormal basis of the right null space of E
  MatrixXd Vperp;  // n x (n-nu)
  int rank = 0;
};

/// SVD-based splitting E = Uperp * diag(sigma) * Vperp^T with U^T E = 0 and
/// E V = 0. Singular values below n * sigma_1 * eps * 64 count as zero.
NullspaceSplit nullspace_split(const MatrixXd& E);

/// Chebyshev extreme (Gauss-Lobatto) collocation grid on [a, b]. Points are
/// ordered strictly decreasing from b to a so that theta = b sits first.
struct ChebGrid {
  int degree = 0;
  double a = 0.0, b = 0.0;
  VectorXd points;  // size degree+1
  MatrixXd diff;    // (degree+1) x (degree+1) differentiation matrix
};

ChebGrid cheb_grid(int degree, double a, double b);

/// Row of barycentric interpolation weights for evaluating the collocation
/// polynomial at theta; exact at grid points and for polynomials of degree
/// <= N. theta may exceed the interval by at most 1e-14.
VectorXd barycentric_weights_row(const ChebGrid& grid, double theta);

inline double barycentric_eval(const ChebGrid& grid, const VectorXd& samples, double theta) {
  return barycentric_weights_row(grid, theta).dot(samples);
}

}  // namespace tds::numkernel
