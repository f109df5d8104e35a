// Copyright (c) 2026 The tdsc developers
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <vector>

#include "tds/model.hpp"
#include "tds/spectrum.hpp"
#include "tds/strongstab.hpp"

namespace tds::freqresp {

using model::StandardForm;
using model::TdsSystem;
using numkernel::Complex;
using numkernel::MatrixXcd;

struct HinfOptions {
  int Ntheta = 20;
  int fix_N = 20;
  std::vector<double> omega_init = {0.0};
  double pred_tol = 1e-3;
  double newton_tol = 1e-6;
  spectrum::RootsOptions roots;   // stability gate
  strongstab::CdOptions cd;
  bool quiet = false;
};

struct HinfResult {
  double hinf = 0.0;
  double wpeak = 0.0;  // inf when the asymptotic norm dominates, NaN when unstable
  double asymptotic_norm = 0.0;
  Eigen::VectorXd theta_peak;  // maximizing angles of the asymptotic norm
  bool large_correction = false;
};

/// T_zw(s) through the standard form; one complex solve per call.
MatrixXcd transfer_eval(const TdsSystem& sys, Complex s);
MatrixXcd transfer_eval(const StandardForm& sf, Complex s);

/// Singular values of the frequency response; column k belongs to omegas[k],
/// sorted descending. Columns where the response is singular are NaN-filled.
Eigen::MatrixXd sigma(const TdsSystem& sys, const std::vector<double>& omegas);

/// Asymptotic part of a standard form: the difference-equation coefficients
/// together with the projected input/output matrices.
struct AsymptoticPart {
  model::DelayTermList A22;  // zero-delay coefficient first
  Eigen::MatrixXd B2;        // U^T B_s
  Eigen::MatrixXd C2;        // C_s V
  bool trivial = false;      // identically zero transfer function
};
AsymptoticPart asymptotic_part(const StandardForm& sf);

struct AsymptoticNorm {
  double value = 0.0;
  Eigen::VectorXd theta;
};

/// Strong H-infinity norm of the asymptotic transfer function by a grid over
/// the phase torus plus a damped Newton ascent of the leading singular value.
AsymptoticNorm hinf_asymptotic(const AsymptoticPart& part, const HinfOptions& opts = {});
AsymptoticNorm hinf_asymptotic(const TdsSystem& sys, const HinfOptions& opts = {});

/// Finite-frequency peak of a (strongly stable) standard form: BBBS level
/// sets on the collocation descriptor approximation, levels re-evaluated on
/// the true system, then a Newton correction of the peak.
struct FinitePeak {
  double sigma = -1.0;
  double omega = 0.0;
  bool large_correction = false;
};
FinitePeak finite_peak(const StandardForm& sf, double floor_level, const HinfOptions& opts = {});

/// Derivative of the top singular value of T(j w) with respect to w.
double sigma_derivative(const StandardForm& sf, double omega);

/// Strong H-infinity norm: stability gate, asymptotic norm, BBBS level-set
/// iteration on a collocation descriptor approximation with true-system level
/// re-evaluation, and a final Newton correction of the finite peak.
HinfResult hinfnorm(const TdsSystem& sys, const HinfOptions& opts = {});

}  // namespace tds::freqresp
