// Copyright (c) 2026 The tdsc developers
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "tds/model.hpp"
#include "tds/spectrum.hpp"

namespace tds::strongstab {

using model::DelayDifferencePart;
using model::TdsSystem;

struct GammaROptions {
  int Ntheta = 10;
  bool quiet = false;
};

struct CdOptions {
  double tol = 1e-10;
  int Ntheta = 10;
  double CD0 = 0.0;
  bool quiet = false;
};

/// gamma(r) = max over phase angles of the spectral radius of
/// sum_k (A_1^(22))^{-1} A_k^(22) e^{-r h_k} e^{j theta_k}; grid prediction
/// followed by a Gauss-Newton correction of the stationarity system.
double gamma_r(const DelayDifferencePart& part, double r, const GammaROptions& opts = {});

/// gamma(r) together with the maximizing angles (one per delayed
/// coefficient, the first pinned at zero).
struct GammaRResult {
  double value = 0.0;
  Eigen::VectorXd theta;
};
GammaRResult gamma_r_detailed(const DelayDifferencePart& part, double r,
                              const GammaROptions& opts = {});

/// Strong spectral abscissa of the delay difference part: the unique zero of
/// gamma(r) - 1. Returns -inf for essentially retarded parts, and +/-inf when
/// only infinitesimal delays remain (the sign decided by gamma against 1).
double cd(const DelayDifferencePart& part, const CdOptions& opts = {});

/// Strong spectral abscissa of the full system: max of C_D and the real parts
/// of the characteristic roots right of max(r, C_D + guard).
double strong_sa(const TdsSystem& sys, double r, const spectrum::RootsOptions& roots_opts = {},
                 const CdOptions& cd_opts = {});

}  // namespace tds::strongstab
