// Copyright (c) 2026 The tdsc developers
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <optional>
#include <vector>

#include "tds/model.hpp"
#include "tds/numkernel.hpp"

namespace tds::spectrum {

using model::TdsSystem;
using numkernel::Complex;
using numkernel::MatrixXd;
using numkernel::VectorXcd;

/// Right half-plane {Re >= r} or closed rectangle [re_min, re_max] x
/// j [im_min, im_max].
struct Region {
  enum class Kind { HalfPlane, Rectangle } kind = Kind::HalfPlane;
  double re_min = 0.0;
  double re_max = 0.0;  // unused for half-planes
  double im_min = 0.0, im_max = 0.0;

  static Region half_plane(double r);
  static Region rectangle(double re_min, double re_max, double im_min, double im_max);
  bool contains(Complex z) const;
  Region inflated(double frac) const;  // pre-filter margin
  bool is_half_plane() const { return kind == Kind::HalfPlane; }
};

struct RootsOptions {
  int max_size_evp = 600;
  std::optional<int> fix_N;
  double newton_tol = 1e-10;
  int newton_max_iter = 20;
  std::optional<double> commensurate_basic_delay;
  bool quiet = false;
  unsigned long long seed = 0;
};

struct SpectrumInfo {
  int N = 0;
  int N_original = 0;
  bool max_size_evp_enforced = false;
  bool gamma_r_exceeds_one = false;
  bool delay_free_fallback = false;
  std::vector<Complex> newton_initial_guesses;
  std::vector<Complex> newton_final_values;
  std::vector<double> newton_residuals;
  std::vector<int> newton_unconverged_initial_guesses;
  std::vector<int> newton_large_corrections;
};

struct SpectrumResult {
  std::vector<Complex> roots;  // deduplicated, inside the region, sorted
  std::vector<Complex> raw;    // all finite discretization eigenvalues
  SpectrumInfo info;
};

/// Collocation pencil (Sigma_N, Pi_N) of dimension (N+1) n whose finite
/// eigenvalues approximate the characteristic roots. The unknowns are state
/// samples on a Chebyshev extreme grid over [-tau_max, 0]; the theta = 0
/// block row carries the splicing condition through E (which may be
/// singular), all other block rows impose the differentiation identity.
struct Pencil {
  MatrixXd Sigma;
  MatrixXd Pi;
};
Pencil discretize(const TdsSystem& sys, int N);

struct DegreeChoice {
  int N = 1;
  int N_original = 1;
  bool max_size_evp_enforced = false;
  bool gamma_r_exceeds_one = false;
  bool delay_free = false;
};
DegreeChoice choose_degree(const TdsSystem& sys, const Region& region, const RootsOptions& opts);

struct NewtonResult {
  Complex lambda;
  double residual = 0.0;
  bool converged = false;
  VectorXcd v;  // right null vector of the characteristic matrix at lambda
};
NewtonResult newton_correct(const TdsSystem& sys, Complex lambda0, const RootsOptions& opts);

SpectrumResult roots(const TdsSystem& sys, const Region& region, const RootsOptions& opts = {});

/// Spectral abscissa: max real part over roots in {Re >= r}; -inf when the
/// half-plane holds no characteristic root.
double sa(const TdsSystem& sys, double r, const RootsOptions& opts = {});

/// Transmission zeros of a SISO system inside a rectangle, computed as
/// characteristic roots of the bordered DDAE.
std::vector<Complex> tzeros(const TdsSystem& sys, const Region& rect, const RootsOptions& opts = {});

}  // namespace tds::spectrum
