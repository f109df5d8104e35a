// Copyright (c) 2026 The tdsc developers
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "tds/errors.hpp"
#include "tds/numkernel.hpp"

namespace tds::model {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// One coefficient matrix acting at a fixed delay. `infinitesimal` marks a
/// 0+ delay: it evaluates as zero in the characteristic function but counts
/// as a (vanishingly small) positive delay in the delay difference equation,
/// which is how an infinitesimal feedback delay enters closed loops.
struct DelayTerm {
  MatrixXd matrix;
  double delay = 0.0;
  bool infinitesimal = false;

  double effective_delay() const { return infinitesimal ? 0.0 : delay; }
};

using DelayTermList = std::vector<DelayTerm>;

/// Canonicalizes a term list: sorts by (delay, infinitesimal flag) and merges
/// duplicates by summing the matrices. Terms that merged to an (exactly) zero
/// matrix are kept; validation only cares about dimensions.
DelayTermList canonicalize(DelayTermList terms);

enum class Kind { Retarded, Neutral, Ddae, DelayDifference };

const char* kind_name(Kind k);

/// State-space model E x'(t) = sum_k A_k x(t-h_k) - sum_k H_k x'(t-h_k) with
/// control channels (B1, C1, D11) and performance channels (B2, C2, D12, D21,
/// D22). Immutable after construction; validate() enforces the invariants of
/// the declared kind.
struct TdsSystem {
  Kind kind = Kind::Retarded;
  int n = 0, p1 = 0, q1 = 0, p2 = 0, q2 = 0;
  MatrixXd E;        // n x n; identity for Retarded/Neutral
  DelayTermList H;   // n x n, Neutral only, strictly positive delays
  DelayTermList A;   // n x n
  DelayTermList B1;  // n x p1
  DelayTermList C1;  // q1 x n
  DelayTermList D11; // q1 x p1
  DelayTermList B2;  // n x p2
  DelayTermList C2;  // q2 x n
  DelayTermList D12; // q1 x p2
  DelayTermList D21; // q2 x p1
  DelayTermList D22; // q2 x p2

  void validate() const;
  double max_delay() const;
  bool has_performance_channels() const { return p2 > 0 && q2 > 0; }
  bool is_delay_free() const;
};

struct Controller {
  int nc = 0;
  MatrixXd Ac;  // nc x nc
  MatrixXd Bc;  // nc x q1
  MatrixXd Cc;  // p1 x nc
  MatrixXd Dc;  // p1 x q1

  static Controller static_gain(const MatrixXd& Dc);
  void validate(int q1, int p1) const;
};

/// Mask/basis structure constraints: mask(i,j) != 0 marks a free entry, fixed
/// entries are pinned to the corresponding basis value.
struct ControllerPattern {
  MatrixXd maskAc, maskBc, maskCc, maskDc;
  MatrixXd basisAc, basisBc, basisCc, basisDc;

  static ControllerPattern full(int nc, int q1, int p1);
  void validate(int nc, int q1, int p1) const;
};

enum class Classification { EssentiallyRetarded, EssentiallyNeutral };

/// The delay difference (algebraic) part A_1^(22) x2(t) + sum A_k^(22)
/// x2(t - h_k) = 0 extracted from a DDAE, together with the null-space bases
/// used in the extraction.
struct DelayDifferencePart {
  DelayTermList A22;  // zero-delay coefficient first, then increasing delays
  MatrixXd U, V, Uperp, Vperp;
  Classification classification = Classification::EssentiallyRetarded;

  int nu() const { return A22.empty() ? 0 : static_cast<int>(A22.front().matrix.rows()); }
  bool has_difference_dynamics() const;
};

// -- Builders ---------------------------------------------------------------

struct SystemSpec {
  Kind kind = Kind::Retarded;
  std::optional<MatrixXd> E;
  DelayTermList H, A, B1, C1, D11, B2, C2, D12, D21, D22;
};

TdsSystem create_system(const SystemSpec& spec);

/// Convenience for plain differential equations x'(t) = sum A_k x(t-h_k).
TdsSystem create_retarded(const DelayTermList& A);
TdsSystem create_neutral(const DelayTermList& H, const DelayTermList& A);
TdsSystem create_ddae(const MatrixXd& E, const DelayTermList& A);

/// Companion realization of the quasi-polynomial
///   sum_k (P(k,0) s^n + ... + P(k,n)) e^{-s tau_k},
/// Retarded when only the zero-delay rows carry a leading coefficient,
/// Neutral otherwise.
TdsSystem from_quasipolynomial(const MatrixXd& P, const VectorXd& tau);

/// SISO realization of T(s) = P(s)/Q(s) + D(s) with quasi-polynomial
/// numerator/denominator sharing the delay vector tau. D may only be present
/// when P/Q is strictly proper.
TdsSystem from_transfer_function(const MatrixXd& P, const MatrixXd& Q,
                                 const std::optional<VectorXd>& D, const VectorXd& tau);

/// Neutral -> DDAE via the auxiliary variable xi(t) = x(t) + sum H_k x(t-h_k)
/// (state dimension doubles); Retarded/Ddae inputs pass through with E made
/// explicit.
TdsSystem to_ddae(const TdsSystem& sys);

DelayDifferencePart delay_difference_part(const TdsSystem& sys);

/// DelayDifference-kind system realizing the asymptotic transfer function
/// T_a(s) = -C^(2) (A_0^(22) + sum A_k^(22) e^{-s tau_k})^{-1} B^(2).
TdsSystem asymptotic_transfer_function(const TdsSystem& sys);

/// Where each free controller entry lands in the zero-delay closed-loop (or
/// standard-form) matrix. Controller entries enter affinely with unit
/// coefficient, one position each.
struct ClosedLoop {
  TdsSystem sys;
  int n_plant = 0, nc = 0;
  // Position of controller matrix entries inside the closed-loop state:
  // Ac(i,j) -> (ac_row+i, ac_col+j), etc.
  int ac_row = 0, ac_col = 0, bc_row = 0, bc_col = 0;
  int cc_row = 0, cc_col = 0, dc_row = 0, dc_col = 0;
  // Index of the infinitesimal-delay term (the controller block) in sys.A.
  int controller_term = -1;
};

ClosedLoop close_loop(const TdsSystem& plant, const Controller& controller);

/// Standard form E_s x' = A_{s,0} x + sum A_{s,k} x(t - tau_k) + B_s w,
/// z = C_s x: input/output delays, feedthrough and neutral terms are absorbed
/// into algebraic auxiliary states appended after the original ones, so the
/// leading state block (and any controller-entry positions inside it) is
/// preserved.
struct StandardForm {
  MatrixXd Es;
  DelayTermList A;  // zero-delay coefficient first
  MatrixXd Bs;      // ns x p2
  MatrixXd Cs;      // q2 x ns
  int ns = 0;
  int n_original = 0;  // leading block carrying the original (or DDAE) state
};

StandardForm standard_form(const TdsSystem& sys);

/// Characteristic matrix M(s) = s E + s sum H_k e^{-s h_k} - sum A_k e^{-s h_k}
/// (infinitesimal delays evaluate at 0).
Eigen::MatrixXcd char_matrix(const TdsSystem& sys, std::complex<double> s);
/// d M / d s.
Eigen::MatrixXcd char_matrix_deriv(const TdsSystem& sys, std::complex<double> s);

double char_matrix_scale(const TdsSystem& sys);

}  // namespace tds::model
