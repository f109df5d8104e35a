// Copyright (c) 2026 The tdsc developers
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "tds/freqresp.hpp"
#include "tds/model.hpp"
#include "tds/nsopt.hpp"
#include "tds/spectrum.hpp"
#include "tds/strongstab.hpp"

namespace tds::synth {

using model::ClosedLoop;
using model::Controller;
using model::ControllerPattern;
using model::TdsSystem;
using nsopt::ObjectiveEvaluation;
using numkernel::Complex;
using Eigen::VectorXd;

enum class Method { Auto, CD, Barrier };

struct SynthOptions {
  int nstart = 5;
  Method method = Method::Auto;
  double w1 = 1e-3;
  double w2 = 1e-3;
  int Ntheta = 10;
  double alpha = 0.0;  // mixed objective weight (hiopt)
  spectrum::RootsOptions roots;
  nsopt::NsoptOptions nsopt;
  freqresp::HinfOptions hinf;
  int print_level = 2;
  unsigned long long seed = 0;
};

/// Index map between the free controller entries (mask true) and the
/// parameter vector; fixed entries stay at their basis value.
struct ParamLayout {
  enum Mat { Ac = 0, Bc = 1, Cc = 2, Dc = 3 };
  struct Entry {
    int mat;
    int i, j;      // position inside the controller matrix
    int row, col;  // position inside the zero-delay closed-loop coefficient
  };
  std::vector<Entry> entries;
  int nc = 0, q1 = 0, p1 = 0;
  int dim() const { return static_cast<int>(entries.size()); }
};

ParamLayout make_layout(const ControllerPattern& pattern, const ClosedLoop& cl);

VectorXd pack(const Controller& k, const ControllerPattern& pattern);
Controller unpack(const VectorXd& p, const ControllerPattern& pattern, int nc, int q1, int p1);

/// Spectral abscissa of the closed loop at parameter vector p plus the
/// eigenvalue-sensitivity gradient at the active (rightmost) root; ties are
/// broken toward the smallest |Im|.
struct RightmostSensitivity {
  double c = 0.0;
  Complex active_root;
  VectorXd dc_dp;
};

/// Evaluation engine shared by the synthesis drivers: it owns the closed-loop
/// template, pokes parameters into the controller block, and warm-starts the
/// spectrum, gamma and H-infinity computations between iterates.
class ObjectiveContext {
 public:
  ObjectiveContext(const TdsSystem& plant, int nc, const ControllerPattern& pattern,
                   const SynthOptions& options);
  ~ObjectiveContext();
  ObjectiveContext(ObjectiveContext&&) noexcept;

  const ParamLayout& layout() const;
  Method resolved_method() const;
  bool essentially_retarded() const;

  RightmostSensitivity rightmost_sensitivity(const VectorXd& p);
  ObjectiveEvaluation objective_stab(const VectorXd& p);
  ObjectiveEvaluation objective_gamma0(const VectorXd& p);  // barrier pre-phase
  ObjectiveEvaluation objective_hinf(const VectorXd& p);

  /// Closed loop at p (a fresh validated system).
  ClosedLoop closed_loop(const VectorXd& p) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct StartLog {
  int start = 0;
  double objective = 0.0;
  bool discarded = false;
  nsopt::NsoptStatus status = nsopt::NsoptStatus::MaxIter;
};

struct SynthResult {
  Controller controller;
  ClosedLoop closed_loop;
  double objective = 0.0;
  double strong_sa = 0.0;                // independently re-verified
  std::optional<double> strong_hinf;     // filled by hiopt
  bool stabilizing = false;
  std::vector<StartLog> log;
};

/// Strong stabilization by direct minimization of the spectral-abscissa
/// objective (Approach 1: max(c, C_D); Approach 2: log-barrier on gamma_0).
/// Emits a "Resulting controller is not stabilizing." warning instead of
/// failing when every start ends at a non-negative strong abscissa.
SynthResult stabopt(const TdsSystem& plant, int nc,
                    const std::optional<ControllerPattern>& pattern = std::nullopt,
                    const std::vector<Controller>& initials = {}, const SynthOptions& options = {});

/// Strong H-infinity (or mixed alpha C + (1-alpha) hinf) synthesis. Starts
/// that cannot be strongly stabilized (directly or through a stabopt
/// pre-run) are discarded; throws FailedStronglyStabilizing if none remain.
SynthResult hiopt(const TdsSystem& plant, int nc,
                  const std::optional<ControllerPattern>& pattern = std::nullopt,
                  const std::vector<Controller>& initials = {}, const SynthOptions& options = {});

}  // namespace tds::synth
