// Copyright (c) 2026 The tdsc developers
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <functional>
#include <limits>
#include <vector>

#include "tds/errors.hpp"

namespace tds::nsopt {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Value and (sub)gradient at a point. A +inf value marks an infeasible
/// barrier region; the gradient is ignored there.
struct ObjectiveEvaluation {
  double value = 0.0;
  VectorXd gradient;
};

using Objective = std::function<ObjectiveEvaluation(const VectorXd&)>;

struct NsoptOptions {
  int maxit = 1000;
  double cpumax = std::numeric_limits<double>::infinity();  // seconds
  double fvalquit = -std::numeric_limits<double>::infinity();
  double grad_norm_tol = 1e-6;
  bool gradient_sampling = false;
  std::vector<double> sample_radii = {1e-2, 1e-4, 1e-6};  // scaled by (1 + |x|)
  int samples_per_iter = 0;                               // 0 means 2 * dim
  int print_level = 2;
  unsigned long long seed = 0;
};

enum class NsoptStatus { GradNormTol, MaxIter, CpuMax, FvalQuit, LineSearchFailure };

const char* status_name(NsoptStatus s);

/// One accepted line-search step, kept for the property tests: the weak Wolfe
/// conditions can be re-checked from these numbers.
struct StepRecord {
  double t;       // accepted step length
  double f0;      // value at the step origin
  double g0d;     // directional derivative at the origin
  double f1;      // value at the accepted point
  double g1d;     // directional derivative at the accepted point
  bool wolfe_ok;  // curvature condition was satisfied (not just Armijo)
};

struct NsoptResult {
  VectorXd x;
  double f = std::numeric_limits<double>::infinity();
  NsoptStatus status = NsoptStatus::MaxIter;
  int iterations = 0;
  std::vector<StepRecord> steps;
};

/// BFGS with a weak Wolfe bisection line search; +inf objective values are
/// treated as Armijo failures so the search backtracks into the feasible
/// region. Termination follows the smallest-norm convex combination of the
/// last min(dim, 10) gradients.
NsoptResult bfgs_minimize(const Objective& objective, const VectorXd& x0,
                          const NsoptOptions& options = {});

/// Gradient sampling refinement: per radius, the minimum-norm element of the
/// convex hull of sampled gradients drives a descent step. The value never
/// increases.
NsoptResult gradient_sampling_refine(const Objective& objective, const VectorXd& x0,
                                     const NsoptOptions& options = {});

using ObjectiveFactory = std::function<Objective(int start_index)>;

struct StartLog {
  int start = 0;
  double f = std::numeric_limits<double>::infinity();
  NsoptStatus status = NsoptStatus::MaxIter;
  bool infeasible = false;
};

/// Runs BFGS (plus optional gradient sampling) from each initial point;
/// missing initial points are drawn standard-normal from the seeded
/// generator. Returns the best start (ties by start index).
NsoptResult multistart(const ObjectiveFactory& factory, const std::vector<VectorXd>& initials,
                       int nstart, int dim, const NsoptOptions& options = {},
                       std::vector<StartLog>* log = nullptr);

/// Smallest-norm convex combination of the columns of G (Wolfe's problem on
/// the simplex); exposed for the termination tests.
VectorXd min_norm_convex_combination(const MatrixXd& G);

}  // namespace tds::nsopt
