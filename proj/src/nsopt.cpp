// Copyright (c) 2026 The tdsc developers
// SPDX-License-Identifier: Apache-2.0

#include "tds/nsopt.hpp"

#include <chrono>
#include <cmath>
#include <deque>
#include <iostream>
#include <random>

namespace tds::nsopt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool finite(double v) { return std::isfinite(v); }

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

ObjectiveEvaluation safe_eval(const Objective& obj, const VectorXd& x) {
  ObjectiveEvaluation e = obj(x);
  if (std::isnan(e.value)) e.value = kInf;
  return e;
}

struct LineSearchOutcome {
  bool ok = false;
  bool wolfe_ok = false;
  double t = 0.0;
  ObjectiveEvaluation at;
};

// Weak Wolfe line search by bracketing and bisection (expansion while no
// upper bound exists). Infinite values act as Armijo failures.
LineSearchOutcome weak_wolfe(const Objective& obj, const VectorXd& x, const VectorXd& d, double f0,
                             double g0d) {
  const double c1 = 1e-4, c2 = 0.5;
  LineSearchOutcome out;
  double lo = 0.0, hi = kInf, t = 1.0;
  ObjectiveEvaluation lo_eval;
  bool have_lo = false;
  for (int it = 0; it < 60; ++it) {
    VectorXd xt = x + t * d;
    ObjectiveEvaluation e = safe_eval(obj, xt);
    if (!finite(e.value) || e.value > f0 + c1 * t * g0d) {
      hi = t;
    } else if (e.gradient.dot(d) < c2 * g0d) {
      lo = t;
      lo_eval = e;
      have_lo = true;
    } else {
      out.ok = true;
      out.wolfe_ok = true;
      out.t = t;
      out.at = std::move(e);
      return out;
    }
    t = std::isfinite(hi) ? 0.5 * (lo + hi) : 2.0 * t;
    if (t <= 0.0 || (std::isfinite(hi) && hi - lo < 1e-18 * (1.0 + lo))) break;
  }
  if (have_lo) {
    // Armijo holds at lo even though the curvature condition never fired.
    out.ok = true;
    out.wolfe_ok = false;
    out.t = lo;
    out.at = std::move(lo_eval);
  }
  return out;
}

}  // namespace

const char* status_name(NsoptStatus s) {
  switch (s) {
    case NsoptStatus::GradNormTol: return "grad_norm_tol";
    case NsoptStatus::MaxIter: return "maxit";
    case NsoptStatus::CpuMax: return "cpumax";
    case NsoptStatus::FvalQuit: return "fvalquit";
    case NsoptStatus::LineSearchFailure: return "line_search_failure";
  }
  return "?";
}

VectorXd min_norm_convex_combination(const MatrixXd& G) {
  const int k = static_cast<int>(G.cols());
  VectorXd w = VectorXd::Constant(k, 1.0 / k);
  if (k == 1) return G.col(0);
  MatrixXd Q = G.transpose() * G;
  double lip = Q.operatorNorm();
  if (lip <= 0.0) return G * w;
  const double step = 1.0 / lip;
  auto project_simplex = [](VectorXd v) {
    // Euclidean projection onto the probability simplex.
    const int n = static_cast<int>(v.size());
    VectorXd u = v;
    std::sort(u.data(), u.data() + n, std::greater<double>());
    double css = 0.0, theta = 0.0;
    int rho = 0;
    for (int i = 0; i < n; ++i) {
      css += u(i);
      double t = (css - 1.0) / (i + 1);
      if (u(i) - t > 0) {
        rho = i + 1;
        theta = t;
      }
    }
    (void)rho;
    for (int i = 0; i < n; ++i) v(i) = std::max(0.0, v(i) - theta);
    return v;
  };
  for (int it = 0; it < 500; ++it) {
    VectorXd grad = Q * w;
    VectorXd wn = project_simplex(w - step * grad);
    if ((wn - w).norm() <= 1e-14) {
      w = wn;
      break;
    }
    w = wn;
  }
  return G * w;
}

NsoptResult bfgs_minimize(const Objective& objective, const VectorXd& x0,
                          const NsoptOptions& options) {
  const int dim = static_cast<int>(x0.size());
  const double t_start = now_seconds();

  NsoptResult res;
  res.x = x0;
  ObjectiveEvaluation cur = safe_eval(objective, x0);
  res.f = cur.value;
  if (!finite(cur.value)) {
    res.status = NsoptStatus::LineSearchFailure;
    return res;
  }

  MatrixXd H = MatrixXd::Identity(dim, dim);
  // Gradients from recent iterates; only those close to the current point
  // enter the Clarke-stationarity test.
  std::deque<std::pair<VectorXd, VectorXd>> recent;
  const size_t hist = std::min<std::size_t>(std::max(dim, 1), 10);
  recent.emplace_back(res.x, cur.gradient);

  for (int it = 0; it < options.maxit; ++it) {
    res.iterations = it + 1;
    if (now_seconds() - t_start > options.cpumax) {
      res.status = NsoptStatus::CpuMax;
      return res;
    }
    if (cur.value < options.fvalquit) {
      res.status = NsoptStatus::FvalQuit;
      return res;
    }

    {
      // Only gradients from a tight neighbourhood certify Clarke
      // stationarity; a wide radius would admit certificates far from a
      // minimizer on coarse zigzag iterates.
      const double evaldist = 1e-6 * (1.0 + res.x.norm());
      MatrixXd G(dim, recent.size());
      int kept = 0;
      for (const auto& [xi, gi] : recent)
        if ((xi - res.x).norm() <= evaldist) G.col(kept++) = gi;
      if (kept == 0) {
        G.col(0) = cur.gradient;
        kept = 1;
      }
      double mn = min_norm_convex_combination(G.leftCols(kept)).norm();
      if (options.print_level >= 3)
        std::cerr << "it " << it << " f " << cur.value << " evaldist " << evaldist << " kept "
                  << kept << " minnorm " << mn << "\n";
      if (mn <= options.grad_norm_tol) {
        res.status = NsoptStatus::GradNormTol;
        return res;
      }
    }

    VectorXd d = -(H * cur.gradient);
    double g0d = cur.gradient.dot(d);
    if (!(g0d < 0.0)) {
      H.setIdentity();
      d = -cur.gradient;
      g0d = cur.gradient.dot(d);
      if (!(g0d < 0.0)) {
        res.status = NsoptStatus::GradNormTol;
        return res;
      }
    }

    auto ls = weak_wolfe(objective, res.x, d, cur.value, g0d);
    if (!ls.ok) {
      // One steepest-descent rescue before giving up.
      H.setIdentity();
      d = -cur.gradient;
      g0d = cur.gradient.dot(d);
      ls = weak_wolfe(objective, res.x, d, cur.value, g0d);
      if (!ls.ok) {
        res.status = NsoptStatus::LineSearchFailure;
        return res;
      }
    }

    VectorXd s = ls.t * d;
    VectorXd y = ls.at.gradient - cur.gradient;
    res.steps.push_back(
        {ls.t, cur.value, g0d, ls.at.value, ls.at.gradient.dot(d), ls.wolfe_ok});
    res.x += s;
    cur = std::move(ls.at);
    res.f = cur.value;

    recent.emplace_back(res.x, cur.gradient);
    if (recent.size() > hist) recent.pop_front();

    double ys = y.dot(s);
    if (ys > 1e-12 * y.norm() * s.norm()) {
      // Standard inverse-Hessian BFGS update.
      VectorXd Hy = H * y;
      double yHy = y.dot(Hy);
      H += ((ys + yHy) / (ys * ys)) * (s * s.transpose());
      MatrixXd cross = (Hy * s.transpose()) / ys;
      H -= cross + cross.transpose();
    }
    if (options.print_level >= 3)
      std::cerr << "bfgs it " << it << " f " << res.f << " t " << res.steps.back().t << "\n";
  }
  res.status = NsoptStatus::MaxIter;
  return res;
}

NsoptResult gradient_sampling_refine(const Objective& objective, const VectorXd& x0,
                                     const NsoptOptions& options) {
  const int dim = static_cast<int>(x0.size());
  const int per_iter = options.samples_per_iter > 0 ? options.samples_per_iter : 2 * dim;
  std::mt19937_64 gen(options.seed ^ 0xa5a5a5a5ULL);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud(0.0, 1.0);

  NsoptResult res;
  res.x = x0;
  ObjectiveEvaluation cur = safe_eval(objective, x0);
  res.f = cur.value;
  res.status = NsoptStatus::GradNormTol;
  if (!finite(cur.value)) return res;

  for (double radius : options.sample_radii) {
    double rho = radius * (1.0 + res.x.norm());
    for (int it = 0; it < 50; ++it) {
      MatrixXd G(dim, per_iter + 1);
      G.col(0) = cur.gradient;
      int kept = 1;
      for (int s = 0; s < per_iter; ++s) {
        VectorXd dir(dim);
        for (int i = 0; i < dim; ++i) dir(i) = nd(gen);
        double nrm = dir.norm();
        if (nrm == 0.0) continue;
        double scale = rho * std::pow(ud(gen), 1.0 / dim) / nrm;
        VectorXd xp = res.x + scale * dir;
        ObjectiveEvaluation e = safe_eval(objective, xp);
        if (!finite(e.value)) continue;
        G.col(kept++) = e.gradient;
      }
      VectorXd g = min_norm_convex_combination(G.leftCols(kept));
      if (g.norm() <= options.grad_norm_tol) break;

      VectorXd d = -g / g.norm();
      double t = rho;
      bool improved = false;
      for (int ls = 0; ls < 20; ++ls) {
        ObjectiveEvaluation e = safe_eval(objective, res.x + t * d);
        if (finite(e.value) && e.value < res.f - 1e-16) {
          res.x += t * d;
          res.f = e.value;
          cur = std::move(e);
          improved = true;
          break;
        }
        t *= 0.5;
      }
      if (!improved) break;
    }
  }
  return res;
}

NsoptResult multistart(const ObjectiveFactory& factory, const std::vector<VectorXd>& initials,
                       int nstart, int dim, const NsoptOptions& options,
                       std::vector<StartLog>* log) {
  if (nstart < 1) fail(Errc::DimensionMismatch, "nstart must be >= 1");
  std::mt19937_64 gen(options.seed);
  std::normal_distribution<double> nd;

  NsoptResult best;
  bool any = false;
  for (int s = 0; s < nstart; ++s) {
    VectorXd x0;
    if (s < static_cast<int>(initials.size())) {
      x0 = initials[s];
      if (static_cast<int>(x0.size()) != dim)
        fail(Errc::ShapeMismatch, "initial point has the wrong dimension");
    } else {
      x0.resize(dim);
      for (int i = 0; i < dim; ++i) x0(i) = nd(gen);
    }
    NsoptOptions per = options;
    per.seed = options.seed + 7919ULL * static_cast<unsigned long long>(s);
    Objective obj = factory(s);
    NsoptResult r = bfgs_minimize(obj, x0, per);
    if (options.gradient_sampling && finite(r.f)) {
      NsoptResult g = gradient_sampling_refine(obj, r.x, per);
      if (g.f <= r.f) {
        r.x = g.x;
        r.f = g.f;
      }
    }
    if (log) log->push_back({s, r.f, r.status, !finite(r.f)});
    if (options.print_level >= 2)
      std::cerr << "start " << s << ": f = " << r.f << " (" << status_name(r.status) << ")\n";
    if (finite(r.f) && (!any || r.f < best.f)) {
      best = std::move(r);
      any = true;
    }
  }
  if (!any) fail(Errc::AllStartsFailed, "no start produced a finite objective value");
  return best;
}

}  // namespace tds::nsopt
