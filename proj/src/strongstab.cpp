// Copyright (c) 2026 The tdsc developers
// SPDX-License-Identifier: Apache-2.0

#include "tds/strongstab.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <random>

namespace tds::strongstab {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using numkernel::Complex;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct DiffData {
  std::vector<MatrixXcd> M;      // A1^{-1} A_k, k >= 1 (nonzero-delay terms)
  std::vector<double> delays;    // effective delays (0 for infinitesimal)
  int n = 0;
};

DiffData prepare(const DelayDifferencePart& part) {
  if (part.A22.empty() || !part.has_difference_dynamics())
    fail(Errc::NotApplicable, "the delay difference part has no delayed coefficients");
  DiffData d;
  d.n = part.nu();
  const MatrixXd& A1 = part.A22.front().matrix;
  Eigen::FullPivLU<MatrixXd> lu(A1);
  if (!lu.isInvertible()) fail(Errc::SingularA22, "A_1^(22) is singular");
  for (size_t k = 1; k < part.A22.size(); ++k) {
    d.M.push_back(lu.solve(part.A22[k].matrix).cast<Complex>());
    d.delays.push_back(part.A22[k].effective_delay());
  }
  return d;
}

double spectral_radius(const MatrixXcd& S, VectorXcd* right = nullptr, VectorXcd* left = nullptr,
                       Complex* value = nullptr) {
  Eigen::ComplexEigenSolver<MatrixXcd> es(S, right != nullptr || left != nullptr);
  int best = 0;
  double rho = -1.0;
  for (int i = 0; i < S.rows(); ++i) {
    double a = std::abs(es.eigenvalues()(i));
    if (a > rho) {
      rho = a;
      best = i;
    }
  }
  if (value) *value = es.eigenvalues()(best);
  if (right) *right = es.eigenvectors().col(best);
  if (left) {
    Eigen::ComplexEigenSolver<MatrixXcd> esl(S.adjoint(), true);
    int bl = 0;
    Complex target = std::conj(es.eigenvalues()(best));
    double dist = kInf;
    for (int i = 0; i < S.rows(); ++i) {
      double dd = std::abs(esl.eigenvalues()(i) - target);
      if (dd < dist) {
        dist = dd;
        bl = i;
      }
    }
    *left = esl.eigenvectors().col(bl);
  }
  return rho;
}

MatrixXcd assemble(const DiffData& d, double r, const VectorXd& theta) {
  MatrixXcd S = MatrixXcd::Zero(d.n, d.n);
  for (size_t k = 0; k < d.M.size(); ++k)
    S += d.M[k] * std::exp(Complex(-r * d.delays[k], theta(k)));
  return S;
}

// Stationarity system of gamma(r) in the unknowns (v, u, lambda, theta_free),
// stacked over real and imaginary parts; theta(0) stays pinned at zero.
struct GammaSystem {
  const DiffData& d;
  double r;
  VectorXcd c;
  int m;  // number of delayed terms

  int unknowns() const { return 4 * d.n + 2 + (m - 1); }
  int residuals() const { return 4 * d.n + 4 + (m - 1); }

  VectorXd eval(const VectorXd& x) const {
    const int n = d.n;
    VectorXcd v(n), u(n);
    for (int i = 0; i < n; ++i) v(i) = Complex(x(2 * i), x(2 * i + 1));
    for (int i = 0; i < n; ++i) u(i) = Complex(x(2 * n + 2 * i), x(2 * n + 2 * i + 1));
    Complex lambda(x(4 * n), x(4 * n + 1));
    VectorXd theta = VectorXd::Zero(m);
    for (int k = 1; k < m; ++k) theta(k) = x(4 * n + 2 + (k - 1));

    MatrixXcd S = assemble(d, r, theta);
    VectorXcd f1 = S * v - lambda * v;
    VectorXcd f2 = S.adjoint() * u - std::conj(lambda) * u;
    Complex f3 = c.dot(v) - 1.0;
    Complex f4 = u.dot(v) - 1.0;

    VectorXd out(residuals());
    for (int i = 0; i < n; ++i) {
      out(2 * i) = f1(i).real();
      out(2 * i + 1) = f1(i).imag();
      out(2 * n + 2 * i) = f2(i).real();
      out(2 * n + 2 * i + 1) = f2(i).imag();
    }
    out(4 * n) = f3.real();
    out(4 * n + 1) = f3.imag();
    out(4 * n + 2) = f4.real();
    out(4 * n + 3) = f4.imag();
    for (int k = 1; k < m; ++k) {
      Complex t = std::conj(lambda) * (u.dot(d.M[k] * v)) *
                  std::exp(Complex(-r * d.delays[k], theta(k)));
      out(4 * n + 4 + (k - 1)) = t.imag();
    }
    return out;
  }
};

// Damped Gauss-Newton with a finite-difference Jacobian; the problem is tiny.
bool gauss_newton(const GammaSystem& sys, VectorXd& x, double* final_residual) {
  const double fd = 1e-7;
  VectorXd f = sys.eval(x);
  double fn = f.norm();
  for (int it = 0; it < 40 && fn > 1e-12; ++it) {
    MatrixXd J(sys.residuals(), sys.unknowns());
    for (int j = 0; j < sys.unknowns(); ++j) {
      VectorXd xp = x;
      double h = fd * (1.0 + std::abs(x(j)));
      xp(j) += h;
      J.col(j) = (sys.eval(xp) - f) / h;
    }
    VectorXd step = J.colPivHouseholderQr().solve(-f);
    if (!step.allFinite()) break;
    double t = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 20; ++ls) {
      VectorXd xn = x + t * step;
      VectorXd fnew = sys.eval(xn);
      if (fnew.norm() < fn) {
        x = xn;
        f = fnew;
        fn = fnew.norm();
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
  }
  *final_residual = fn;
  return fn <= 1e-8;
}

void grid_enumerate(int dims, int Ntheta, const std::function<void(const VectorXd&)>& fn) {
  VectorXd theta = VectorXd::Zero(dims + 1);  // theta(0) pinned to zero
  std::vector<int> idx(dims, 0);
  while (true) {
    for (int k = 0; k < dims; ++k) theta(k + 1) = 2.0 * M_PI * idx[k] / Ntheta;
    fn(theta);
    int k = 0;
    for (; k < dims; ++k) {
      if (++idx[k] < Ntheta) break;
      idx[k] = 0;
    }
    if (k == dims) break;
  }
}

}  // namespace

GammaRResult gamma_r_detailed(const DelayDifferencePart& part, double r,
                              const GammaROptions& opts) {
  GammaRResult out;
  if (!part.has_difference_dynamics()) return out;
  DiffData d = prepare(part);
  const int m = static_cast<int>(d.M.size());
  out.theta = VectorXd::Zero(m);

  if (m == 1) {
    out.value = spectral_radius(d.M[0]) * std::exp(-r * d.delays[0]);
    return out;
  }

  // Prediction on a grid over the free angles (the first one is pinned).
  double best = -1.0;
  VectorXd best_theta = VectorXd::Zero(m);
  grid_enumerate(m - 1, std::max(2, opts.Ntheta), [&](const VectorXd& theta) {
    double rho = spectral_radius(assemble(d, r, theta));
    if (rho > best) {
      best = rho;
      best_theta = theta;
    }
  });

  // Correction: Gauss-Newton on the stationarity system seeded at the best
  // grid point; the grid value stands if the correction does not converge.
  VectorXcd v, u;
  Complex lambda;
  spectral_radius(assemble(d, r, best_theta), &v, &u, &lambda);
  Complex uv = u.dot(v);
  if (std::abs(uv) > 1e-12) {
    u /= std::conj(uv);

    std::mt19937_64 gen(0x5bd1e995);
    std::normal_distribution<double> dist;
    VectorXcd c(d.n);
    for (int i = 0; i < d.n; ++i) c(i) = Complex(dist(gen), 0.0);
    c.normalize();
    Complex cv = c.dot(v);
    if (std::abs(cv) > 1e-10) {
      v /= cv;
      u *= std::conj(cv);

      GammaSystem gs{d, r, c, m};
      VectorXd x(gs.unknowns());
      for (int i = 0; i < d.n; ++i) {
        x(2 * i) = v(i).real();
        x(2 * i + 1) = v(i).imag();
        x(2 * d.n + 2 * i) = u(i).real();
        x(2 * d.n + 2 * i + 1) = u(i).imag();
      }
      x(4 * d.n) = lambda.real();
      x(4 * d.n + 1) = lambda.imag();
      for (int k = 1; k < m; ++k) x(4 * d.n + 2 + (k - 1)) = best_theta(k);

      double resid = kInf;
      if (gauss_newton(gs, x, &resid)) {
        double refined = std::hypot(x(4 * d.n), x(4 * d.n + 1));
        if (refined > best) {
          best = refined;
          for (int k = 1; k < m; ++k) best_theta(k) = x(4 * d.n + 2 + (k - 1));
        }
      }
    }
  }
  out.value = best;
  out.theta = best_theta;
  return out;
}

double gamma_r(const DelayDifferencePart& part, double r, const GammaROptions& opts) {
  return gamma_r_detailed(part, r, opts).value;
}

double cd(const DelayDifferencePart& part, const CdOptions& opts) {
  if (!part.has_difference_dynamics()) return -kInf;
  DiffData d = prepare(part);
  GammaROptions gopts;
  gopts.Ntheta = opts.Ntheta;
  gopts.quiet = opts.quiet;

  bool any_finite_delay = false;
  for (double h : d.delays) any_finite_delay = any_finite_delay || h > 0.0;
  if (!any_finite_delay) {
    // Only infinitesimal delays: gamma is constant in r, so C_D collapses to
    // -inf (gamma < 1) or +inf (no damping can bring the chains left).
    double g = gamma_r(part, 0.0, gopts);
    return g < 1.0 ? -kInf : kInf;
  }

  if (d.M.size() == 1) return std::log(spectral_radius(d.M[0])) / d.delays[0];

  auto g = [&](double r) { return gamma_r(part, r, gopts) - 1.0; };

  double lo = opts.CD0 - 1.0, hi = opts.CD0 + 1.0;
  double glo = g(lo), ghi = g(hi);
  int k = 0;
  for (; k < 60 && glo < 0.0; ++k) {
    hi = lo;
    ghi = glo;
    lo = opts.CD0 - std::pow(2.0, k + 1);
    glo = g(lo);
  }
  for (k = 0; k < 60 && ghi > 0.0; ++k) {
    lo = hi;
    glo = ghi;
    hi = opts.CD0 + std::pow(2.0, k + 1);
    ghi = g(hi);
  }
  if (glo < 0.0) return -kInf;
  if (ghi > 0.0) return kInf;

  // Safeguarded secant within the bracket [lo, hi], g(lo) >= 0 >= g(hi).
  double r = lo, gr = glo;
  for (int it = 0; it < 200; ++it) {
    if (std::abs(gr) <= opts.tol) break;
    double cand;
    if (ghi != glo) {
      cand = lo - glo * (hi - lo) / (ghi - glo);
      if (!(cand > lo && cand < hi)) cand = 0.5 * (lo + hi);
    } else {
      cand = 0.5 * (lo + hi);
    }
    double gc = g(cand);
    r = cand;
    gr = gc;
    if (gc > 0.0) {
      lo = cand;
      glo = gc;
    } else {
      hi = cand;
      ghi = gc;
    }
    if (hi - lo <= opts.tol * (1.0 + std::abs(r)) && std::abs(gr) <= 100 * opts.tol) break;
  }
  return r;
}

double strong_sa(const TdsSystem& sys, double r, const spectrum::RootsOptions& roots_opts,
                 const CdOptions& cd_opts) {
  auto part = model::delay_difference_part(sys);
  double CD = cd(part, cd_opts);
  if (CD == kInf) return kInf;

  const double guard = 1e-6;
  double r_eff = std::isfinite(CD) ? std::max(r, CD + guard) : r;
  double c = spectrum::sa(sys, r_eff, roots_opts);
  return std::max(CD, c);
}

}  // namespace tds::strongstab
