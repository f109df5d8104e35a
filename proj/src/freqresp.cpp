// Copyright (c) 2026 The tdsc developers
// SPDX-License-Identifier: Apache-2.0

#include "tds/freqresp.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

namespace tds::freqresp {

using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

MatrixXcd sf_char(const StandardForm& sf, Complex s) {
  MatrixXcd M = s * sf.Es.cast<Complex>();
  for (const auto& t : sf.A) M -= std::exp(-s * t.effective_delay()) * t.matrix.cast<Complex>();
  return M;
}

MatrixXcd sf_char_deriv(const StandardForm& sf, Complex s) {
  MatrixXcd M = sf.Es.cast<Complex>();
  for (const auto& t : sf.A) {
    double h = t.effective_delay();
    M += h * std::exp(-s * h) * t.matrix.cast<Complex>();
  }
  return M;
}

struct SingularTriplet {
  double sigma = 0.0;
  VectorXcd u, v;
};

SingularTriplet top_singular(const MatrixXcd& T) {
  Eigen::JacobiSVD<MatrixXcd> svd(T, Eigen::ComputeThinU | Eigen::ComputeThinV);
  SingularTriplet out;
  out.sigma = svd.singularValues()(0);
  out.u = svd.matrixU().col(0);
  out.v = svd.matrixV().col(0);
  return out;
}

double second_singular_gap(const MatrixXcd& T) {
  Eigen::JacobiSVD<MatrixXcd> svd(T);
  if (svd.singularValues().size() < 2) return kInf;
  return svd.singularValues()(0) - svd.singularValues()(1);
}

MatrixXcd assemble_K(const AsymptoticPart& part, const VectorXd& theta) {
  MatrixXcd K = part.A22.front().matrix.cast<Complex>();
  for (size_t k = 1; k < part.A22.size(); ++k)
    K += part.A22[k].matrix.cast<Complex>() * std::exp(Complex(0.0, -theta(k - 1)));
  return K;
}

MatrixXcd asymptotic_tf(const AsymptoticPart& part, const VectorXd& theta) {
  MatrixXcd K = assemble_K(part, theta);
  return -(part.C2.cast<Complex>() * K.partialPivLu().solve(part.B2.cast<Complex>()));
}

// Gradient of the top singular value with respect to the free angles.
VectorXd asymptotic_gradient(const AsymptoticPart& part, const VectorXd& theta,
                             const SingularTriplet& t) {
  const int m = static_cast<int>(theta.size());
  MatrixXcd K = assemble_K(part, theta);
  Eigen::PartialPivLU<MatrixXcd> lu(K);
  MatrixXcd KinvB = lu.solve(part.B2.cast<Complex>());
  MatrixXcd CKinv =
      (K.transpose().partialPivLu().solve(part.C2.cast<Complex>().transpose())).transpose();
  VectorXd g(m);
  for (int k = 0; k < m; ++k) {
    Complex phase = std::exp(Complex(0.0, -theta(k)));
    MatrixXcd dT =
        Complex(0.0, -1.0) * phase * (CKinv * part.A22[k + 1].matrix.cast<Complex>() * KinvB);
    g(k) = (t.u.adjoint() * dT * t.v)(0, 0).real();
  }
  return g;
}

struct Descriptor {
  MatrixXd E, A, B, C;
};

// Delay-free collocation approximation of the standard form: the block-0
// sample carries the input and output couplings.
Descriptor discretize_sf(const StandardForm& sf, int N) {
  TdsSystem tmp;
  tmp.kind = model::Kind::Ddae;
  tmp.n = sf.ns;
  tmp.E = sf.Es;
  tmp.A = sf.A;
  auto pencil = spectrum::discretize(tmp, N);
  Descriptor d;
  d.E = std::move(pencil.Pi);
  d.A = std::move(pencil.Sigma);
  const int p2 = static_cast<int>(sf.Bs.cols());
  const int q2 = static_cast<int>(sf.Cs.rows());
  d.B = MatrixXd::Zero(d.A.rows(), p2);
  d.B.topRows(sf.ns) = sf.Bs;
  d.C = MatrixXd::Zero(q2, d.A.cols());
  d.C.leftCols(sf.ns) = sf.Cs;
  return d;
}

// Frequencies where the approximation's top singular value crosses `level`:
// purely imaginary eigenvalues of the even pencil.
std::vector<double> level_crossings(const Descriptor& d, double level) {
  const int n = static_cast<int>(d.A.rows());
  MatrixXd M(2 * n, 2 * n), E(2 * n, 2 * n);
  M.topLeftCorner(n, n) = d.A;
  M.topRightCorner(n, n) = (d.B * d.B.transpose()) / level;
  M.bottomLeftCorner(n, n) = -(d.C.transpose() * d.C) / level;
  M.bottomRightCorner(n, n) = -d.A.transpose();
  E.setZero();
  E.topLeftCorner(n, n) = d.E;
  E.bottomRightCorner(n, n) = d.E.transpose();

  auto vals = numkernel::generalized_eigvals(M, E);
  std::vector<double> out;
  for (Complex z : vals) {
    if (std::abs(z.real()) <= 1e-6 * (1.0 + std::abs(z.imag())) && z.imag() >= 0.0)
      out.push_back(z.imag());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end(),
                        [](double a, double b) { return std::abs(a - b) < 1e-9 * (1.0 + a); }),
            out.end());
  return out;
}

}  // namespace

MatrixXcd transfer_eval(const StandardForm& sf, Complex s) {
  MatrixXcd M = sf_char(sf, s);
  Eigen::FullPivLU<MatrixXcd> lu(M);
  if (!lu.isInvertible()) fail(Errc::SingularAtS, "frequency response is singular at s");
  return sf.Cs.cast<Complex>() * lu.solve(sf.Bs.cast<Complex>());
}

MatrixXcd transfer_eval(const TdsSystem& sys, Complex s) {
  return transfer_eval(model::standard_form(sys), s);
}

Eigen::MatrixXd sigma(const TdsSystem& sys, const std::vector<double>& omegas) {
  auto sf = model::standard_form(sys);
  const int nsv = std::min(static_cast<int>(sf.Cs.rows()), static_cast<int>(sf.Bs.cols()));
  MatrixXd out(nsv, omegas.size());
  for (size_t k = 0; k < omegas.size(); ++k) {
    if (!std::isfinite(omegas[k]) || omegas[k] < 0.0)
      fail(Errc::DimensionMismatch, "frequencies must be finite and non-negative");
    try {
      Eigen::JacobiSVD<MatrixXcd> svd(transfer_eval(sf, Complex(0.0, omegas[k])));
      out.col(k) = svd.singularValues().head(nsv);
    } catch (const Error& e) {
      if (e.code() != Errc::SingularAtS) throw;
      out.col(k).setConstant(kNaN);
    }
  }
  return out;
}

AsymptoticPart asymptotic_part(const StandardForm& sf) {
  AsymptoticPart part;
  auto split = numkernel::nullspace_split(sf.Es);
  const int nu = sf.ns - split.rank;
  if (nu == 0) {
    part.trivial = true;
    return part;
  }
  for (const auto& t : sf.A)
    part.A22.push_back({split.U.transpose() * t.matrix * split.V, t.delay, t.infinitesimal});
  part.A22 = model::canonicalize(part.A22);
  if (part.A22.front().delay != 0.0 || part.A22.front().infinitesimal)
    part.A22.insert(part.A22.begin(), {MatrixXd::Zero(nu, nu), 0.0, false});
  part.B2 = split.U.transpose() * sf.Bs;
  part.C2 = sf.Cs * split.V;
  if (part.B2.norm() == 0.0 || part.C2.norm() == 0.0) part.trivial = true;
  // Drop delayed coefficients that vanished under the projection. Terms at an
  // infinitesimal delay stay: they carry controller parameters whose
  // sensitivities survive even at a zero value.
  model::DelayTermList kept;
  for (size_t k = 0; k < part.A22.size(); ++k)
    if (k == 0 || part.A22[k].infinitesimal || part.A22[k].matrix.cwiseAbs().maxCoeff() > 0.0)
      kept.push_back(part.A22[k]);
  part.A22 = std::move(kept);
  return part;
}

AsymptoticNorm hinf_asymptotic(const AsymptoticPart& part, const HinfOptions& opts) {
  AsymptoticNorm out;
  if (part.trivial) return out;
  const int m = static_cast<int>(part.A22.size()) - 1;
  if (m == 0) {
    out.value = asymptotic_tf(part, VectorXd()).jacobiSvd().singularValues()(0);
    return out;
  }

  {
    model::DelayDifferencePart dpart;
    dpart.A22 = part.A22;
    dpart.classification = model::Classification::EssentiallyNeutral;
    double g0 = strongstab::gamma_r(dpart, 0.0, {});
    if (g0 >= 1.0)
      fail(Errc::NotStronglyStableDifference,
           "gamma(0) >= 1: the asymptotic transfer function has no finite strong norm");
  }

  // Grid prediction over the torus.
  int Ntheta = std::max(2, opts.Ntheta);
  while (std::pow(static_cast<double>(Ntheta), m) > 2e5 && Ntheta > 4) --Ntheta;
  std::vector<int> idx(m, 0);
  VectorXd theta = VectorXd::Zero(m), best_theta = VectorXd::Zero(m);
  double best = -1.0;
  while (true) {
    for (int k = 0; k < m; ++k) theta(k) = 2.0 * M_PI * idx[k] / Ntheta;
    double s = asymptotic_tf(part, theta).jacobiSvd().singularValues()(0);
    if (s > best) {
      best = s;
      best_theta = theta;
    }
    int k = 0;
    for (; k < m; ++k) {
      if (++idx[k] < Ntheta) break;
      idx[k] = 0;
    }
    if (k == m) break;
  }

  // Newton ascent of the leading singular value (finite-difference curvature,
  // analytic gradient); the grid value stands if no progress is made.
  theta = best_theta;
  double val = best;
  for (int it = 0; it < 40; ++it) {
    MatrixXcd T = asymptotic_tf(part, theta);
    auto trip = top_singular(T);
    VectorXd g = asymptotic_gradient(part, theta, trip);
    if (g.norm() <= 1e-11 * (1.0 + trip.sigma)) break;
    MatrixXd Hss(m, m);
    const double fd = 1e-6;
    for (int k = 0; k < m; ++k) {
      VectorXd tp = theta;
      tp(k) += fd;
      auto tr2 = top_singular(asymptotic_tf(part, tp));
      Hss.col(k) = (asymptotic_gradient(part, tp, tr2) - g) / fd;
    }
    MatrixXd Hsym = 0.5 * (Hss + Hss.transpose());
    VectorXd step = (-Hsym).ldlt().solve(g);
    if (!step.allFinite() || step.dot(g) <= 0.0) step = g;  // ascent fallback
    double t = 1.0;
    bool progressed = false;
    for (int ls = 0; ls < 25; ++ls) {
      VectorXd th = theta + t * step;
      double v = asymptotic_tf(part, th).jacobiSvd().singularValues()(0);
      if (v > val + 1e-15) {
        theta = th;
        val = v;
        progressed = true;
        break;
      }
      t *= 0.5;
    }
    if (!progressed) break;
  }

  out.value = std::max(best, val);
  out.theta = theta;
  return out;
}

AsymptoticNorm hinf_asymptotic(const TdsSystem& sys, const HinfOptions& opts) {
  return hinf_asymptotic(asymptotic_part(model::standard_form(sys)), opts);
}

double sigma_derivative(const StandardForm& sf, double omega) {
  Complex s(0.0, omega);
  MatrixXcd M = sf_char(sf, s);
  Eigen::PartialPivLU<MatrixXcd> lu(M);
  MatrixXcd MinvB = lu.solve(sf.Bs.cast<Complex>());
  MatrixXcd T = sf.Cs.cast<Complex>() * MinvB;
  auto trip = top_singular(T);
  MatrixXcd CMinv =
      (M.transpose().partialPivLu().solve(sf.Cs.cast<Complex>().transpose())).transpose();
  MatrixXcd dT = Complex(0.0, 1.0) * (-CMinv * sf_char_deriv(sf, s) * MinvB);
  return (trip.u.adjoint() * dT * trip.v)(0, 0).real();
}

FinitePeak finite_peak(const StandardForm& sf, double floor_level, const HinfOptions& opts) {
  FinitePeak out;
  auto truesig = [&](double w) -> double {
    try {
      return top_singular(transfer_eval(sf, Complex(0.0, std::abs(w)))).sigma;
    } catch (const Error&) {
      return -1.0;
    }
  };

  double best_sigma = -1.0, best_omega = 0.0;
  for (double w : opts.omega_init) {
    double s = truesig(w);
    if (s > best_sigma) {
      best_sigma = s;
      best_omega = std::abs(w);
    }
  }

  Descriptor desc = discretize_sf(sf, opts.fix_N);
  double level = std::max({best_sigma, floor_level, 1e-12});
  for (int it = 0; it < 50; ++it) {
    auto crossings = level_crossings(desc, level * (1.0 + 2.0 * opts.pred_tol));
    if (crossings.empty()) break;
    std::vector<double> candidates;
    if (crossings.front() > 0.0) candidates.push_back(0.5 * crossings.front());
    for (size_t i = 0; i + 1 < crossings.size(); ++i)
      candidates.push_back(std::sqrt(std::max(crossings[i], 1e-12) * crossings[i + 1]));
    candidates.push_back(1.5 * crossings.back());
    double new_best = -1.0, new_omega = 0.0;
    for (double w : candidates) {
      double s = truesig(w);
      if (s > new_best) {
        new_best = s;
        new_omega = w;
      }
    }
    if (new_best > best_sigma) {
      best_sigma = new_best;
      best_omega = new_omega;
    }
    if (new_best <= level * (1.0 + opts.pred_tol)) break;
    level = new_best;
  }

  // Newton correction of the peak on the true system.
  if (best_sigma > 0.0) {
    MatrixXcd T0 = transfer_eval(sf, Complex(0.0, best_omega));
    if (second_singular_gap(T0) < 1e-8) {
      out.large_correction = true;
    } else {
      double w0 = best_omega;
      double w1 = w0 + std::max(1e-6, 1e-4 * (1.0 + w0));
      double g0 = sigma_derivative(sf, w0), g1 = sigma_derivative(sf, w1);
      for (int it = 0; it < 50 && std::abs(g1) > opts.newton_tol * (1.0 + best_sigma); ++it) {
        if (g1 == g0) break;
        double w2 = w1 - g1 * (w1 - w0) / (g1 - g0);
        if (!std::isfinite(w2)) break;
        w2 = std::max(0.0, w2);
        w0 = w1;
        g0 = g1;
        w1 = w2;
        g1 = sigma_derivative(sf, w1);
      }
      double corrected = truesig(w1);
      if (corrected >= best_sigma) {
        if (std::abs(corrected - best_sigma) > 0.1 * (1.0 + best_sigma)) {
          out.large_correction = true;
          if (!opts.quiet)
            std::cerr << "Warning: norm is corrected more than expected in the finite-frequency "
                         "step\n";
        }
        best_sigma = corrected;
        best_omega = w1;
      }
    }
  }
  out.sigma = best_sigma;
  out.omega = best_omega;
  return out;
}

HinfResult hinfnorm(const TdsSystem& sys, const HinfOptions& opts) {
  HinfResult out;
  out.wpeak = kNaN;
  out.hinf = kInf;

  // Stability gate on the strong spectral abscissa.
  double ssa;
  try {
    ssa = strongstab::strong_sa(sys, -1e-3, opts.roots, opts.cd);
  } catch (const Error& e) {
    if (e.code() == Errc::SingularA22) return out;  // advanced/impulsive: not stable
    throw;
  }
  if (!(ssa < 0.0)) return out;

  auto sf = model::standard_form(sys);
  auto part = asymptotic_part(sf);
  AsymptoticNorm an;
  if (!part.trivial) an = hinf_asymptotic(part, opts);
  out.asymptotic_norm = an.value;
  out.theta_peak = an.theta;

  auto peak = finite_peak(sf, an.value, opts);
  out.large_correction = peak.large_correction;

  if (peak.sigma > an.value + 1e-12) {
    out.hinf = peak.sigma;
    out.wpeak = peak.omega;
  } else {
    out.hinf = std::max(an.value, peak.sigma);
    out.wpeak = kInf;  // ties go to the asymptotic norm
  }
  return out;
}

}  // namespace tds::freqresp
