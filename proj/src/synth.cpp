// Copyright (c) 2026 The tdsc developers
// SPDX-License-Identifier: Apache-2.0

#include "tds/synth.hpp"

#include <array>
#include <cmath>
#include <iostream>
#include <memory>
#include <random>

namespace tds::synth {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using model::DelayDifferencePart;
using model::Kind;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

struct MaskRef {
  const MatrixXd* mask;
  const MatrixXd* basis;
};

std::array<MaskRef, 4> mask_refs(const ControllerPattern& p) {
  return {MaskRef{&p.maskAc, &p.basisAc}, MaskRef{&p.maskBc, &p.basisBc},
          MaskRef{&p.maskCc, &p.basisCc}, MaskRef{&p.maskDc, &p.basisDc}};
}
}  // namespace

ParamLayout make_layout(const ControllerPattern& pattern, const ClosedLoop& cl) {
  ParamLayout layout;
  layout.nc = cl.nc;
  layout.q1 = static_cast<int>(pattern.maskBc.cols());
  layout.p1 = static_cast<int>(pattern.maskCc.rows());
  pattern.validate(layout.nc, layout.q1, layout.p1);

  const int rows[4] = {cl.ac_row, cl.bc_row, cl.cc_row, cl.dc_row};
  const int cols[4] = {cl.ac_col, cl.bc_col, cl.cc_col, cl.dc_col};
  auto refs = mask_refs(pattern);
  for (int m = 0; m < 4; ++m) {
    const MatrixXd& mask = *refs[m].mask;
    for (int i = 0; i < mask.rows(); ++i)
      for (int j = 0; j < mask.cols(); ++j)
        if (mask(i, j) != 0.0)
          layout.entries.push_back({m, i, j, rows[m] + i, cols[m] + j});
  }
  return layout;
}

VectorXd pack(const Controller& k, const ControllerPattern& pattern) {
  pattern.validate(k.nc, static_cast<int>(k.Bc.cols()), static_cast<int>(k.Cc.rows()));
  const MatrixXd* mats[4] = {&k.Ac, &k.Bc, &k.Cc, &k.Dc};
  auto refs = mask_refs(pattern);
  std::vector<double> vals;
  for (int m = 0; m < 4; ++m) {
    const MatrixXd& mask = *refs[m].mask;
    for (int i = 0; i < mask.rows(); ++i)
      for (int j = 0; j < mask.cols(); ++j)
        if (mask(i, j) != 0.0) vals.push_back((*mats[m])(i, j));
  }
  return Eigen::Map<VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

Controller unpack(const VectorXd& p, const ControllerPattern& pattern, int nc, int q1, int p1) {
  pattern.validate(nc, q1, p1);
  Controller k;
  k.nc = nc;
  k.Ac = pattern.basisAc;
  k.Bc = pattern.basisBc;
  k.Cc = pattern.basisCc;
  k.Dc = pattern.basisDc;
  MatrixXd* mats[4] = {&k.Ac, &k.Bc, &k.Cc, &k.Dc};
  auto refs = mask_refs(pattern);
  int idx = 0;
  for (int m = 0; m < 4; ++m) {
    const MatrixXd& mask = *refs[m].mask;
    for (int i = 0; i < mask.rows(); ++i)
      for (int j = 0; j < mask.cols(); ++j)
        if (mask(i, j) != 0.0) {
          if (idx >= p.size()) fail(Errc::ShapeMismatch, "parameter vector too short");
          (*mats[m])(i, j) = p(idx++);
        }
  }
  if (idx != p.size()) fail(Errc::ShapeMismatch, "parameter vector too long");
  return k;
}

// ---------------------------------------------------------------------------

struct ObjectiveContext::Impl {
  SynthOptions opts;
  ControllerPattern pattern;
  int nc, q1, p1;
  ClosedLoop cl;  // template; the controller term is poked per evaluation
  ParamLayout layout;
  Method method = Method::Auto;
  bool ess_retarded = false;
  bool delay_free = false;

  // Difference-part machinery (the bases depend only on E_cl).
  bool has_null = false;    // E_cl singular
  MatrixXd U, V;            // null-space bases of E_cl
  MatrixXd A22_0;           // zero-delay (22) coefficient (p-independent)
  Eigen::FullPivLU<MatrixXd> A22_0_lu;
  int ctrl_term = -1;       // index in cl.sys.A

  // Spectrum tracking.
  double anchor = -1.0;
  int fixN = -1;
  std::vector<Complex> tracked;
  int since_scan = 0;

  // Standard-form template for the H-infinity objective.
  bool have_sf = false;
  model::StandardForm sf;
  int sf_ctrl_term = -1;
  MatrixXd sfU, sfV;
  double last_wpeak = -1.0;
  int hinf_since_scan = 0;

  void poke(const VectorXd& p) {
    MatrixXd& M = cl.sys.A[ctrl_term].matrix;
    for (int i = 0; i < layout.dim(); ++i) M(layout.entries[i].row, layout.entries[i].col) = p(i);
    if (have_sf) {
      MatrixXd& S = sf.A[sf_ctrl_term].matrix;
      for (int i = 0; i < layout.dim(); ++i)
        S(layout.entries[i].row, layout.entries[i].col) = p(i);
    }
  }

  DelayDifferencePart current_part() const {
    DelayDifferencePart part;
    part.U = U;
    part.V = V;
    part.classification = model::Classification::EssentiallyNeutral;
    for (const auto& t : cl.sys.A)
      part.A22.push_back({U.transpose() * t.matrix * V, t.delay, t.infinitesimal});
    return part;
  }

  spectrum::RootsOptions roots_opts(bool use_fixN) const {
    spectrum::RootsOptions ro = opts.roots;
    ro.quiet = true;
    ro.seed = opts.seed;
    if (use_fixN && fixN > 0) ro.fix_N = fixN;
    return ro;
  }

  void full_scan() {
    auto res = spectrum::roots(cl.sys, spectrum::Region::half_plane(anchor), roots_opts(true));
    if (fixN <= 0 && !res.info.delay_free_fallback) fixN = res.info.N;
    tracked.clear();
    for (Complex z : res.roots)
      if (z.imag() >= 0.0) tracked.push_back(z);
    since_scan = 0;
  }

  // Spectral abscissa with warm-started root tracking; full rescans are
  // interleaved so newly entering roots are picked up.
  struct SpectrumEval {
    double c;
    Complex active;
    bool found;
  };

  SpectrumEval eval_spectrum() {
    if (delay_free) {
      MatrixXd A0 = MatrixXd::Zero(cl.sys.n, cl.sys.n);
      for (const auto& t : cl.sys.A) A0 += t.matrix;
      auto vals = numkernel::generalized_eigvals(A0, cl.sys.E);
      SpectrumEval ev{-kInf, Complex(0, 0), false};
      for (Complex z : vals) {
        if (z.imag() < 0) continue;
        if (!ev.found || z.real() > ev.c + 1e-12 ||
            (std::abs(z.real() - ev.c) <= 1e-8 && std::abs(z.imag()) < std::abs(ev.active.imag()))) {
          ev.c = std::max(ev.c, z.real());
          if (z.real() >= ev.c - 1e-12) ev.active = z;
          ev.found = true;
        }
      }
      return ev;
    }

    bool need_scan = tracked.empty() || since_scan >= 10;
    if (!need_scan) {
      std::vector<Complex> next;
      auto ro = roots_opts(false);
      for (Complex z : tracked) {
        auto nr = spectrum::newton_correct(cl.sys, z, ro);
        if (!nr.converged) continue;
        Complex lam = nr.lambda.imag() < 0 ? std::conj(nr.lambda) : nr.lambda;
        if (lam.real() < anchor) continue;
        bool dup = false;
        for (Complex w : next)
          if (std::abs(w - lam) <= 1e-8 * (1.0 + std::abs(lam))) dup = true;
        if (!dup) next.push_back(lam);
      }
      if (next.size() * 2 < tracked.size() || next.empty())
        need_scan = true;
      else {
        tracked = std::move(next);
        ++since_scan;
      }
    }
    if (need_scan) {
      for (int attempt = 0; attempt < 5 && tracked.empty(); ++attempt) {
        full_scan();
        if (tracked.empty()) anchor -= std::pow(2.0, attempt);
      }
    }

    SpectrumEval ev{anchor, Complex(anchor, 0.0), false};
    for (Complex z : tracked) {
      if (!ev.found || z.real() > ev.active.real() + 1e-8 ||
          (std::abs(z.real() - ev.active.real()) <= 1e-8 &&
           std::abs(z.imag()) < std::abs(ev.active.imag()))) {
        ev.active = z;
        ev.found = true;
      }
    }
    if (ev.found) ev.c = ev.active.real();
    // Re-anchor when the abscissa drifts; a deeper half-plane needs a rescan.
    if (ev.found && (ev.c - 1.0 < anchor - 1.5 || ev.c - 1.0 > anchor + 1.0)) {
      anchor = ev.c - 1.0;
      fixN = -1;
      full_scan();
    }
    return ev;
  }

  // d Re(lambda) / dp at a root, via the left/right null vectors of M.
  bool root_gradient(Complex lambda, VectorXd* grad) {
    const int n = cl.sys.n;
    MatrixXcd M = model::char_matrix(cl.sys, lambda);
    Eigen::JacobiSVD<MatrixXcd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    VectorXcd v = svd.matrixV().col(n - 1);
    VectorXcd u = svd.matrixU().col(n - 1);
    Complex denom = u.dot(model::char_matrix_deriv(cl.sys, lambda) * v);
    if (std::abs(denom) < 1e-12 * model::char_matrix_scale(cl.sys)) return false;
    grad->resize(layout.dim());
    for (int i = 0; i < layout.dim(); ++i) {
      Complex num = std::conj(u(layout.entries[i].row)) * v(layout.entries[i].col);
      (*grad)(i) = (num / denom).real();
    }
    return true;
  }

  // Finite-difference fallback for (near-)defective active roots.
  VectorXd fd_gradient(const VectorXd& p) {
    VectorXd g(layout.dim());
    const double h = 1e-7;
    for (int i = 0; i < layout.dim(); ++i) {
      VectorXd pp = p, pm = p;
      pp(i) += h;
      pm(i) -= h;
      poke(pp);
      double cp = eval_spectrum().c;
      poke(pm);
      double cm = eval_spectrum().c;
      g(i) = (cp - cm) / (2 * h);
    }
    poke(p);
    eval_spectrum();
    return g;
  }

  // gamma_0 (or gamma at r) of the current difference part plus its gradient
  // by eigenvalue sensitivity at the maximizing angles.
  struct GammaEval {
    double value = 0.0;
    VectorXd grad;
    double dgamma_dr = 0.0;
    bool grad_ok = false;
  };

  GammaEval eval_gamma(double r) {
    GammaEval out;
    out.grad = VectorXd::Zero(layout.dim());
    auto part = current_part();
    if (!part.has_difference_dynamics()) return out;
    strongstab::GammaROptions go;
    go.Ntheta = opts.Ntheta;
    go.quiet = true;
    auto res = strongstab::gamma_r_detailed(part, r, go);
    out.value = res.value;

    // Sensitivities at the maximizer; theta(k-1) belongs to part.A22[k].
    const int nu = part.nu();
    MatrixXcd S = MatrixXcd::Zero(nu, nu);
    std::vector<MatrixXcd> Mk(part.A22.size());
    for (size_t k = 1; k < part.A22.size(); ++k) {
      Mk[k] = A22_0_lu.solve(part.A22[k].matrix).cast<Complex>();
      double h = part.A22[k].effective_delay();
      S += Mk[k] * std::exp(Complex(-r * h, res.theta(static_cast<int>(k) - 1)));
    }
    Eigen::ComplexEigenSolver<MatrixXcd> es(S, true);
    int best = 0;
    for (int i = 0; i < nu; ++i)
      if (std::abs(es.eigenvalues()(i)) > std::abs(es.eigenvalues()(best))) best = i;
    Complex mu = es.eigenvalues()(best);
    if (std::abs(mu) < 1e-12) return out;  // nilpotent part: gamma locally flat

    VectorXcd q = es.eigenvectors().col(best);
    Eigen::ComplexEigenSolver<MatrixXcd> esl(S.adjoint(), true);
    int bl = 0;
    for (int i = 0; i < nu; ++i)
      if (std::abs(esl.eigenvalues()(i) - std::conj(mu)) <
          std::abs(esl.eigenvalues()(bl) - std::conj(mu)))
        bl = i;
    VectorXcd w = esl.eigenvectors().col(bl);
    Complex wq = w.dot(q);
    if (std::abs(wq) < 1e-10) return out;

    Complex scale = std::conj(mu) / std::abs(mu) / wq;
    // Controller entries sit in the infinitesimal term; find its index within
    // the part listing (same ordering as cl.sys.A).
    int ctrl_k = ctrl_term;
    double h_ctrl = part.A22[ctrl_k].effective_delay();
    Complex phase = std::exp(Complex(-r * h_ctrl, res.theta(ctrl_k - 1)));
    VectorXcd wA = VectorXcd::Zero(nu);
    // w^H A1^{-1} (U(r,:)^T V(c,:)) q = (A1^{-T} w)^H_row * (V(c,:) q).
    VectorXcd A1invT_w = A22_0_lu.transpose().solve(w.real().eval()).cast<Complex>() +
                         Complex(0, 1) * A22_0_lu.transpose().solve(w.imag().eval()).cast<Complex>();
    out.grad_ok = true;
    for (int i = 0; i < layout.dim(); ++i) {
      const auto& e = layout.entries[i];
      // dS/dp_i = A1^{-1} U(row,:)^T V(col,:) * phase
      Complex left = 0.0;
      for (int a = 0; a < nu; ++a) left += std::conj(A1invT_w(a)) * U(e.row, a);
      Complex right = 0.0;
      for (int b = 0; b < nu; ++b) right += V(e.col, b) * q(b);
      out.grad(i) = (scale * left * right * phase).real();
    }
    // d gamma / d r for the implicit C_D gradient.
    MatrixXcd dSdr = MatrixXcd::Zero(nu, nu);
    for (size_t k = 1; k < part.A22.size(); ++k) {
      double h = part.A22[k].effective_delay();
      dSdr += (-h) * Mk[k] * std::exp(Complex(-r * h, res.theta(static_cast<int>(k) - 1)));
    }
    out.dgamma_dr = (scale * (w.adjoint() * dSdr * q)(0, 0)).real();
    return out;
  }
};

ObjectiveContext::ObjectiveContext(const TdsSystem& plant, int nc,
                                   const ControllerPattern& pattern, const SynthOptions& options)
    : impl_(std::make_unique<Impl>()) {
  Impl& im = *impl_;
  im.opts = options;
  im.pattern = pattern;
  im.nc = nc;
  im.q1 = plant.q1;
  im.p1 = plant.p1;

  int free_entries = 0;
  for (const auto& ref : mask_refs(pattern))
    free_entries += static_cast<int>((ref.mask->array() != 0.0).count());
  Controller probe = unpack(VectorXd::Zero(free_entries), pattern, nc, plant.q1, plant.p1);
  im.cl = model::close_loop(plant, probe);
  im.ctrl_term = im.cl.controller_term;
  im.layout = make_layout(pattern, im.cl);
  im.delay_free = im.cl.sys.is_delay_free();

  auto split = numkernel::nullspace_split(im.cl.sys.E);
  im.has_null = split.rank < im.cl.sys.n;
  if (im.has_null) {
    im.U = split.U;
    im.V = split.V;
    im.A22_0 = im.U.transpose() * im.cl.sys.A[0].matrix * im.V;
    im.A22_0_lu = Eigen::FullPivLU<MatrixXd>(im.A22_0);
    if (!im.A22_0_lu.isInvertible())
      fail(Errc::SingularA22, "the closed loop violates the index-1 assumption");
  }

  // Structural classification: poke all-ones to expose the sparsity that any
  // parameter value could reach.
  int delayed_nonzero = 0;
  {
    VectorXd ones = VectorXd::Ones(im.layout.dim());
    im.poke(ones);
    if (im.has_null) {
      for (size_t k = 1; k < im.cl.sys.A.size(); ++k) {
        MatrixXd blk = im.U.transpose() * im.cl.sys.A[k].matrix * im.V;
        if (blk.cwiseAbs().maxCoeff() > 0.0) ++delayed_nonzero;
      }
    }
    im.poke(VectorXd::Zero(im.layout.dim()));
  }
  im.ess_retarded = (delayed_nonzero == 0);
  if (options.method == Method::Auto)
    im.method = im.ess_retarded ? Method::CD : (delayed_nonzero <= 2 ? Method::CD : Method::Barrier);
  else
    im.method = options.method;
}

ObjectiveContext::~ObjectiveContext() = default;
ObjectiveContext::ObjectiveContext(ObjectiveContext&&) noexcept = default;

const ParamLayout& ObjectiveContext::layout() const { return impl_->layout; }
Method ObjectiveContext::resolved_method() const { return impl_->method; }
bool ObjectiveContext::essentially_retarded() const { return impl_->ess_retarded; }

ClosedLoop ObjectiveContext::closed_loop(const VectorXd& p) const {
  Impl& im = *impl_;
  im.poke(p);
  ClosedLoop out = im.cl;
  im.poke(VectorXd::Zero(im.layout.dim()));
  return out;
}

RightmostSensitivity ObjectiveContext::rightmost_sensitivity(const VectorXd& p) {
  Impl& im = *impl_;
  im.poke(p);
  auto ev = im.eval_spectrum();
  RightmostSensitivity out;
  out.c = ev.c;
  out.active_root = ev.active;
  if (!ev.found) {
    out.dc_dp = VectorXd::Zero(im.layout.dim());
    return out;
  }
  if (!im.root_gradient(ev.active, &out.dc_dp)) out.dc_dp = im.fd_gradient(p);
  return out;
}

ObjectiveEvaluation ObjectiveContext::objective_gamma0(const VectorXd& p) {
  Impl& im = *impl_;
  im.poke(p);
  auto g = im.eval_gamma(0.0);
  return {g.value, g.grad};
}

ObjectiveEvaluation ObjectiveContext::objective_stab(const VectorXd& p) {
  Impl& im = *impl_;
  auto rm = rightmost_sensitivity(p);

  if (im.ess_retarded || !im.has_null) return {rm.c, rm.dc_dp};

  if (im.method == Method::Barrier) {
    auto g = im.eval_gamma(0.0);
    double room = 1.0 - im.opts.w1 - g.value;
    if (room <= 0.0) return {kInf, VectorXd::Zero(im.layout.dim())};
    double f = rm.c - im.opts.w2 * std::log(room);
    VectorXd grad = rm.dc_dp + (im.opts.w2 / room) * g.grad;
    return {f, grad};
  }

  // Approach 1: f = max(c, C_D) with the active branch's gradient.
  strongstab::CdOptions co;
  co.Ntheta = im.opts.Ntheta;
  co.quiet = true;
  double CD;
  try {
    CD = strongstab::cd(im.current_part(), co);
  } catch (const Error& e) {
    if (e.code() != Errc::SingularA22) throw;
    return {kInf, VectorXd::Zero(im.layout.dim())};
  }
  if (CD == kInf) return {kInf, VectorXd::Zero(im.layout.dim())};
  if (!std::isfinite(CD) || rm.c >= CD - 1e-8) return {std::max(rm.c, CD), rm.dc_dp};

  // C_D branch: implicit differentiation of gamma(r, p) = 1.
  auto g = im.eval_gamma(CD);
  if (!g.grad_ok || std::abs(g.dgamma_dr) < 1e-14) return {CD, rm.dc_dp};
  VectorXd grad = -g.grad / g.dgamma_dr;
  return {CD, grad};
}

ObjectiveEvaluation ObjectiveContext::objective_hinf(const VectorXd& p) {
  Impl& im = *impl_;
  const int dim = im.layout.dim();
  auto infeasible = [&]() { return ObjectiveEvaluation{kInf, VectorXd::Zero(dim)}; };

  // Strong stability gate: gamma0 < 1 and c < 0.
  auto rm = rightmost_sensitivity(p);
  if (!(rm.c < 0.0)) return infeasible();
  double CD = -kInf;
  VectorXd dCD;
  if (im.has_null) {
    auto g0 = im.eval_gamma(0.0);
    if (!(g0.value < 1.0)) return infeasible();
    if (im.opts.alpha > 0.0) {
      strongstab::CdOptions co;
      co.Ntheta = im.opts.Ntheta;
      co.quiet = true;
      CD = strongstab::cd(im.current_part(), co);
      if (CD == kInf) return infeasible();
      if (std::isfinite(CD)) {
        auto g = im.eval_gamma(CD);
        if (g.grad_ok && std::abs(g.dgamma_dr) > 1e-14)
          dCD = -g.grad / g.dgamma_dr;
        else
          dCD = VectorXd::Zero(dim);
      }
    }
  }

  // Strong H-infinity norm of the closed loop.
  if (!im.have_sf) {
    im.sf = model::standard_form(im.cl.sys);
    im.sf_ctrl_term = -1;
    for (size_t k = 0; k < im.sf.A.size(); ++k)
      if (im.sf.A[k].infinitesimal && im.sf.A[k].delay == 0.0)
        im.sf_ctrl_term = static_cast<int>(k);
    if (im.sf_ctrl_term < 0) fail(Errc::NotApplicable, "controller block lost in standard form");
    auto split = numkernel::nullspace_split(im.sf.Es);
    im.sfU = split.U;
    im.sfV = split.V;
    im.have_sf = true;
    im.poke(p);  // refresh the new sf template
  }

  freqresp::HinfOptions ho = im.opts.hinf;
  ho.quiet = true;

  freqresp::AsymptoticPart part = freqresp::asymptotic_part(im.sf);
  freqresp::AsymptoticNorm an;
  if (!part.trivial) {
    try {
      an = freqresp::hinf_asymptotic(part, ho);
    } catch (const Error& e) {
      if (e.code() == Errc::NotStronglyStableDifference) return infeasible();
      throw;
    }
  }

  // Finite peak: track the previous frequency, rescan periodically.
  double fin_sigma = -1.0, fin_omega = 0.0;
  bool rescan = im.last_wpeak < 0.0 || im.hinf_since_scan >= 10;
  if (!rescan) {
    double w = im.last_wpeak;
    double g1 = freqresp::sigma_derivative(im.sf, w);
    double w0 = w, g0 = g1;
    double w1 = w + std::max(1e-6, 1e-4 * (1.0 + w));
    g1 = freqresp::sigma_derivative(im.sf, w1);
    for (int it = 0; it < 30 && std::abs(g1) > ho.newton_tol; ++it) {
      if (g1 == g0) break;
      double w2 = w1 - g1 * (w1 - w0) / (g1 - g0);
      if (!std::isfinite(w2) || w2 < 0.0) break;
      w0 = w1;
      g0 = g1;
      w1 = w2;
      g1 = freqresp::sigma_derivative(im.sf, w1);
    }
    try {
      Eigen::JacobiSVD<MatrixXcd> svd(freqresp::transfer_eval(im.sf, Complex(0.0, w1)));
      fin_sigma = svd.singularValues()(0);
      fin_omega = w1;
      // Also keep an eye on the zero-frequency response.
      Eigen::JacobiSVD<MatrixXcd> svd0(freqresp::transfer_eval(im.sf, Complex(0.0, 0.0)));
      if (svd0.singularValues()(0) > fin_sigma) {
        fin_sigma = svd0.singularValues()(0);
        fin_omega = 0.0;
      }
      ++im.hinf_since_scan;
    } catch (const Error&) {
      rescan = true;
    }
  }
  if (rescan) {
    auto peak = freqresp::finite_peak(im.sf, an.value, ho);
    fin_sigma = peak.sigma;
    fin_omega = peak.omega;
    im.hinf_since_scan = 0;
  }
  im.last_wpeak = fin_omega;

  double hinf;
  VectorXd dhinf(dim);
  if (fin_sigma > an.value + 1e-12) {
    hinf = fin_sigma;
    // d sigma / dp_i = Re( (u^H C M^{-1})_r ((M^{-1} B) v)_c ) at j w*.
    Complex s(0.0, fin_omega);
    MatrixXcd M = s * im.sf.Es.cast<Complex>();
    for (const auto& t : im.sf.A)
      M -= std::exp(-s * t.effective_delay()) * t.matrix.cast<Complex>();
    Eigen::PartialPivLU<MatrixXcd> lu(M);
    MatrixXcd MinvB = lu.solve(im.sf.Bs.cast<Complex>());
    MatrixXcd T = im.sf.Cs.cast<Complex>() * MinvB;
    Eigen::JacobiSVD<MatrixXcd> svd(T, Eigen::ComputeThinU | Eigen::ComputeThinV);
    VectorXcd u1 = svd.matrixU().col(0), v1 = svd.matrixV().col(0);
    VectorXcd a = (M.transpose().partialPivLu().solve(
                       (u1.adjoint() * im.sf.Cs.cast<Complex>()).transpose().eval()));
    VectorXcd b = MinvB * v1;
    for (int i = 0; i < dim; ++i) {
      const auto& e = im.layout.entries[i];
      dhinf(i) = (a(e.row) * b(e.col)).real();
    }
  } else {
    hinf = std::max(an.value, std::max(fin_sigma, 0.0));
    // Asymptotic branch: sensitivities of the torus maximum.
    const int nu = static_cast<int>(im.sfV.cols());
    if (part.trivial || nu == 0 || an.theta.size() == 0) {
      dhinf.setZero();
    } else {
      MatrixXcd K = part.A22[0].matrix.cast<Complex>();
      Complex ctrl_phase = 0.0;
      for (size_t k = 1; k < part.A22.size(); ++k) {
        Complex ph = std::exp(Complex(0.0, -an.theta(static_cast<int>(k) - 1)));
        K += part.A22[k].matrix.cast<Complex>() * ph;
        if (part.A22[k].infinitesimal) ctrl_phase = ph;
      }
      if (ctrl_phase == Complex(0.0, 0.0)) {
        // Controller block projected to zero: locally flat.
        dhinf.setZero();
      } else {
        Eigen::PartialPivLU<MatrixXcd> lu(K);
        MatrixXcd KinvB = lu.solve(part.B2.cast<Complex>());
        MatrixXcd T = -(part.C2.cast<Complex>() * KinvB);
        Eigen::JacobiSVD<MatrixXcd> svd(T, Eigen::ComputeThinU | Eigen::ComputeThinV);
        VectorXcd u1 = svd.matrixU().col(0), v1 = svd.matrixV().col(0);
        // dT/dp_i = C2 K^{-1} (U(r,:)^T V(c,:)) K^{-1} B2 * phase
        VectorXcd a = K.transpose().partialPivLu().solve(
            (u1.adjoint() * part.C2.cast<Complex>()).transpose().eval());
        VectorXcd b = KinvB * v1;
        for (int i = 0; i < dim; ++i) {
          const auto& e = im.layout.entries[i];
          Complex left = 0.0, right = 0.0;
          for (int x = 0; x < nu; ++x) left += a(x) * im.sfU(e.row, x);
          for (int x = 0; x < nu; ++x) right += im.sfV(e.col, x) * b(x);
          dhinf(i) = (left * right * ctrl_phase).real();
        }
      }
    }
  }

  const double alpha = im.opts.alpha;
  if (alpha <= 0.0) return {hinf, dhinf};
  double C = std::max(rm.c, CD);
  VectorXd dC = (std::isfinite(CD) && CD > rm.c + 1e-8 && dCD.size() == dim) ? dCD : rm.dc_dp;
  return {alpha * C + (1.0 - alpha) * hinf, alpha * dC + (1.0 - alpha) * dhinf};
}

// ---------------------------------------------------------------------------

namespace {

ControllerPattern resolve_pattern(const std::optional<ControllerPattern>& pattern, int nc,
                                  const TdsSystem& plant) {
  if (pattern) return *pattern;
  return ControllerPattern::full(nc, plant.q1, plant.p1);
}

std::vector<VectorXd> packed_initials(const std::vector<Controller>& initials,
                                      const ControllerPattern& pattern) {
  std::vector<VectorXd> out;
  for (const auto& k : initials) out.push_back(pack(k, pattern));
  return out;
}

double verify_strong_sa(const ClosedLoop& cl, double hint, const SynthOptions& opts) {
  spectrum::RootsOptions ro = opts.roots;
  ro.quiet = true;
  strongstab::CdOptions co;
  co.Ntheta = opts.Ntheta;
  co.quiet = true;
  double r = std::isfinite(hint) ? std::min(hint, 0.0) - 1.0 : -1.0;
  return strongstab::strong_sa(cl.sys, r, ro, co);
}

}  // namespace

SynthResult stabopt(const TdsSystem& plant, int nc,
                    const std::optional<ControllerPattern>& pattern_in,
                    const std::vector<Controller>& initials, const SynthOptions& options) {
  plant.validate();
  ControllerPattern pattern = resolve_pattern(pattern_in, nc, plant);
  auto inits = packed_initials(initials, pattern);

  std::mt19937_64 gen(options.seed);
  std::normal_distribution<double> nd;

  SynthResult result;
  bool have_best = false;
  VectorXd best_p;
  ObjectiveContext* best_ctx = nullptr;
  std::vector<std::unique_ptr<ObjectiveContext>> contexts;

  for (int s = 0; s < options.nstart; ++s) {
    SynthOptions per = options;
    per.seed = options.seed + 7919ULL * static_cast<unsigned long long>(s);
    per.nsopt.seed = per.seed;
    contexts.push_back(std::make_unique<ObjectiveContext>(plant, nc, pattern, per));
    ObjectiveContext& ctx = *contexts.back();

    VectorXd p0;
    if (s < static_cast<int>(inits.size()))
      p0 = inits[s];
    else {
      p0.resize(ctx.layout().dim());
      for (int i = 0; i < p0.size(); ++i) p0(i) = nd(gen);
    }

    StartLog log{s, kInf, false, nsopt::NsoptStatus::MaxIter};
    if (ctx.resolved_method() == Method::Barrier) {
      auto g0 = ctx.objective_gamma0(p0);
      if (!(g0.value < 1.0 - options.w1)) {
        nsopt::NsoptOptions pre = per.nsopt;
        pre.fvalquit = 1.0 - options.w1;
        pre.print_level = 0;
        auto r = nsopt::bfgs_minimize([&](const VectorXd& p) { return ctx.objective_gamma0(p); },
                                      p0, pre);
        p0 = r.x;
        if (!(r.f < 1.0 - options.w1)) {
          log.discarded = true;
          result.log.push_back(log);
          if (options.print_level >= 1)
            std::cerr << "start " << s << ": no feasible barrier region found\n";
          continue;
        }
      }
    }

    nsopt::NsoptOptions no = per.nsopt;
    no.print_level = std::max(0, options.print_level - 1);
    auto r = nsopt::bfgs_minimize([&](const VectorXd& p) { return ctx.objective_stab(p); }, p0,
                                  no);
    if (options.nsopt.gradient_sampling && std::isfinite(r.f)) {
      auto gs = nsopt::gradient_sampling_refine(
          [&](const VectorXd& p) { return ctx.objective_stab(p); }, r.x, no);
      if (gs.f <= r.f) {
        r.x = gs.x;
        r.f = gs.f;
      }
    }
    log.objective = r.f;
    log.status = r.status;
    result.log.push_back(log);
    if (options.print_level >= 1)
      std::cerr << "start " << s << ": objective " << r.f << " (" << nsopt::status_name(r.status)
                << ")\n";
    if (std::isfinite(r.f) && (!have_best || r.f < result.objective)) {
      result.objective = r.f;
      best_p = r.x;
      best_ctx = &ctx;
      have_best = true;
    }
  }

  if (!have_best) fail(Errc::AllStartsFailed, "every start ended infeasible");

  result.controller = unpack(best_p, pattern, nc, plant.q1, plant.p1);
  result.closed_loop = best_ctx->closed_loop(best_p);
  result.strong_sa = verify_strong_sa(result.closed_loop, result.objective, options);
  result.stabilizing = result.strong_sa < 0.0;
  if (!result.stabilizing && options.print_level >= 1)
    std::cerr << "Warning: Resulting controller is not stabilizing.\n";
  return result;
}

SynthResult hiopt(const TdsSystem& plant, int nc,
                  const std::optional<ControllerPattern>& pattern_in,
                  const std::vector<Controller>& initials, const SynthOptions& options) {
  plant.validate();
  if (plant.p2 == 0 || plant.q2 == 0)
    fail(Errc::NoPerformanceChannels, "H-infinity synthesis needs performance channels");
  ControllerPattern pattern = resolve_pattern(pattern_in, nc, plant);
  auto inits = packed_initials(initials, pattern);

  std::mt19937_64 gen(options.seed);
  std::normal_distribution<double> nd;

  SynthResult result;
  bool have_best = false;
  VectorXd best_p;
  ObjectiveContext* best_ctx = nullptr;
  std::vector<std::unique_ptr<ObjectiveContext>> contexts;

  for (int s = 0; s < options.nstart; ++s) {
    SynthOptions per = options;
    per.seed = options.seed + 7919ULL * static_cast<unsigned long long>(s);
    per.nsopt.seed = per.seed;
    contexts.push_back(std::make_unique<ObjectiveContext>(plant, nc, pattern, per));
    ObjectiveContext& ctx = *contexts.back();

    VectorXd p0;
    if (s < static_cast<int>(inits.size()))
      p0 = inits[s];
    else {
      p0.resize(ctx.layout().dim());
      for (int i = 0; i < p0.size(); ++i) p0(i) = nd(gen);
    }

    StartLog log{s, kInf, false, nsopt::NsoptStatus::MaxIter};

    // Strongly stabilizing starting point, via stabopt when necessary.
    if (!std::isfinite(ctx.objective_hinf(p0).value)) {
      SynthOptions so = per;
      so.nstart = 1;
      so.print_level = 0;
      auto k0 = unpack(p0, pattern, nc, plant.q1, plant.p1);
      auto stab = stabopt(plant, nc, pattern, {k0}, so);
      if (!stab.stabilizing) {
        log.discarded = true;
        result.log.push_back(log);
        if (options.print_level >= 1)
          std::cerr << "start " << s << ": could not find a strongly stabilizing start\n";
        continue;
      }
      p0 = pack(stab.controller, pattern);
    }

    nsopt::NsoptOptions no = per.nsopt;
    no.print_level = std::max(0, options.print_level - 1);
    auto r = nsopt::bfgs_minimize([&](const VectorXd& p) { return ctx.objective_hinf(p); }, p0,
                                  no);
    if (options.nsopt.gradient_sampling && std::isfinite(r.f)) {
      auto gs = nsopt::gradient_sampling_refine(
          [&](const VectorXd& p) { return ctx.objective_hinf(p); }, r.x, no);
      if (gs.f <= r.f) {
        r.x = gs.x;
        r.f = gs.f;
      }
    }
    log.objective = r.f;
    log.status = r.status;
    result.log.push_back(log);
    if (options.print_level >= 1)
      std::cerr << "start " << s << ": objective " << r.f << " (" << nsopt::status_name(r.status)
                << ")\n";
    if (std::isfinite(r.f) && (!have_best || r.f < result.objective)) {
      result.objective = r.f;
      best_p = r.x;
      best_ctx = &ctx;
      have_best = true;
    }
  }

  if (!have_best)
    fail(Errc::FailedStronglyStabilizing, "Failed to find a strongly stabilizing initial controller.");

  result.controller = unpack(best_p, pattern, nc, plant.q1, plant.p1);
  result.closed_loop = best_ctx->closed_loop(best_p);
  result.strong_sa = verify_strong_sa(result.closed_loop, 0.0, options);
  result.stabilizing = result.strong_sa < 0.0;
  freqresp::HinfOptions ho = options.hinf;
  ho.quiet = true;
  ho.roots.quiet = true;
  result.strong_hinf = freqresp::hinfnorm(result.closed_loop.sys, ho).hinf;
  return result;
}

}  // namespace tds::synth
