// Copyright (c) 2026 The tdsc developers
// SPDX-License-Identifier: Apache-2.0

#include "tds/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <map>
#include <random>

#include "tds/strongstab.hpp"

namespace tds::spectrum {

using Eigen::MatrixXcd;
using model::DelayTermList;
using model::Kind;

Region Region::half_plane(double r) {
  Region g;
  g.kind = Kind::HalfPlane;
  g.re_min = r;
  return g;
}

Region Region::rectangle(double re_min, double re_max, double im_min, double im_max) {
  if (re_min > re_max || im_min > im_max)
    fail(Errc::DimensionMismatch, "rectangle bounds must be ordered");
  Region g;
  g.kind = Kind::Rectangle;
  g.re_min = re_min;
  g.re_max = re_max;
  g.im_min = im_min;
  g.im_max = im_max;
  return g;
}

bool Region::contains(Complex z) const {
  if (kind == Kind::HalfPlane) return z.real() >= re_min;
  return z.real() >= re_min && z.real() <= re_max && z.imag() >= im_min && z.imag() <= im_max;
}

Region Region::inflated(double frac) const {
  Region g = *this;
  if (kind == Kind::HalfPlane) {
    g.re_min -= frac * (1.0 + std::abs(re_min));
  } else {
    double dx = frac * (re_max - re_min + 1.0);
    double dy = frac * (im_max - im_min + 1.0);
    g.re_min -= dx;
    g.re_max += dx;
    g.im_min -= dy;
    g.im_max += dy;
  }
  return g;
}

Pencil discretize(const TdsSystem& sys, int N) {
  sys.validate();
  double tau_max = 0.0;
  for (const auto& t : sys.A) tau_max = std::max(tau_max, t.effective_delay());
  for (const auto& t : sys.H) tau_max = std::max(tau_max, t.effective_delay());
  if (tau_max <= 0.0) tau_max = 1.0;  // delay-free: any interval reproduces Lambda(A)
  if (N < 1) fail(Errc::DimensionMismatch, "discretization degree must be >= 1");

  const int n = sys.n;
  auto grid = numkernel::cheb_grid(N, -tau_max, 0.0);
  const int dim = (N + 1) * n;
  MatrixXd Sigma = MatrixXd::Zero(dim, dim);
  MatrixXd Pi = MatrixXd::Zero(dim, dim);

  for (int i = 1; i <= N; ++i) {
    Pi.block(i * n, i * n, n, n).setIdentity();
    for (int j = 0; j <= N; ++j) {
      double d = grid.diff(i, j);
      if (d != 0.0) Sigma.block(i * n, j * n, n, n).diagonal().setConstant(d);
    }
  }

  Pi.block(0, 0, n, n) = sys.E;
  for (const auto& t : sys.A) {
    auto w = numkernel::barycentric_weights_row(grid, -t.effective_delay());
    for (int j = 0; j <= N; ++j)
      if (w(j) != 0.0) Sigma.block(0, j * n, n, n) += w(j) * t.matrix;
  }
  for (const auto& t : sys.H) {
    Eigen::RowVectorXd w =
        numkernel::barycentric_weights_row(grid, -t.effective_delay()).transpose() * grid.diff;
    for (int j = 0; j <= N; ++j)
      if (w(j) != 0.0) Sigma.block(0, j * n, n, n) -= w(j) * t.matrix;
  }
  return {std::move(Sigma), std::move(Pi)};
}

namespace {

double dedup_radius(Complex z) { return 1e-8 * (1.0 + std::abs(z)); }

// Degree needed to resolve oscillations e^{j w theta} over [-tau_max, 0].
int resolution_degree(double tau_max, double omega_max) {
  const double points_per_wavelength = 8.0;
  int N = static_cast<int>(std::ceil(points_per_wavelength * tau_max * std::abs(omega_max) /
                                     (2.0 * M_PI)));
  return std::max(30, N);
}

int cap_degree(int n, int max_size_evp) { return std::max(1, max_size_evp / n - 1); }

struct CandidateRoot {
  Complex lambda;
  double residual;
  int guess_index;
};

// Newton-corrects the pencil eigenvalues that fall inside the inflated
// region, canonicalized to the closed upper half-plane and deduplicated.
std::vector<CandidateRoot> corrected_roots_at(const TdsSystem& sys, const Region& region, int N,
                                              const RootsOptions& opts, SpectrumInfo* info,
                                              std::vector<Complex>* raw_out) {
  auto pencil = discretize(sys, N);
  auto raw = numkernel::generalized_eigvals(pencil.Sigma, pencil.Pi);
  if (raw_out) *raw_out = raw;

  Region search = region.inflated(0.1);
  std::vector<CandidateRoot> kept;
  int idx = -1;
  for (Complex z : raw) {
    if (z.imag() < 0.0) continue;  // conjugate handled by symmetry
    if (!search.contains(z) && !search.contains(std::conj(z))) continue;
    ++idx;
    auto nr = newton_correct(sys, z, opts);
    if (info) {
      info->newton_initial_guesses.push_back(z);
      info->newton_final_values.push_back(nr.lambda);
      info->newton_residuals.push_back(nr.residual);
      int rec = static_cast<int>(info->newton_initial_guesses.size()) - 1;
      if (!nr.converged) info->newton_unconverged_initial_guesses.push_back(rec);
      if (std::abs(nr.lambda - z) > 0.1 * (1.0 + std::abs(z)))
        info->newton_large_corrections.push_back(rec);
    }
    if (!nr.converged) continue;
    Complex lam = nr.lambda;
    if (lam.imag() < 0.0) lam = std::conj(lam);
    kept.push_back({lam, nr.residual, idx});
  }

  std::sort(kept.begin(), kept.end(), [](const CandidateRoot& a, const CandidateRoot& b) {
    if (a.lambda.real() != b.lambda.real()) return a.lambda.real() < b.lambda.real();
    return a.lambda.imag() < b.lambda.imag();
  });
  std::vector<CandidateRoot> dedup;
  for (const auto& c : kept) {
    bool merged = false;
    for (auto& d : dedup) {
      if (std::abs(d.lambda - c.lambda) <= dedup_radius(c.lambda)) {
        if (c.residual < d.residual) d = c;
        merged = true;
        break;
      }
    }
    if (!merged) dedup.push_back(c);
  }
  return dedup;
}

bool multisets_match(const std::vector<CandidateRoot>& a, const std::vector<CandidateRoot>& b,
                     const Region& region) {
  auto inside = [&](const std::vector<CandidateRoot>& v) {
    std::vector<Complex> r;
    for (const auto& c : v)
      if (region.contains(c.lambda) || region.contains(std::conj(c.lambda))) r.push_back(c.lambda);
    return r;
  };
  auto ra = inside(a), rb = inside(b);
  if (ra.size() != rb.size()) return false;
  std::vector<bool> used(rb.size(), false);
  for (Complex z : ra) {
    bool found = false;
    for (size_t j = 0; j < rb.size(); ++j) {
      if (!used[j] && std::abs(rb[j] - z) <= 1e-6 * (1.0 + std::abs(z))) {
        used[j] = true;
        found = true;
        break;
      }
    }
    if (!found) return false;
  }
  return true;
}

void warn(const RootsOptions& opts, const std::string& msg) {
  if (!opts.quiet) std::cerr << "Warning: (tds_roots): " << msg << "\n";
}

}  // namespace

DegreeChoice choose_degree(const TdsSystem& sys, const Region& region, const RootsOptions& opts) {
  DegreeChoice out;
  if (sys.is_delay_free()) {
    out.delay_free = true;
    return out;
  }
  double tau_max = 0.0;
  for (const auto& t : sys.A) tau_max = std::max(tau_max, t.effective_delay());
  for (const auto& t : sys.H) tau_max = std::max(tau_max, t.effective_delay());
  const int n = sys.n;
  const int n_cap = cap_degree(n, opts.max_size_evp);

  // Neutral-class gate: when gamma(left edge) >= 1 the requested region holds
  // a root chain (possibly after infinitesimal delay perturbations) and no
  // degree can capture it; fall back to the documented default.
  bool singular_difference = false;
  try {
    auto part = model::delay_difference_part(sys);
    if (part.has_difference_dynamics()) {
      double g = strongstab::gamma_r(part, region.re_min, {});
      if (g >= 1.0) {
        out.gamma_r_exceeds_one = true;
        int want = region.is_half_plane()
                       ? 30
                       : resolution_degree(tau_max, std::max(std::abs(region.im_min),
                                                             std::abs(region.im_max)));
        out.N_original = want;
        out.N = std::min(want, n_cap);
        out.max_size_evp_enforced = out.N < want;
        return out;
      }
    }
  } catch (const Error& e) {
    if (e.code() != Errc::SingularA22) throw;
    singular_difference = true;
  }
  if (singular_difference) {
    // Advanced/impulsive difference part (arises for bordered transmission
    // zero problems): pick the degree from the requested resolution alone.
    int want = region.is_half_plane()
                   ? 30
                   : resolution_degree(tau_max,
                                       std::max(std::abs(region.im_min), std::abs(region.im_max)));
    out.N_original = want;
    out.N = std::min(want, n_cap);
    out.max_size_evp_enforced = out.N < want;
    return out;
  }

  int N = 15;
  if (!region.is_half_plane()) {
    int res = resolution_degree(tau_max, std::max(std::abs(region.im_min), std::abs(region.im_max)));
    N = std::max(15, std::min(res, n_cap));
  }
  if (N >= n_cap) {
    out.N = n_cap;
    out.N_original = N;
    out.max_size_evp_enforced = N > n_cap;
    return out;
  }

  auto prev = corrected_roots_at(sys, region, N, opts, nullptr, nullptr);
  while (true) {
    int N2 = static_cast<int>(std::ceil(1.5 * N));
    bool capped = N2 >= n_cap;
    if (capped) N2 = n_cap;
    auto cur = corrected_roots_at(sys, region, N2, opts, nullptr, nullptr);
    if (multisets_match(prev, cur, region)) {
      out.N = N2;
      out.N_original = N2;
      return out;
    }
    if (capped) {
      out.N = N2;
      out.N_original = static_cast<int>(std::ceil(1.5 * N2));
      out.max_size_evp_enforced = true;
      return out;
    }
    N = N2;
    prev = std::move(cur);
  }
}

NewtonResult newton_correct(const TdsSystem& sys, Complex lambda0, const RootsOptions& opts) {
  NewtonResult res;
  res.lambda = lambda0;
  if (!std::isfinite(lambda0.real()) || !std::isfinite(lambda0.imag())) return res;

  const int n = sys.n;
  const double scale = model::char_matrix_scale(sys);
  std::mt19937_64 gen(opts.seed + 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> dist;
  VectorXcd c(n);
  for (int i = 0; i < n; ++i) c(i) = Complex(dist(gen), 0.0);
  c.normalize();

  Complex lambda = lambda0;
  MatrixXcd M = model::char_matrix(sys, lambda);
  Eigen::JacobiSVD<MatrixXcd> svd(M, Eigen::ComputeThinV);
  VectorXcd v = svd.matrixV().col(n - 1);
  Complex cv = c.dot(v);  // c^H v
  if (std::abs(cv) < 1e-8) {
    int imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    c.setZero();
    c(imax) = 1.0;
    cv = c.dot(v);
  }
  v /= cv;

  auto tol_for = [&](Complex lam) { return opts.newton_tol * (1.0 + std::abs(lam)) * scale; };

  for (int it = 0; it <= opts.newton_max_iter; ++it) {
    VectorXcd Mv = M * v;
    res.residual = Mv.norm() / v.norm();
    res.lambda = lambda;
    res.v = v / v.norm();
    if (res.residual <= tol_for(lambda)) {
      res.converged = true;
      return res;
    }
    if (it == opts.newton_max_iter) break;
    MatrixXcd J(n + 1, n + 1);
    J.topLeftCorner(n, n) = M;
    J.block(0, n, n, 1) = model::char_matrix_deriv(sys, lambda) * v;
    J.block(n, 0, 1, n) = c.adjoint();
    J(n, n) = Complex(0.0, 0.0);
    VectorXcd rhs(n + 1);
    rhs.head(n) = -Mv;
    rhs(n) = -(c.dot(v) - 1.0);
    VectorXcd step = J.partialPivLu().solve(rhs);
    if (!step.allFinite()) break;
    v += step.head(n);
    lambda += step(n);
    if (!std::isfinite(lambda.real()) || !std::isfinite(lambda.imag())) break;
    M = model::char_matrix(sys, lambda);
  }
  return res;
}

SpectrumResult roots(const TdsSystem& sys, const Region& region, const RootsOptions& opts) {
  sys.validate();
  SpectrumResult out;

  if (sys.is_delay_free()) {
    // ODE/DAE fallback: direct generalized eigensolve on the summed
    // zero-delay coefficient.
    warn(opts, sys.E.isIdentity(0.0) ? "The provided time-delay system is an ODE."
                                     : "The provided time-delay system is a DAE.");
    MatrixXd A0 = MatrixXd::Zero(sys.n, sys.n);
    for (const auto& t : sys.A) A0 += t.matrix;
    auto vals = numkernel::generalized_eigvals(A0, sys.E);
    out.info.N = 1;
    out.info.N_original = 1;
    out.info.delay_free_fallback = true;
    out.raw = vals;
    for (Complex z : vals)
      if (region.contains(z)) out.roots.push_back(z);
    std::sort(out.roots.begin(), out.roots.end(), [](Complex a, Complex b) {
      if (a.real() != b.real()) return a.real() < b.real();
      return a.imag() < b.imag();
    });
    return out;
  }

  DegreeChoice deg;
  if (opts.fix_N) {
    deg.N = *opts.fix_N;
    deg.N_original = *opts.fix_N;
  } else {
    deg = choose_degree(sys, region, opts);
    if (deg.gamma_r_exceeds_one)
      warn(opts, "Case: gamma(r) >= 1 (i.e., CD>r). Spectral discretization with N = " +
                     std::to_string(deg.N) +
                     " (lowered if maximum size of eigenvalue problem is exceeded).");
    if (deg.max_size_evp_enforced)
      warn(opts,
           "Size of the generalized EVP would exceed its maximum value. Discretization with N = " +
               std::to_string(deg.N) + " instead. As a consequence, not all characteristic roots "
                                       "in the specified region might be found.");
  }
  out.info.N = deg.N;
  out.info.N_original = deg.N_original;
  out.info.max_size_evp_enforced = deg.max_size_evp_enforced;
  out.info.gamma_r_exceeds_one = deg.gamma_r_exceeds_one;

  auto cands = corrected_roots_at(sys, region, deg.N, opts, &out.info, &out.raw);
  for (const auto& c : cands) {
    Complex lam = c.lambda;
    bool is_real = lam.imag() <= 0.5 * dedup_radius(lam);
    if (is_real) {
      lam = Complex(lam.real(), 0.0);
      if (region.contains(lam)) out.roots.push_back(lam);
    } else {
      if (region.contains(lam)) out.roots.push_back(lam);
      if (region.contains(std::conj(lam))) out.roots.push_back(std::conj(lam));
    }
  }
  std::sort(out.roots.begin(), out.roots.end(), [](Complex a, Complex b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  return out;
}

double sa(const TdsSystem& sys, double r, const RootsOptions& opts) {
  auto res = roots(sys, Region::half_plane(r), opts);
  if (res.roots.empty()) return -std::numeric_limits<double>::infinity();
  double m = -std::numeric_limits<double>::infinity();
  for (Complex z : res.roots) m = std::max(m, z.real());
  return m;
}

std::vector<Complex> tzeros(const TdsSystem& sys_in, const Region& rect, const RootsOptions& opts) {
  sys_in.validate();
  // Neutral plants are first rewritten as DDAEs; the channels and the
  // transfer function carry over exactly.
  TdsSystem sys = (sys_in.kind == Kind::Neutral) ? model::to_ddae(sys_in) : sys_in;
  const bool control = (sys.p1 == 1 && sys.q1 == 1);
  const bool perf = (sys.p2 == 1 && sys.q2 == 1);
  if (!control && !perf) fail(Errc::NotSiso, "transmission zeros need a SISO channel");
  const DelayTermList& B = control ? sys.B1 : sys.B2;
  const DelayTermList& C = control ? sys.C1 : sys.C2;
  const DelayTermList& D = control ? sys.D11 : sys.D22;

  const int n = sys.n;
  MatrixXd Ez = MatrixXd::Zero(n + 1, n + 1);
  Ez.topLeftCorner(n, n) = sys.E;

  struct Key {
    double d;
    bool inf;
    bool operator<(const Key& o) const { return d != o.d ? d < o.d : inf < o.inf; }
  };
  std::map<Key, MatrixXd> blocks;
  auto at = [&](double d, bool inf) -> MatrixXd& {
    auto it = blocks.find({d, inf});
    if (it == blocks.end()) it = blocks.emplace(Key{d, inf}, MatrixXd::Zero(n + 1, n + 1)).first;
    return it->second;
  };
  at(0.0, false);
  for (const auto& t : sys.A) at(t.delay, t.infinitesimal).topLeftCorner(n, n) += t.matrix;
  for (const auto& t : B) at(t.delay, t.infinitesimal).block(0, n, n, 1) += t.matrix;
  for (const auto& t : C) at(t.delay, t.infinitesimal).block(n, 0, 1, n) += t.matrix;
  for (const auto& t : D) at(t.delay, t.infinitesimal)(n, n) += t.matrix(0, 0);

  model::SystemSpec s;
  s.kind = model::Kind::Ddae;
  s.E = Ez;
  for (auto& [k, M] : blocks) s.A.push_back({M, k.d, k.inf});
  TdsSystem bordered = model::create_system(s);

  auto res = roots(bordered, rect, opts);

  // Keep genuine zeros: discard points where the plant itself is (nearly)
  // singular, since those are pole/zero ambiguities of the bordered pencil.
  std::vector<Complex> out;
  const double scale = model::char_matrix_scale(sys);
  for (Complex z : res.roots) {
    Eigen::JacobiSVD<MatrixXcd> svd(model::char_matrix(sys, z));
    double smin = svd.singularValues().minCoeff();
    if (smin > 1e-6 * scale * (1.0 + std::abs(z))) out.push_back(z);
  }
  return out;
}

}  // namespace tds::spectrum
