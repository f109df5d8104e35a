// Copyright (c) 2026 The tdsc developers
// SPDX-License-Identifier: Apache-2.0

#include "tds/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace tds::model {

namespace {

bool all_finite(const MatrixXd& m) { return m.allFinite(); }

void check_terms(const DelayTermList& terms, int rows, int cols, const char* name) {
  for (const auto& t : terms) {
    if (t.matrix.rows() != rows || t.matrix.cols() != cols)
      fail(Errc::DimensionMismatch, std::string(name) + " term has wrong dimensions");
    if (!all_finite(t.matrix)) fail(Errc::NonFiniteEntry, std::string(name) + " term not finite");
    if (!std::isfinite(t.delay) || t.delay < 0.0)
      fail(Errc::NegativeDelay, std::string(name) + " delay must be finite and non-negative");
  }
}

int cols_or(const DelayTermList& l, int fallback) {
  return l.empty() ? fallback : static_cast<int>(l.front().matrix.cols());
}
int rows_or(const DelayTermList& l, int fallback) {
  return l.empty() ? fallback : static_cast<int>(l.front().matrix.rows());
}

bool is_zero(const MatrixXd& m, double tol = 0.0) {
  return m.size() == 0 || m.cwiseAbs().maxCoeff() <= tol;
}

DelayTermList drop_zero_terms(DelayTermList terms, bool keep_zero_delay) {
  DelayTermList out;
  for (auto& t : terms) {
    bool keep = !is_zero(t.matrix) || (keep_zero_delay && t.delay == 0.0 && !t.infinitesimal);
    if (keep) out.push_back(std::move(t));
  }
  return out;
}

}  // namespace

const char* kind_name(Kind k) {
  switch (k) {
    case Kind::Retarded: return "retarded";
    case Kind::Neutral: return "neutral";
    case Kind::Ddae: return "ddae";
    case Kind::DelayDifference: return "delay_difference";
  }
  return "?";
}

DelayTermList canonicalize(DelayTermList terms) {
  std::stable_sort(terms.begin(), terms.end(), [](const DelayTerm& a, const DelayTerm& b) {
    if (a.delay != b.delay) return a.delay < b.delay;
    return a.infinitesimal < b.infinitesimal;
  });
  DelayTermList out;
  for (auto& t : terms) {
    if (!out.empty() && out.back().delay == t.delay && out.back().infinitesimal == t.infinitesimal)
      out.back().matrix += t.matrix;
    else
      out.push_back(std::move(t));
  }
  return out;
}

void TdsSystem::validate() const {
  if (n <= 0) fail(Errc::DimensionMismatch, "state dimension must be positive");
  if (E.rows() != n || E.cols() != n) fail(Errc::DimensionMismatch, "E must be n x n");
  if (!all_finite(E)) fail(Errc::NonFiniteEntry, "E not finite");
  if (A.empty()) fail(Errc::DimensionMismatch, "A term list must not be empty");
  check_terms(A, n, n, "A");
  check_terms(H, n, n, "H");
  check_terms(B1, n, p1, "B1");
  check_terms(C1, q1, n, "C1");
  check_terms(D11, q1, p1, "D11");
  check_terms(B2, n, p2, "B2");
  check_terms(C2, q2, n, "C2");
  check_terms(D12, q1, p2, "D12");
  check_terms(D21, q2, p1, "D21");
  check_terms(D22, q2, p2, "D22");

  switch (kind) {
    case Kind::Retarded:
    case Kind::Neutral:
      if (!E.isIdentity(0.0)) fail(Errc::DimensionMismatch, "E must be the identity");
      if (kind == Kind::Retarded && !H.empty())
        fail(Errc::DimensionMismatch, "retarded system cannot have H terms");
      for (const auto& t : H)
        if (t.delay <= 0.0 || t.infinitesimal)
          fail(Errc::NeutralZeroDelay, "neutral H delays must be strictly positive");
      break;
    case Kind::Ddae: {
      bool has_zero = false;
      for (const auto& t : A) has_zero = has_zero || (t.delay == 0.0 && !t.infinitesimal);
      if (!has_zero) fail(Errc::DdaeMissingZeroDelay, "a DDAE needs a zero-delay A term");
      if (!H.empty()) fail(Errc::DimensionMismatch, "DDAE cannot carry H terms");
      break;
    }
    case Kind::DelayDifference: {
      if (!is_zero(E)) fail(Errc::DimensionMismatch, "delay difference systems have E = 0");
      if (A.front().delay != 0.0 || A.front().infinitesimal)
        fail(Errc::DdaeMissingZeroDelay, "zero-delay coefficient must be present");
      Eigen::FullPivLU<MatrixXd> lu(A.front().matrix);
      if (!lu.isInvertible())
        fail(Errc::SingularA22, "zero-delay coefficient of a delay difference system is singular");
      break;
    }
  }
}

double TdsSystem::max_delay() const {
  double m = 0.0;
  auto scan = [&m](const DelayTermList& l) {
    for (const auto& t : l) m = std::max(m, t.effective_delay());
  };
  scan(A);
  scan(H);
  scan(B1);
  scan(C1);
  scan(D11);
  scan(B2);
  scan(C2);
  scan(D12);
  scan(D21);
  scan(D22);
  return m;
}

bool TdsSystem::is_delay_free() const {
  if (!H.empty()) return false;
  for (const auto& t : A)
    if (t.effective_delay() > 0.0) return false;
  return true;
}

Controller Controller::static_gain(const MatrixXd& Dc_) {
  Controller c;
  c.nc = 0;
  c.Ac.resize(0, 0);
  c.Bc.resize(0, Dc_.cols());
  c.Cc.resize(Dc_.rows(), 0);
  c.Dc = Dc_;
  return c;
}

void Controller::validate(int q1, int p1) const {
  if (nc < 0) fail(Errc::DimensionMismatch, "controller order must be >= 0");
  if (Ac.rows() != nc || Ac.cols() != nc) fail(Errc::DimensionMismatch, "Ac must be nc x nc");
  if (Bc.rows() != nc || Bc.cols() != q1) fail(Errc::DimensionMismatch, "Bc must be nc x q1");
  if (Cc.rows() != p1 || Cc.cols() != nc) fail(Errc::DimensionMismatch, "Cc must be p1 x nc");
  if (Dc.rows() != p1 || Dc.cols() != q1) fail(Errc::DimensionMismatch, "Dc must be p1 x q1");
  if (!all_finite(Ac) || !all_finite(Bc) || !all_finite(Cc) || !all_finite(Dc))
    fail(Errc::NonFiniteEntry, "controller matrices must be finite");
}

ControllerPattern ControllerPattern::full(int nc, int q1, int p1) {
  ControllerPattern p;
  p.maskAc = MatrixXd::Ones(nc, nc);
  p.maskBc = MatrixXd::Ones(nc, q1);
  p.maskCc = MatrixXd::Ones(p1, nc);
  p.maskDc = MatrixXd::Ones(p1, q1);
  p.basisAc = MatrixXd::Zero(nc, nc);
  p.basisBc = MatrixXd::Zero(nc, q1);
  p.basisCc = MatrixXd::Zero(p1, nc);
  p.basisDc = MatrixXd::Zero(p1, q1);
  return p;
}

void ControllerPattern::validate(int nc, int q1, int p1) const {
  auto chk = [](const MatrixXd& m, int r, int c, const char* what) {
    if (m.rows() != r || m.cols() != c) fail(Errc::ShapeMismatch, what);
  };
  chk(maskAc, nc, nc, "mask Ac shape");
  chk(maskBc, nc, q1, "mask Bc shape");
  chk(maskCc, p1, nc, "mask Cc shape");
  chk(maskDc, p1, q1, "mask Dc shape");
  chk(basisAc, nc, nc, "basis Ac shape");
  chk(basisBc, nc, q1, "basis Bc shape");
  chk(basisCc, p1, nc, "basis Cc shape");
  chk(basisDc, p1, q1, "basis Dc shape");
}

bool DelayDifferencePart::has_difference_dynamics() const {
  for (size_t k = 1; k < A22.size(); ++k)
    if (!is_zero(A22[k].matrix)) return true;
  return false;
}

TdsSystem create_system(const SystemSpec& spec) {
  TdsSystem sys;
  sys.kind = spec.kind;
  sys.A = canonicalize(spec.A);
  sys.H = canonicalize(spec.H);
  sys.B1 = canonicalize(spec.B1);
  sys.C1 = canonicalize(spec.C1);
  sys.D11 = canonicalize(spec.D11);
  sys.B2 = canonicalize(spec.B2);
  sys.C2 = canonicalize(spec.C2);
  sys.D12 = canonicalize(spec.D12);
  sys.D21 = canonicalize(spec.D21);
  sys.D22 = canonicalize(spec.D22);

  if (!sys.A.empty())
    sys.n = static_cast<int>(sys.A.front().matrix.rows());
  else if (spec.E)
    sys.n = static_cast<int>(spec.E->rows());
  else
    fail(Errc::DimensionMismatch, "cannot infer the state dimension");

  sys.p1 = cols_or(sys.B1, cols_or(sys.D11, cols_or(sys.D21, 0)));
  sys.q1 = rows_or(sys.C1, rows_or(sys.D11, rows_or(sys.D12, 0)));
  sys.p2 = cols_or(sys.B2, cols_or(sys.D12, cols_or(sys.D22, 0)));
  sys.q2 = rows_or(sys.C2, rows_or(sys.D21, rows_or(sys.D22, 0)));

  if (spec.E)
    sys.E = *spec.E;
  else if (spec.kind == Kind::DelayDifference)
    sys.E = MatrixXd::Zero(sys.n, sys.n);
  else
    sys.E = MatrixXd::Identity(sys.n, sys.n);

  sys.validate();
  return sys;
}

TdsSystem create_retarded(const DelayTermList& A) {
  SystemSpec s;
  s.kind = Kind::Retarded;
  s.A = A;
  return create_system(s);
}

TdsSystem create_neutral(const DelayTermList& H, const DelayTermList& A) {
  SystemSpec s;
  s.kind = Kind::Neutral;
  s.H = H;
  s.A = A;
  return create_system(s);
}

TdsSystem create_ddae(const MatrixXd& E, const DelayTermList& A) {
  SystemSpec s;
  s.kind = Kind::Ddae;
  s.E = E;
  s.A = A;
  return create_system(s);
}

TdsSystem from_quasipolynomial(const MatrixXd& P, const VectorXd& tau) {
  const int m = static_cast<int>(P.rows());
  const int n = static_cast<int>(P.cols()) - 1;
  if (m < 1 || n < 1) fail(Errc::DimensionMismatch, "coefficient matrix must be m x (n+1), n >= 1");
  if (tau.size() != m) fail(Errc::DimensionMismatch, "one delay per coefficient row required");

  // Merge rows that share a delay; the zero-delay row must carry a nonzero
  // leading coefficient, otherwise the quasi-polynomial is advanced.
  double p0 = 0.0;
  for (int k = 0; k < m; ++k) {
    if (tau(k) < 0.0) fail(Errc::NegativeDelay, "quasi-polynomial delays must be non-negative");
    if (tau(k) == 0.0) p0 += P(k, 0);
  }
  if (p0 == 0.0)
    fail(Errc::AdvancedSystem, "no zero-delay row with a nonzero leading coefficient");

  DelayTermList A, H;
  // Group rows by delay value.
  std::vector<int> order(m);
  for (int i = 0; i < m; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) { return tau(a) < tau(b); });

  for (int idx = 0; idx < m;) {
    double d = tau(order[idx]);
    Eigen::RowVectorXd coeff = Eigen::RowVectorXd::Zero(n + 1);
    while (idx < m && tau(order[idx]) == d) {
      coeff += P.row(order[idx]);
      ++idx;
    }
    MatrixXd Ak = MatrixXd::Zero(n, n);
    if (d == 0.0) {
      Ak.topRightCorner(n - 1, n - 1).setIdentity();
      for (int j = 0; j < n; ++j) Ak(n - 1, j) = -coeff(n - j) / p0;
      // The merged zero-delay leading coefficient is normalized away.
    } else {
      for (int j = 0; j < n; ++j) Ak(n - 1, j) = -coeff(n - j) / p0;
      if (coeff(0) != 0.0) {
        MatrixXd Hk = MatrixXd::Zero(n, n);
        Hk(n - 1, n - 1) = coeff(0) / p0;
        H.push_back({Hk, d, false});
      }
    }
    A.push_back({Ak, d, false});
  }
  A = drop_zero_terms(std::move(A), /*keep_zero_delay=*/true);
  H = drop_zero_terms(std::move(H), false);

  SystemSpec s;
  s.kind = H.empty() ? Kind::Retarded : Kind::Neutral;
  s.A = A;
  s.H = H;
  return create_system(s);
}

TdsSystem from_transfer_function(const MatrixXd& P, const MatrixXd& Q,
                                 const std::optional<VectorXd>& D, const VectorXd& tau) {
  const int m = static_cast<int>(Q.rows());
  const int nQ = static_cast<int>(Q.cols()) - 1;
  const int nP = static_cast<int>(P.cols()) - 1;
  if (P.rows() != m || tau.size() != m || (D && D->size() != m))
    fail(Errc::DimensionMismatch, "P, Q, D and TAU must agree on the number of delay rows");
  if (nQ < 1) fail(Errc::DimensionMismatch, "denominator degree must be >= 1");
  if (nP > nQ) fail(Errc::ImproperTransferFunction, "numerator degree exceeds denominator degree");

  double q0 = 0.0;
  for (int k = 0; k < m; ++k) {
    if (tau(k) < 0.0) fail(Errc::NegativeDelay, "delays must be non-negative");
    if (tau(k) == 0.0) q0 += Q(k, 0);
  }
  if (q0 == 0.0)
    fail(Errc::AdvancedSystem, "no zero-delay denominator row with a nonzero leading coefficient");

  // Numerator rows (coefficients, highest power first) keyed by delay, plus
  // feedthrough entries keyed by delay.
  struct NumRow {
    Eigen::RowVectorXd coeff;
    double delay;
  };
  std::vector<NumRow> num;
  std::vector<std::pair<double, double>> feed;  // (delay, value)

  if (nP == nQ) {
    if (D) fail(Errc::ImproperTransferFunction, "explicit feedthrough requires strictly proper P/Q");
    for (int k = 0; k < m; ++k)
      if (tau(k) > 0.0 && Q(k, 0) != 0.0)
        fail(Errc::ImproperTransferFunction,
             "proper (non-strict) P/Q with a neutral denominator is not realizable");
    // One division step against the zero-delay denominator part:
    // P/Q = sum_k d_k e^{-s tau_k} + (P - (sum d_k e^{-s tau_k}) Q)/Q.
    for (int k = 0; k < m; ++k) {
      double dk = P(k, 0) / q0;
      if (dk != 0.0) feed.emplace_back(tau(k), dk);
      NumRow r;
      r.coeff = Eigen::RowVectorXd::Zero(nQ + 1);
      r.coeff.tail(nP + 1) += P.row(k);
      r.delay = tau(k);
      num.push_back(r);
      if (dk == 0.0) continue;
      for (int j = 0; j < m; ++j) {
        NumRow c;
        c.coeff = -dk * Q.row(j);
        c.delay = tau(k) + tau(j);
        num.push_back(c);
      }
    }
  } else {
    for (int k = 0; k < m; ++k) {
      NumRow r;
      r.coeff = Eigen::RowVectorXd::Zero(nQ + 1);
      r.coeff.tail(nP + 1) = P.row(k);
      r.delay = tau(k);
      num.push_back(r);
      if (D && (*D)(k) != 0.0) feed.emplace_back(tau(k), (*D)(k));
    }
  }

  const int n = nQ;
  // Denominator: transposed companion blocks (numerator enters through B1).
  DelayTermList A, H, B1, C1, D11;
  {
    std::vector<int> order(m);
    for (int i = 0; i < m; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) { return tau(a) < tau(b); });
    for (int idx = 0; idx < m;) {
      double d = tau(order[idx]);
      Eigen::RowVectorXd coeff = Eigen::RowVectorXd::Zero(nQ + 1);
      while (idx < m && tau(order[idx]) == d) {
        coeff += Q.row(order[idx]);
        ++idx;
      }
      MatrixXd Ak = MatrixXd::Zero(n, n);
      if (d == 0.0) Ak.bottomLeftCorner(n - 1, n - 1).setIdentity();
      for (int j = 0; j < n; ++j) Ak(j, n - 1) = -coeff(n - j) / q0;
      A.push_back({Ak, d, false});
      if (d > 0.0 && coeff(0) != 0.0) {
        MatrixXd Hk = MatrixXd::Zero(n, n);
        Hk(n - 1, n - 1) = coeff(0) / q0;
        H.push_back({Hk, d, false});
      }
    }
  }
  for (const auto& r : num) {
    MatrixXd b = MatrixXd::Zero(n, 1);
    // coefficient of lambda^(j-1) is r.coeff(nQ + 1 - j).
    for (int j = 1; j <= n; ++j) b(j - 1, 0) = r.coeff(nQ + 1 - j) / q0;
    B1.push_back({b, r.delay, false});
  }
  {
    MatrixXd c = MatrixXd::Zero(1, n);
    c(0, n - 1) = 1.0;
    C1.push_back({c, 0.0, false});
  }
  for (const auto& [d, v] : feed) {
    MatrixXd dm(1, 1);
    dm(0, 0) = v;
    D11.push_back({dm, d, false});
  }

  A = drop_zero_terms(std::move(A), true);
  H = drop_zero_terms(std::move(H), false);
  B1 = drop_zero_terms(std::move(B1), false);
  D11 = drop_zero_terms(std::move(D11), false);

  SystemSpec s;
  s.kind = H.empty() ? Kind::Retarded : Kind::Neutral;
  s.A = A;
  s.H = H;
  s.B1 = B1;
  s.C1 = C1;
  s.D11 = D11;
  return create_system(s);
}

TdsSystem to_ddae(const TdsSystem& sys) {
  sys.validate();
  if (sys.kind == Kind::Retarded || sys.kind == Kind::Ddae || sys.kind == Kind::DelayDifference) {
    TdsSystem out = sys;
    if (out.kind == Kind::Retarded) out.kind = Kind::Ddae;
    return out;
  }

  // Neutral: xi(t) = x(t) + sum H_k x(t - h_k); state [x; xi].
  const int n = sys.n;
  auto top = [n](const MatrixXd& M) {
    MatrixXd b = MatrixXd::Zero(2 * n, M.cols());
    b.topRows(n) = M;
    return b;
  };

  DelayTermList A;
  {
    // Collect coefficients per delay: row 1 gets A_k, row 2 gets H_k.
    struct Blk {
      MatrixXd a, h;
    };
    std::vector<std::pair<double, Blk>> blocks;
    auto at = [&](double d) -> Blk& {
      for (auto& [dd, b] : blocks)
        if (dd == d) return b;
      blocks.push_back({d, {MatrixXd::Zero(n, n), MatrixXd::Zero(n, n)}});
      return blocks.back().second;
    };
    for (const auto& t : sys.A) at(t.delay).a += t.matrix;
    for (const auto& t : sys.H) at(t.delay).h += t.matrix;
    at(0.0);
    for (auto& [d, b] : blocks) {
      MatrixXd M = MatrixXd::Zero(2 * n, 2 * n);
      M.topLeftCorner(n, n) = b.a;
      M.bottomLeftCorner(n, n) = b.h;
      if (d == 0.0) {
        M.bottomLeftCorner(n, n) += MatrixXd::Identity(n, n);
        M.bottomRightCorner(n, n) = -MatrixXd::Identity(n, n);
      }
      A.push_back({M, d, false});
    }
  }

  MatrixXd E = MatrixXd::Zero(2 * n, 2 * n);
  E.topRightCorner(n, n).setIdentity();

  SystemSpec s;
  s.kind = Kind::Ddae;
  s.E = E;
  s.A = A;
  for (const auto& t : sys.B1) s.B1.push_back({top(t.matrix), t.delay, t.infinitesimal});
  for (const auto& t : sys.B2) s.B2.push_back({top(t.matrix), t.delay, t.infinitesimal});
  auto wide = [n](const MatrixXd& M) {
    MatrixXd b = MatrixXd::Zero(M.rows(), 2 * n);
    b.leftCols(n) = M;
    return b;
  };
  for (const auto& t : sys.C1) s.C1.push_back({wide(t.matrix), t.delay, t.infinitesimal});
  for (const auto& t : sys.C2) s.C2.push_back({wide(t.matrix), t.delay, t.infinitesimal});
  s.D11 = sys.D11;
  s.D12 = sys.D12;
  s.D21 = sys.D21;
  s.D22 = sys.D22;
  return create_system(s);
}

DelayDifferencePart delay_difference_part(const TdsSystem& sys) {
  sys.validate();
  DelayDifferencePart part;
  if (sys.kind == Kind::Retarded) {
    part.classification = Classification::EssentiallyRetarded;
    return part;
  }
  if (sys.kind == Kind::Neutral) {
    const int n = sys.n;
    part.U = part.V = MatrixXd::Identity(n, n);
    part.A22.push_back({MatrixXd::Identity(n, n), 0.0, false});
    for (const auto& t : sys.H) part.A22.push_back({t.matrix, t.delay, t.infinitesimal});
    part.A22 = canonicalize(part.A22);
    part.classification = part.has_difference_dynamics() ? Classification::EssentiallyNeutral
                                                         : Classification::EssentiallyRetarded;
    return part;
  }

  auto split = numkernel::nullspace_split(sys.E);
  part.U = split.U;
  part.V = split.V;
  part.Uperp = split.Uperp;
  part.Vperp = split.Vperp;
  const int nu = sys.n - split.rank;
  if (nu == 0) {
    part.classification = Classification::EssentiallyRetarded;
    return part;
  }

  for (const auto& t : sys.A)
    part.A22.push_back({part.U.transpose() * t.matrix * part.V, t.delay, t.infinitesimal});
  part.A22 = canonicalize(part.A22);
  if (part.A22.front().delay != 0.0 || part.A22.front().infinitesimal) {
    MatrixXd zero = MatrixXd::Zero(nu, nu);
    part.A22.insert(part.A22.begin(), {zero, 0.0, false});
  }

  Eigen::JacobiSVD<MatrixXd> svd(part.A22.front().matrix);
  double smin = svd.singularValues().minCoeff();
  double smax = svd.singularValues().maxCoeff();
  if (smin <= 1e-12 * std::max(1.0, smax))
    fail(Errc::SingularA22, "A_1^(22) is singular; the DDAE may be advanced or impulsive");

  part.classification = part.has_difference_dynamics() ? Classification::EssentiallyNeutral
                                                       : Classification::EssentiallyRetarded;
  return part;
}

TdsSystem asymptotic_transfer_function(const TdsSystem& sys) {
  StandardForm sf = standard_form(sys);
  auto split = numkernel::nullspace_split(sf.Es);
  const int nu = sf.ns - split.rank;
  const int q2 = static_cast<int>(sf.Cs.rows());
  const int p2 = static_cast<int>(sf.Bs.cols());
  if (nu == 0) {
    // Nonsingular E: the asymptotic transfer function vanishes identically.
    SystemSpec s;
    s.kind = Kind::DelayDifference;
    s.E = MatrixXd::Zero(1, 1);
    s.A = {{-MatrixXd::Identity(1, 1), 0.0, false}};
    s.B2 = {{MatrixXd::Zero(1, p2), 0.0, false}};
    s.C2 = {{MatrixXd::Zero(q2, 1), 0.0, false}};
    return create_system(s);
  }

  DelayTermList A22;
  for (const auto& t : sf.A)
    A22.push_back({split.U.transpose() * t.matrix * split.V, t.delay, t.infinitesimal});
  A22 = canonicalize(A22);
  if (A22.front().delay != 0.0 || A22.front().infinitesimal)
    A22.insert(A22.begin(), {MatrixXd::Zero(nu, nu), 0.0, false});

  Eigen::JacobiSVD<MatrixXd> svd(A22.front().matrix);
  if (svd.singularValues().minCoeff() <=
      1e-12 * std::max(1.0, svd.singularValues().maxCoeff()))
    fail(Errc::SingularA22, "A_1^(22) is singular");

  // T_a(s) = -C^(2) (A22_0 + sum A22_k e^{-s tau})^{-1} B^(2); realized as a
  // delay difference system via s E - sum Ahat_k e^{-s tau} = A22_0 + ...
  SystemSpec s;
  s.kind = Kind::DelayDifference;
  s.E = MatrixXd::Zero(nu, nu);
  for (const auto& t : A22) s.A.push_back({-t.matrix, t.delay, t.infinitesimal});
  s.B2 = {{split.U.transpose() * sf.Bs, 0.0, false}};
  s.C2 = {{-(sf.Cs * split.V), 0.0, false}};
  return create_system(s);
}

ClosedLoop close_loop(const TdsSystem& plant_in, const Controller& controller) {
  TdsSystem plant = (plant_in.kind == Kind::Neutral) ? to_ddae(plant_in) : plant_in;
  plant.validate();
  controller.validate(plant.q1, plant.p1);
  const int n = plant.n, q1 = plant.q1, p1 = plant.p1, nc = controller.nc;
  if (q1 == 0 || p1 == 0) fail(Errc::DimensionMismatch, "plant has no control channels");
  const int N = n + q1 + nc + p1;
  const int oy = n, oc = n + q1, ou = n + q1 + nc;

  MatrixXd Ecl = MatrixXd::Zero(N, N);
  Ecl.topLeftCorner(n, n) = plant.E;
  Ecl.block(oc, oc, nc, nc).setIdentity();

  // Coefficients of the closed loop per (delay, infinitesimal) key.
  struct Key {
    double d;
    bool inf;
    bool operator<(const Key& o) const { return d != o.d ? d < o.d : inf < o.inf; }
  };
  std::map<Key, MatrixXd> blocks;
  auto at = [&](double d, bool inf) -> MatrixXd& {
    auto it = blocks.find({d, inf});
    if (it == blocks.end())
      it = blocks.emplace(Key{d, inf}, MatrixXd::Zero(N, N)).first;
    return it->second;
  };

  MatrixXd& base = at(0.0, false);
  base.block(oy, oy, q1, q1) = -MatrixXd::Identity(q1, q1);
  base.block(ou, ou, p1, p1) = -MatrixXd::Identity(p1, p1);
  for (const auto& t : plant.A) at(t.delay, t.infinitesimal).block(0, 0, n, n) += t.matrix;
  for (const auto& t : plant.B1) at(t.delay, t.infinitesimal).block(0, ou, n, p1) += t.matrix;
  for (const auto& t : plant.C1) at(t.delay, t.infinitesimal).block(oy, 0, q1, n) += t.matrix;
  for (const auto& t : plant.D11) at(t.delay, t.infinitesimal).block(oy, ou, q1, p1) += t.matrix;

  // The controller enters through a separate infinitesimal-delay term, which
  // models an infinitesimal feedback delay.
  MatrixXd& ctrl = at(0.0, true);
  if (nc > 0) {
    ctrl.block(oc, oy, nc, q1) = controller.Bc;
    ctrl.block(oc, oc, nc, nc) = controller.Ac;
    ctrl.block(ou, oc, p1, nc) = controller.Cc;
  }
  ctrl.block(ou, oy, p1, q1) = controller.Dc;

  SystemSpec s;
  s.kind = Kind::Ddae;
  s.E = Ecl;
  for (auto& [k, M] : blocks) s.A.push_back({M, k.d, k.inf});

  // Performance channels ride along on the augmented coordinates.
  for (const auto& t : plant.B2) {
    MatrixXd B = MatrixXd::Zero(N, plant.p2);
    B.topRows(n) = t.matrix;
    s.B2.push_back({B, t.delay, t.infinitesimal});
  }
  for (const auto& t : plant.D12) {
    MatrixXd B = MatrixXd::Zero(N, plant.p2);
    B.middleRows(oy, q1) = t.matrix;
    s.B2.push_back({B, t.delay, t.infinitesimal});
  }
  for (const auto& t : plant.C2) {
    MatrixXd C = MatrixXd::Zero(plant.q2, N);
    C.leftCols(n) = t.matrix;
    s.C2.push_back({C, t.delay, t.infinitesimal});
  }
  for (const auto& t : plant.D21) {
    MatrixXd C = MatrixXd::Zero(plant.q2, N);
    C.middleCols(ou, p1) = t.matrix;
    s.C2.push_back({C, t.delay, t.infinitesimal});
  }
  s.D22 = plant.D22;

  ClosedLoop cl;
  cl.sys = create_system(s);
  cl.n_plant = n;
  cl.nc = nc;
  cl.ac_row = oc;
  cl.ac_col = oc;
  cl.bc_row = oc;
  cl.bc_col = oy;
  cl.cc_row = ou;
  cl.cc_col = oc;
  cl.dc_row = ou;
  cl.dc_col = oy;
  for (size_t i = 0; i < cl.sys.A.size(); ++i)
    if (cl.sys.A[i].infinitesimal && cl.sys.A[i].delay == 0.0)
      cl.controller_term = static_cast<int>(i);
  return cl;
}

StandardForm standard_form(const TdsSystem& sys_in) {
  if (!sys_in.has_performance_channels())
    fail(Errc::NoPerformanceChannels, "standard form needs B2/C2 channels");
  TdsSystem sys = (sys_in.kind == Kind::Neutral) ? to_ddae(sys_in) : sys_in;
  sys.validate();

  StandardForm sf;
  const bool already_standard = sys.B2.size() == 1 && sys.B2.front().effective_delay() == 0.0 &&
                                sys.C2.size() == 1 && sys.C2.front().effective_delay() == 0.0 &&
                                sys.D22.empty();
  if (already_standard) {
    sf.Es = sys.E;
    sf.A = sys.A;
    sf.Bs = sys.B2.front().matrix;
    sf.Cs = sys.C2.front().matrix;
    sf.ns = sys.n;
    sf.n_original = sys.n;
    return sf;
  }

  const int n = sys.n, p2 = sys.p2, q2 = sys.q2;
  const int ns = n + p2 + q2;
  const int ow = n, oz = n + p2;

  sf.Es = MatrixXd::Zero(ns, ns);
  sf.Es.topLeftCorner(n, n) = sys.E;
  sf.ns = ns;
  sf.n_original = n;

  struct Key {
    double d;
    bool inf;
    bool operator<(const Key& o) const { return d != o.d ? d < o.d : inf < o.inf; }
  };
  std::map<Key, MatrixXd> blocks;
  auto at = [&](double d, bool inf) -> MatrixXd& {
    auto it = blocks.find({d, inf});
    if (it == blocks.end()) it = blocks.emplace(Key{d, inf}, MatrixXd::Zero(ns, ns)).first;
    return it->second;
  };
  MatrixXd& base = at(0.0, false);
  base.block(ow, ow, p2, p2) = -MatrixXd::Identity(p2, p2);
  base.block(oz, oz, q2, q2) = -MatrixXd::Identity(q2, q2);
  for (const auto& t : sys.A) at(t.delay, t.infinitesimal).block(0, 0, n, n) += t.matrix;
  for (const auto& t : sys.B2) at(t.delay, t.infinitesimal).block(0, ow, n, p2) += t.matrix;
  for (const auto& t : sys.C2) at(t.delay, t.infinitesimal).block(oz, 0, q2, n) += t.matrix;
  for (const auto& t : sys.D22) at(t.delay, t.infinitesimal).block(oz, ow, q2, p2) += t.matrix;

  for (auto& [k, M] : blocks) sf.A.push_back({M, k.d, k.inf});
  sf.Bs = MatrixXd::Zero(ns, p2);
  sf.Bs.middleRows(ow, p2).setIdentity();
  sf.Cs = MatrixXd::Zero(q2, ns);
  sf.Cs.middleCols(oz, q2).setIdentity();
  return sf;
}

Eigen::MatrixXcd char_matrix(const TdsSystem& sys, std::complex<double> s) {
  using Complex = std::complex<double>;
  Eigen::MatrixXcd M = s * sys.E.cast<Complex>();
  for (const auto& t : sys.H)
    M += s * std::exp(-s * t.effective_delay()) * t.matrix.cast<Complex>();
  for (const auto& t : sys.A)
    M -= std::exp(-s * t.effective_delay()) * t.matrix.cast<Complex>();
  return M;
}

Eigen::MatrixXcd char_matrix_deriv(const TdsSystem& sys, std::complex<double> s) {
  using Complex = std::complex<double>;
  Eigen::MatrixXcd M = sys.E.cast<Complex>();
  for (const auto& t : sys.H) {
    double h = t.effective_delay();
    M += (1.0 - s * h) * std::exp(-s * h) * t.matrix.cast<Complex>();
  }
  for (const auto& t : sys.A) {
    double h = t.effective_delay();
    M += h * std::exp(-s * h) * t.matrix.cast<Complex>();
  }
  return M;
}

double char_matrix_scale(const TdsSystem& sys) {
  double s = 0.0;
  for (const auto& t : sys.A) s = std::max(s, t.matrix.norm());
  for (const auto& t : sys.H) s = std::max(s, t.matrix.norm());
  return std::max(1.0, s);
}

}  // namespace tds::model
