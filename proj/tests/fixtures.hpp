// Copyright (c) 2026 The tdsc developers
// SPDX-License-Identifier: Apache-2.0
//
// Shared benchmark systems used across the test suites.

#pragma once

#include "tds/model.hpp"

namespace fixtures {

using tds::model::Controller;
using tds::model::DelayTermList;
using tds::model::Kind;
using tds::model::MatrixXd;
using tds::model::SystemSpec;
using tds::model::TdsSystem;

inline MatrixXd mat(std::initializer_list<std::initializer_list<double>> rows) {
  int r = static_cast<int>(rows.size());
  int c = static_cast<int>(rows.begin()->size());
  MatrixXd m(r, c);
  int i = 0;
  for (const auto& row : rows) {
    int j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

/// Unstable 4-state RDDE with one delay; rightmost root at Re = 0.6176.
inline TdsSystem rdde1() {
  MatrixXd A0 = mat({{-1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, -10, -4}, {0, 0, 4, -10}});
  MatrixXd A1 = mat({{3, 3, 3, 3}, {0, -1.5, 0, 0}, {0, 0, 3, -5}, {0, 5, 5, 5}});
  return tds::model::create_retarded({{A0, 0.0, false}, {A1, 1.0, false}});
}

/// Two-state NDDE with a single delay; difference part has eigenvalues
/// {1.5, 0.5}.
inline TdsSystem ex_neutral1() {
  MatrixXd H1 = mat({{3, -1.5}, {2.5, -1}});
  MatrixXd A0 = mat({{-0.6, -0.45}, {0.1, -1.2}});
  MatrixXd A1 = mat({{-0.15, 0.075}, {0.225, -0.75}});
  return tds::model::create_neutral({{H1, 1.0, false}},
                                    {{A0, 0.0, false}, {A1, 1.0, false}});
}

/// Scalar NDDE with two delays; gamma(0) = 1.25, strong abscissa 0.1614.
inline TdsSystem neutral_example2() {
  return tds::model::create_neutral(
      {{mat({{-0.75}}), 1.0, false}, {mat({{0.5}}), 2.0, false}},
      {{mat({{0.25}}), 0.0, false}, {mat({{-1.0 / 3.0}}), 1.0, false}});
}

/// The delay difference equation (I, H1) of ex_neutral1 as a standalone
/// system; chains at ln(1.5) and ln(0.5).
inline TdsSystem difference1() {
  SystemSpec s;
  s.kind = Kind::DelayDifference;
  s.A = {{MatrixXd::Identity(2, 2), 0.0, false},
         {mat({{3, -1.5}, {2.5, -1}}), 1.0, false}};
  return tds::model::create_system(s);
}

/// x(t) - 3/4 x(t-1) + 1/2 x(t-2) = 0.
inline TdsSystem difference_example2() {
  SystemSpec s;
  s.kind = Kind::DelayDifference;
  s.A = {{mat({{1.0}}), 0.0, false}, {mat({{-0.75}}), 1.0, false}, {mat({{0.5}}), 2.0, false}};
  return tds::model::create_system(s);
}

/// Closed-loop DDAE of the interconnection example: essentially neutral,
/// C_D = -3.4234, strong abscissa -0.2845.
inline TdsSystem ddae_closed_loop() {
  MatrixXd A0 = mat({{0.2, 0.1}, {-0.5, 1}});
  MatrixXd A1 = mat({{0.5, 0.3}, {0.1, -0.1}});
  MatrixXd B = MatrixXd::Identity(2, 2);
  MatrixXd C = mat({{1, 1}});
  MatrixXd D = mat({{0.01, 0.01}});
  double Ac = -3.48, Bc = 3.1;
  MatrixXd Cc = mat({{1.79}, {-0.09}});
  MatrixXd Dc = mat({{-1.86}, {-1.4}});

  const int n = 2, p = 2, q = 1, nc = 1;
  const int N = n + q + nc + p;
  MatrixXd E = MatrixXd::Zero(N, N);
  E.topLeftCorner(n, n).setIdentity();
  E(n + q, n + q) = 1.0;

  MatrixXd A_cl0 = MatrixXd::Zero(N, N);
  A_cl0.topLeftCorner(n, n) = A0;
  A_cl0.block(n, 0, q, n) = C;
  A_cl0.block(n, n, q, q) = -MatrixXd::Identity(q, q);
  A_cl0.block(n + q, n, nc, q).setConstant(Bc);
  A_cl0.block(n + q, n + q, nc, nc).setConstant(Ac);
  A_cl0.block(n + q + nc, n, p, q) = Dc;
  A_cl0.block(n + q + nc, n + q, p, nc) = Cc;
  A_cl0.block(n + q + nc, n + q + nc, p, p) = -MatrixXd::Identity(p, p);

  MatrixXd A_cl1 = MatrixXd::Zero(N, N);
  A_cl1.topLeftCorner(n, n) = A1;
  A_cl1.block(0, n + q + nc, n, p) = B;
  A_cl1.block(n, n + q + nc, q, p) = D;

  return tds::model::create_ddae(E, {{A_cl0, 0.0, false}, {A_cl1, 1.0, false}});
}

/// Plant/controller pair of the interconnection example (for close_loop).
inline TdsSystem ddae_example_plant() {
  SystemSpec s;
  s.kind = Kind::Retarded;
  s.A = {{mat({{0.2, 0.1}, {-0.5, 1}}), 0.0, false}, {mat({{0.5, 0.3}, {0.1, -0.1}}), 1.0, false}};
  s.B1 = {{MatrixXd::Identity(2, 2), 1.0, false}};
  s.C1 = {{mat({{1, 1}}), 0.0, false}};
  s.D11 = {{mat({{0.01, 0.01}}), 1.0, false}};
  return tds::model::create_system(s);
}

inline Controller ddae_example_controller() {
  Controller k;
  k.nc = 1;
  k.Ac = mat({{-3.48}});
  k.Bc = mat({{3.1}});
  k.Cc = mat({{1.79}, {-0.09}});
  k.Dc = mat({{-1.86}, {-1.4}});
  return k;
}

/// Delay-free plant with feedthrough; closing the loop with Dc = -5 is stable
/// nominally but has zero delay margin.
inline TdsSystem fragility_plant() {
  SystemSpec s;
  s.kind = Kind::Retarded;
  s.A = {{mat({{1.25, -0.8, -0.95}, {0.175, -0.4, -0.125}, {-1.15, -0.4, 0.65}}), 0.0, false}};
  s.B1 = {{mat({{2}, {0}, {-2}}), 0.0, false}};
  s.C1 = {{mat({{-7, 25, -11}}), 0.0, false}};
  s.D11 = {{mat({{1}}), 0.0, false}};
  return tds::model::create_system(s);
}

/// SISO example with an input delay; hinf = 1.5388 at w = 3.5571.
inline TdsSystem hinf_example1() {
  SystemSpec s;
  s.kind = Kind::Retarded;
  s.A = {{mat({{-4, 2}, {-3, -3}}), 0.0, false}, {mat({{-2, -1}, {3, -2}}), 1.0, false}};
  s.B2 = {{mat({{1}, {-1}}), 2.0, false}};
  s.C2 = {{mat({{-2, 1}}), 0.0, false}};
  return tds::model::create_system(s);
}

/// Same plant with feedthrough terms (and the A1 entered in the follow-up
/// code listing); strong hinf = 4 attained asymptotically.
inline TdsSystem hinf_example2() {
  SystemSpec s;
  s.kind = Kind::Retarded;
  s.A = {{mat({{-4, 2}, {-3, -3}}), 0.0, false}, {mat({{-2, 1}, {3, -2}}), 1.0, false}};
  s.B2 = {{mat({{1}, {-1}}), 2.0, false}};
  s.C2 = {{mat({{-2, 1}}), 0.0, false}};
  s.D22 = {{mat({{1}}), 0.0, false}, {mat({{1}}), 1.0, false}, {mat({{-2}}), 2.0, false}};
  return tds::model::create_system(s);
}

/// Three-state SISO system whose transmission zeros solve s e^{-s} + 1 = 0.
inline TdsSystem sys_tzeros() {
  SystemSpec s;
  s.kind = Kind::Retarded;
  s.A = {{mat({{1, 0, 1}, {0, 0, 0}, {0, 1, 0}}), 0.0, false},
         {mat({{0, 1, 0}, {0, 0, 0}, {0, 0, 0}}), 1.0, false}};
  s.B1 = {{mat({{0}, {1}, {0}}), 0.0, false}};
  s.C1 = {{mat({{1, 0, 0}}), 0.0, false}};
  return tds::model::create_system(s);
}

/// Turning process model (code listing parameters, tau = 0.008).
inline TdsSystem turning_process() {
  const double k = 8e6, omega = 775, xi = 0.05, m = 50, tau = 0.008;
  MatrixXd A0 = mat({{0, 1}, {-omega * omega - k / m, -2 * xi * omega}});
  MatrixXd A1 = mat({{0, 0}, {k / m, 0}});
  return tds::model::create_retarded({{A0, 0.0, false}, {A1, tau, false}});
}

/// Five-state heating system with seven state delays and one input delay.
inline TdsSystem heating_system() {
  const double Th = 14, Ta = 3, Td = 3, Tc = 25;
  const double Kb = 0.24, Ka = 1, Kd = 0.94, Kc = 0.81, Ku = 0.39;
  const double nh = 6.5, tb = 40, te = 13, td = 18, tc = 2.8, ncdel = 9.2, tu = 13.2;

  MatrixXd A0 = MatrixXd::Zero(5, 5);
  A0(1, 0) = Ka / Ta;
  A0(1, 1) = (-Ka - 1) / Ta;
  A0(2, 2) = -1 / Td;
  A0(4, 3) = -1;
  MatrixXd A1 = MatrixXd::Zero(5, 5);
  A1(0, 0) = -1 / Th;
  MatrixXd A2 = MatrixXd::Zero(5, 5);
  A2(0, 1) = Kb / Th;
  MatrixXd A3 = MatrixXd::Zero(5, 5);
  A3(1, 3) = 1 / Ta;
  MatrixXd A4 = MatrixXd::Zero(5, 5);
  A4(2, 1) = Kd / Td;
  MatrixXd A5 = MatrixXd::Zero(5, 5);
  A5(3, 2) = Kc / Tc;
  MatrixXd A6 = MatrixXd::Zero(5, 5);
  A6(3, 3) = -1 / Tc;

  SystemSpec s;
  s.kind = Kind::Retarded;
  s.A = {{A0, 0.0, false}, {A1, nh, false}, {A2, tb, false}, {A3, te, false},
         {A4, td, false}, {A5, tc, false}, {A6, ncdel, false}};
  MatrixXd B = MatrixXd::Zero(5, 1);
  B(0, 0) = Ku / Th;
  s.B1 = {{B, tu, false}};
  s.C1 = {{MatrixXd::Identity(5, 5), 0.0, false}};
  return tds::model::create_system(s);
}

/// Mixed-performance example plant (3 states, 2 inputs, 2 outputs, one
/// performance channel).
inline TdsSystem mixed_performance_plant() {
  SystemSpec s;
  s.kind = Kind::Retarded;
  s.A = {{mat({{1, -2, 4}, {3, 0.5, -1}, {-2, 0.4, -2}}), 0.0, false},
         {mat({{1.5, 0.3, 2}, {0.7, -0.8, 0.4}, {0.5, 0.4, -0.9}}), 1.0, false}};
  s.B1 = {{mat({{0.3, 0.4}, {-0.7, -0.5}, {0.7, -0.1}}), 0.1, false}};
  s.C1 = {{mat({{-1, 0.3, 0}, {0.4, 0.9, 1}}), 0.0, false}};
  s.B2 = {{mat({{-0.7}, {-0.5}, {-0.3}}), 0.0, false}};
  s.C2 = {{mat({{3, -5, -4}}), 0.0, false}};
  return tds::model::create_system(s);
}

/// Descriptor plant of the static H-infinity design example.
inline TdsSystem hiopt_ex1_plant() {
  SystemSpec s;
  s.kind = Kind::Ddae;
  s.E = mat({{1, 0}, {0, 0}});
  s.A = {{mat({{-0.1, -1}, {1, -1}}), 0.0, false}};
  s.B1 = {{mat({{0}, {1}}), 0.0, false}};
  s.C1 = {{mat({{0, 1}, {0, 0}}), 1.0, false}, {mat({{0, 0}, {0, 1}}), 2.0, false}};
  s.B2 = {{mat({{0}, {1}}), 0.0, false}};
  s.C2 = {{mat({{2, -1}}), 0.0, false}};
  return tds::model::create_system(s);
}

}  // namespace fixtures
