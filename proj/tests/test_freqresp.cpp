// Copyright (c) 2026 The tdsc developers
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "tds/freqresp.hpp"

using namespace tds::freqresp;
using fixtures::mat;
using oracles::Complex;
using tds::model::Kind;
using tds::model::MatrixXd;
using tds::model::SystemSpec;

namespace {
const double kInf = std::numeric_limits<double>::infinity();

Complex example1_formula(Complex s) {
  Complex z1 = std::exp(-s), z2 = std::exp(-2.0 * s);
  return -(9.0 + 3.0 * s + 5.0 * z1) /
         (s * s + 7.0 * s + 18.0 + (4.0 * s + 5.0) * z1 + 7.0 * z1 * z1) * z2;
}

HinfOptions quiet_opts() {
  HinfOptions o;
  o.quiet = true;
  o.roots.quiet = true;
  return o;
}
}  // namespace

TEST_CASE("transfer_eval: input-delay example against the printed formula") {
  auto sys = fixtures::hinf_example1();
  for (double w : {0.0, 3.5571}) {
    Complex got = transfer_eval(sys, Complex(0.0, w))(0, 0);
    Complex expect = example1_formula(Complex(0.0, w));
    CHECK(std::abs(got - expect) < 1e-10 * (1.0 + std::abs(expect)));
  }
}

TEST_CASE("transfer_eval: pure feedthrough is constant") {
  SystemSpec s;
  s.kind = Kind::Retarded;
  s.A = {{mat({{-1.0}}), 0.0, false}};
  s.D22 = {{mat({{2.5}}), 0.0, false}};
  s.B2 = {{mat({{0.0}}), 0.0, false}};
  s.C2 = {{mat({{0.0}}), 0.0, false}};
  auto sys = tds::model::create_system(s);
  for (Complex p : {Complex(0, 0), Complex(0, 3), Complex(1, -2)})
    CHECK(std::abs(transfer_eval(sys, p)(0, 0) - 2.5) < 1e-12);
}

TEST_CASE("transfer_eval: scalar first-order lag") {
  SystemSpec s;
  s.kind = Kind::Retarded;
  s.A = {{mat({{-1.0}}), 0.0, false}};
  s.B2 = {{mat({{1.0}}), 0.0, false}};
  s.C2 = {{mat({{1.0}}), 0.0, false}};
  auto sys = tds::model::create_system(s);
  CHECK(std::abs(transfer_eval(sys, Complex(0, 0))(0, 0) - 1.0) < 1e-14);
  CHECK(std::abs(transfer_eval(sys, Complex(0, 1))(0, 0) - 1.0 / Complex(1, 1)) < 1e-14);
}

TEST_CASE("sigma: first-order magnitudes") {
  SystemSpec s;
  s.kind = Kind::Retarded;
  s.A = {{mat({{-1.0}}), 0.0, false}};
  s.B2 = {{mat({{1.0}}), 0.0, false}};
  s.C2 = {{mat({{1.0}}), 0.0, false}};
  auto sys = tds::model::create_system(s);
  auto sv = sigma(sys, {0.0, 1.0, 1e6});
  CHECK(sv(0, 0) == doctest::Approx(1.0));
  CHECK(sv(0, 1) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(sv(0, 2) < 1e-5);
}

TEST_CASE("sigma: peak value of the input-delay example") {
  auto sv = sigma(fixtures::hinf_example1(), {3.5571});
  CHECK(sv(0, 0) == doctest::Approx(1.5388).epsilon(1e-3));
}

TEST_CASE("sigma: columns are sorted descending and mirror conjugate frequencies") {
  SystemSpec s;
  s.kind = Kind::Retarded;
  s.A = {{mat({{-1.0, 0.4}, {0.0, -2.0}}), 0.0, false},
         {mat({{0.0, 0.0}, {0.3, 0.0}}), 1.0, false}};
  s.B2 = {{mat({{1.0, 0.0}, {0.0, 1.0}}), 0.0, false}};
  s.C2 = {{mat({{1.0, 0.0}, {0.2, 1.0}}), 0.0, false}};
  auto sys = tds::model::create_system(s);
  auto sv = sigma(sys, {0.7});
  CHECK(sv(0, 0) >= sv(1, 0));
  // sigma(w) = sigma(-w) for real data.
  auto tp = transfer_eval(sys, Complex(0.0, 0.7));
  auto tm = transfer_eval(sys, Complex(0.0, -0.7));
  Eigen::JacobiSVD<Eigen::MatrixXcd> sp(tp), sm(tm);
  CHECK((sp.singularValues() - sm.singularValues()).norm() < 1e-12);
}

TEST_CASE("hinf_asymptotic: feedthrough-only torus maximum") {
  auto sys = fixtures::hinf_example2();
  auto an = hinf_asymptotic(sys, quiet_opts());
  CHECK(an.value == doctest::Approx(4.0).epsilon(1e-9));
  REQUIRE(an.theta.size() == 2);
  auto wrap = [](double t) {
    double w = std::fmod(t, 2.0 * M_PI);
    return w < 0 ? w + 2.0 * M_PI : w;
  };
  CHECK(std::min(wrap(an.theta(0)), 2.0 * M_PI - wrap(an.theta(0))) < 1e-5);
  CHECK(std::abs(wrap(an.theta(1)) - M_PI) < 1e-5);
}

TEST_CASE("hinf_asymptotic: constant feedthrough") {
  SystemSpec s;
  s.kind = Kind::Retarded;
  s.A = {{mat({{-1.0}}), 0.0, false}};
  s.B2 = {{mat({{0.0}}), 0.0, false}};
  s.C2 = {{mat({{0.0}}), 0.0, false}};
  s.D22 = {{mat({{-3.25}}), 0.0, false}};
  auto an = hinf_asymptotic(tds::model::create_system(s), quiet_opts());
  CHECK(an.value == doctest::Approx(3.25).epsilon(1e-12));
}

TEST_CASE("hinf_asymptotic: optimized static closed loop of the descriptor example") {
  auto plant = fixtures::hiopt_ex1_plant();
  auto cl = tds::model::close_loop(
      plant, tds::model::Controller::static_gain(mat({{-0.3533, -0.1012}})));
  auto an = hinf_asymptotic(cl.sys, quiet_opts());
  CHECK(an.value == doctest::Approx(1.8331).epsilon(1e-3));

  // The DelayDifference realization reaches the same value through hinfnorm.
  auto ta = tds::model::asymptotic_transfer_function(cl.sys);
  auto res = hinfnorm(ta, quiet_opts());
  CHECK(res.hinf == doctest::Approx(1.8331).epsilon(1e-3));
  CHECK(res.wpeak == kInf);
}

TEST_CASE("hinf_asymptotic: returned angles are stationary") {
  auto part = asymptotic_part(tds::model::standard_form(fixtures::hinf_example2()));
  REQUIRE(!part.trivial);
  auto value = [&](const Eigen::VectorXd& theta) {
    Eigen::MatrixXcd K = part.A22[0].matrix.cast<Complex>();
    for (size_t k = 1; k < part.A22.size(); ++k)
      K += part.A22[k].matrix.cast<Complex>() * std::exp(Complex(0.0, -theta(k - 1)));
    Eigen::MatrixXcd T =
        -(part.C2.cast<Complex>() * K.partialPivLu().solve(part.B2.cast<Complex>()));
    return T.jacobiSvd().singularValues()(0);
  };
  auto an = hinf_asymptotic(part, quiet_opts());
  const double h = 1e-6;
  for (int k = 0; k < an.theta.size(); ++k) {
    Eigen::VectorXd tp = an.theta, tm = an.theta;
    tp(k) += h;
    tm(k) -= h;
    CHECK(std::abs(value(tp) - value(tm)) / (2 * h) < 1e-5);
  }
}

TEST_CASE("hinfnorm: finite peak of the input-delay example") {
  auto res = hinfnorm(fixtures::hinf_example1(), quiet_opts());
  CHECK(res.hinf == doctest::Approx(1.5388).epsilon(1e-3));
  CHECK(res.wpeak == doctest::Approx(3.5571).epsilon(1e-2));
  CHECK(res.asymptotic_norm < 1e-9);
}

TEST_CASE("hinfnorm: asymptotically dominated example") {
  auto res = hinfnorm(fixtures::hinf_example2(), quiet_opts());
  CHECK(std::abs(res.hinf - 4.0) <= 1e-6);
  CHECK(res.wpeak == kInf);
}

TEST_CASE("hinfnorm: unstable systems return infinity") {
  auto base = fixtures::rdde1();
  tds::model::SystemSpec s;
  s.kind = Kind::Retarded;
  s.A = base.A;
  s.B2 = {{MatrixXd::Ones(4, 1), 0.0, false}};
  s.C2 = {{MatrixXd::Ones(1, 4), 0.0, false}};
  auto res = hinfnorm(tds::model::create_system(s), quiet_opts());
  CHECK(res.hinf == kInf);
  CHECK(std::isnan(res.wpeak));
}

TEST_CASE("hinfnorm: upper-bounds the sampled frequency response") {
  auto sys = fixtures::hinf_example1();
  auto res = hinfnorm(sys, quiet_opts());
  auto gen = oracles::rng(33);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  std::vector<double> ws;
  for (int i = 0; i < 200; ++i) ws.push_back(std::pow(10.0, -2.0 + 4.0 * ud(gen)));
  auto sv = sigma(sys, ws);
  for (int i = 0; i < 200; ++i) CHECK(res.hinf >= sv(0, i) - 1e-6);
}

TEST_CASE("hinfnorm: asymptotic norm is a lower bound") {
  for (auto* fix : {&fixtures::hinf_example1, &fixtures::hinf_example2}) {
    auto res = hinfnorm((*fix)(), quiet_opts());
    CHECK(res.hinf >= res.asymptotic_norm - 1e-9);
  }
}

TEST_CASE("hinfnorm: delay-free sanity against a dense sweep") {
  auto gen = oracles::rng(57);
  SystemSpec s;
  s.kind = Kind::Retarded;
  MatrixXd A = oracles::random_matrix(gen, 4, 4);
  A -= (A.eigenvalues().real().maxCoeff() + 0.5) * MatrixXd::Identity(4, 4);
  s.A = {{A, 0.0, false}};
  s.B2 = {{oracles::random_matrix(gen, 4, 2), 0.0, false}};
  s.C2 = {{oracles::random_matrix(gen, 1, 4), 0.0, false}};
  auto sys = tds::model::create_system(s);
  auto res = hinfnorm(sys, quiet_opts());

  double sweep = 0.0;
  for (int i = 0; i < 10000; ++i) {
    double w = std::pow(10.0, -3.0 + 6.0 * i / 9999.0);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(transfer_eval(sys, Complex(0.0, w)));
    sweep = std::max(sweep, svd.singularValues()(0));
  }
  sweep = std::max(sweep, transfer_eval(sys, Complex(0, 0)).jacobiSvd().singularValues()(0));
  CHECK(res.hinf == doctest::Approx(sweep).epsilon(1e-4));
}
