#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "pwlab/ode.hpp"

using namespace pwlab;

TEST_CASE("exponential growth to machine-near accuracy") {
  auto rhs = [](double, const Vec& y, Vec& dy) { dy = y; };
  Vec y0 = Vec::Ones(1);
  const OdeSolution sol = integrate_ode(rhs, 0.0, y0, 2.0);
  REQUIRE(sol.status == OdeStatus::ok);
  CHECK(sol.eval(2.0)(0) == doctest::Approx(std::exp(2.0)).epsilon(1e-9));

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int i = 0; i < 200; ++i) {
    const double t = u(rng);
    CHECK(sol.eval(t)(0) == doctest::Approx(std::exp(t)).epsilon(1e-8));
    CHECK(sol.deriv(t)(0) == doctest::Approx(std::exp(t)).epsilon(1e-6));
  }
}

TEST_CASE("harmonic oscillator round trip conserves energy") {
  auto rhs = [](double, const Vec& y, Vec& dy) {
    dy.resize(2);
    dy(0) = y(1);
    dy(1) = -y(0);
  };
  Vec y0(2);
  y0 << 1.0, 0.0;
  const double T = 10.0 * M_PI;
  const OdeSolution sol = integrate_ode(rhs, 0.0, y0, T);
  CHECK(sol.eval(T)(0) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(std::abs(sol.eval(T)(1)) < 1e-7);
  for (double t : {0.5, 3.0, 12.0, 25.0}) {
    const Vec y = sol.eval(t);
    CHECK(y(0) * y(0) + y(1) * y(1) == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("backward integration works") {
  auto rhs = [](double t, const Vec&, Vec& dy) { dy(0) = std::cos(t); };
  Vec y0 = Vec::Zero(1);
  const OdeSolution sol = integrate_ode(rhs, 0.0, y0, -5.0);
  CHECK(sol.t_end() == doctest::Approx(-5.0));
  CHECK(sol.eval(-5.0)(0) == doctest::Approx(std::sin(-5.0)).epsilon(1e-9));
  CHECK(sol.eval(-2.3)(0) == doctest::Approx(std::sin(-2.3)).epsilon(1e-8));
}

TEST_CASE("finite time blow-up is detected and timed") {
  auto rhs = [](double, const Vec& y, Vec& dy) { dy(0) = y(0) * y(0); };
  Vec y0 = Vec::Ones(1);
  const OdeSolution sol = integrate_ode(rhs, 0.0, y0, 2.0);
  REQUIRE(sol.status == OdeStatus::blowup);
  // y = 1/(1-t) crosses 1e8 at t = 1 - 1e-8
  CHECK(std::abs(sol.blowup_time - 1.0) < 1e-6);
  CHECK(sol.t_end() < 1.0001);
}

TEST_CASE("two sided integration stitches around an interior start") {
  auto rhs = [](double, const Vec& y, Vec& dy) { dy = y; };
  Vec y0 = Vec::Ones(1);
  const OdeSolution sol = integrate_two_sided(rhs, 0.0, y0, -1.0, 2.0);
  REQUIRE(sol.status == OdeStatus::ok);
  CHECK(sol.t_begin() == doctest::Approx(-1.0));
  CHECK(sol.t_end() == doctest::Approx(2.0));
  for (std::size_t i = 1; i < sol.ts.size(); ++i) CHECK(sol.ts[i] > sol.ts[i - 1]);
  CHECK(sol.eval(-1.0)(0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
  CHECK(sol.eval(0.0)(0) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(sol.eval(2.0)(0) == doctest::Approx(std::exp(2.0)).epsilon(1e-9));

  CHECK_THROWS_AS(integrate_two_sided(rhs, 5.0, y0, -1.0, 2.0), ConfigError);
}

TEST_CASE("step size respects the cap so dense output stays accurate") {
  auto rhs = [](double t, const Vec&, Vec& dy) { dy(0) = std::cos(10.0 * t); };
  Vec y0 = Vec::Zero(1);
  OdeOptions opt;
  opt.h_max = 0.02;
  const OdeSolution sol = integrate_ode(rhs, 0.0, y0, 3.0, opt);
  for (std::size_t i = 1; i < sol.ts.size(); ++i)
    CHECK(sol.ts[i] - sol.ts[i - 1] <= 0.02 + 1e-12);
  CHECK(sol.eval(3.0)(0) == doctest::Approx(std::sin(30.0) / 10.0).epsilon(1e-9));
}

TEST_CASE("nonfinite right-hand sides do not wedge the solver") {
  // derivative becomes huge near t=1 (vertical tangent), solution stays finite
  auto rhs = [](double, const Vec& y, Vec& dy) { dy(0) = 1.0 / (2.0 * y(0)); };
  Vec y0 = Vec::Ones(1);
  // y = sqrt(t + 1): fine on [0, 3]
  const OdeSolution sol = integrate_ode(rhs, 0.0, y0, 3.0);
  CHECK(sol.eval(3.0)(0) == doctest::Approx(2.0).epsilon(1e-9));
}
