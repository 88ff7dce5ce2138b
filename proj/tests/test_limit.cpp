#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pwlab/flow.hpp"
#include "pwlab/limit.hpp"
#include "pwlab/rosen.hpp"

using namespace pwlab;

namespace {

MetricSpec sphere2_polar() {
  return MetricSpec(2, {parse("1", 2), parse("0", 2), parse("sin(x1)^2", 2)},
                    (Vec(2) << 1.2, 0.0).finished(), "sphere2-polar");
}

MetricSpec surface_rev() {
  return MetricSpec(2, {parse("1", 2), parse("0", 2), parse("(2+sin(x1))^2", 2)},
                    (Vec(2) << 0.0, 0.0).finished(), "surface-rev");
}

MetricSpec ssmm_metric() {
  std::vector<Expr> c(10, parse("0", 4));
  c[1] = parse("1", 4);
  c[4] = parse("x3^2 - x4^2", 4);
  c[7] = parse("0 - 1", 4);
  c[9] = parse("1", 4);
  return MetricSpec(4, c, Vec::Zero(4), "ssmm");
}

MetricSpec sphere3_stereo() {
  const std::string f = "4/(1+x1^2+x2^2+x3^2)^2";
  std::vector<Expr> c = {parse(f, 3), parse("0", 3), parse("0", 3),
                         parse(f, 3), parse("0", 3), parse(f, 3)};
  return MetricSpec(3, c, (Vec(3) << 0.3, 0.2, 0.1).finished(), "sphere3-stereo");
}

Vec vec2(double a, double b) { return (Vec(2) << a, b).finished(); }
Vec vec4(double a, double b, double c, double d) { return (Vec(4) << a, b, c, d).finished(); }

}  // namespace

TEST_CASE("mixed signature wave has constant profile diag(-1,-1)") {
  const MetricSpec m = ssmm_metric();
  const LimitResult lr = limit_of(m, Vec::Zero(4), vec4(0, 1, 0, 0), 0.0, 3.0, 0.0);
  CHECK(lr.geodesic.character == CausalCharacter::lightlike);
  REQUIRE(lr.profile.r == 2);
  CHECK(lr.profile.eps[0] == -1.0);
  CHECK(lr.profile.eps[1] == 1.0);
  for (double t : {0.0, 0.7, 1.9, 3.0}) {
    const Mat A = lr.profile.at(t);
    CHECK(A(0, 0) == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(A(1, 1) == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(std::abs(A(0, 1)) < 1e-9);
    CHECK(std::abs(A(1, 0)) < 1e-9);
  }
  CHECK(lr.profile.trace_residual < 1e-8);

  // limit metric: 2 dv dt - (x^2 + y^2) dt^2 + dx^2 + dy^2
  const MetricSpec& L = lr.limit_metric;
  CHECK(L.dim() == 4);
  CHECK(L.index() == 1);
  for (double t : {0.2, 1.5}) {
    const Vec p = vec4(0.4, t, 0.8, -0.6);
    const double h = eval(L.comp(1, 1), p);
    CHECK(h == doctest::Approx(-(0.8 * 0.8 + 0.6 * 0.6)).epsilon(1e-7));
  }
}

TEST_CASE("round sphere profile is minus the squared speed") {
  const MetricSpec m = sphere2_polar();
  const Vec x0 = vec2(M_PI / 2, 0.0);
  for (double c : {1.0, 2.0}) {
    const LimitResult lr = limit_of(m, x0, vec2(0.0, c), 0.0, 2.0, 0.0);
    REQUIRE(lr.profile.r == 1);
    for (double t : {0.0, 0.5, 1.3, 2.0})
      CHECK(lr.profile.at(t)(0, 0) == doctest::Approx(-c * c).epsilon(1e-8));
    CHECK(lr.profile.trace_residual < 1e-7);
  }
}

TEST_CASE("surface of revolution profile matches the warping closed form") {
  const MetricSpec m = surface_rev();
  const LimitResult lr = limit_of(m, vec2(0.0, 0.3), vec2(1.0, 0.0), 0.0, 2.0, 0.0);
  REQUIRE(lr.profile.r == 1);
  for (int k = 0; k <= 20; ++k) {
    const double t = 2.0 * k / 20.0;
    const double want = -std::sin(t) / (2.0 + std::sin(t));
    CHECK(lr.profile.at(t)(0, 0) == doctest::Approx(want).epsilon(1e-7));
  }
  CHECK(lr.profile.trace_residual < 1e-7);
}

TEST_CASE("taking the limit of a limit changes nothing") {
  const MetricSpec m = surface_rev();
  const LimitResult lr = limit_of(m, vec2(0.0, 0.3), vec2(1.0, 0.0), 0.0, 2.0, 0.0);
  const MetricSpec& L = lr.limit_metric;
  Vec x0 = Vec::Zero(3);
  x0(1) = 0.0;
  Vec v0 = Vec::Zero(3);
  v0(1) = 1.0;
  const LimitResult lr2 = limit_of(L, x0, v0, 0.0, 2.0, 0.0);
  REQUIRE(lr2.profile.r == 1);
  for (int k = 0; k <= 10; ++k) {
    const double t = 2.0 * k / 10.0;
    CHECK(lr2.profile.at(t)(0, 0) ==
          doctest::Approx(lr.profile.at(t)(0, 0)).epsilon(5e-6));
  }
}

TEST_CASE("profiles of two frames differ by the connecting rotation") {
  const MetricSpec m = sphere3_stereo();
  const Vec x0 = m.base_point();
  const Vec v0 = (Vec(3) << 0.5, -0.2, 0.4).finished();
  const GeodesicRecord rec = integrate_geodesic(m, x0, v0, 0.0, 2.0, 0.0);
  CHECK(!rec.incomplete);
  const NormalFrame fr1 = initial_normal_frame(m, x0, v0);
  REQUIRE(fr1.rank() == 2);
  const double al = 0.7;
  NormalFrame fr2;
  fr2.eps = fr1.eps;
  fr2.E.push_back(std::cos(al) * fr1.E[0] + std::sin(al) * fr1.E[1]);
  fr2.E.push_back(-std::sin(al) * fr1.E[0] + std::cos(al) * fr1.E[1]);

  const TransportedFrame tf1 = transport_frame(m, x0, v0, fr1, 0.0, 2.0, 0.0);
  const TransportedFrame tf2 = transport_frame(m, x0, v0, fr2, 0.0, 2.0, 0.0);
  const WaveProfile p1 = wave_profile(m, tf1);
  const WaveProfile p2 = wave_profile(m, tf2);
  const FrameChangeReport rep = frame_change_check(m, 0.0, tf1, tf2, p1, p2);
  CHECK(rep.block_orthogonality_residual < 1e-7);
  CHECK(rep.profile_residual < 1e-6);
  CHECK(rep.K(0, 0) == doctest::Approx(std::cos(al)).epsilon(1e-8));
  CHECK(rep.K(0, 1) == doctest::Approx(std::sin(al)).epsilon(1e-8));
}

TEST_CASE("product with a line adds one flat profile direction") {
  const MetricSpec m3 = lift_product(sphere2_polar());
  CHECK(m3.dim() == 3);
  Vec x0(3), v0(3);
  x0 << M_PI / 2, 0.0, 0.0;
  v0 << 0.0, 1.0, 0.0;
  const LimitResult lr = limit_of(m3, x0, v0, 0.0, 2.0, 0.0);
  REQUIRE(lr.profile.r == 2);
  for (double t : {0.0, 1.0, 2.0}) {
    const Mat A = lr.profile.at(t);
    CHECK(A(0, 0) == doctest::Approx(-1.0).epsilon(1e-8));
    CHECK(std::abs(A(0, 1)) < 1e-8);
    CHECK(std::abs(A(1, 0)) < 1e-8);
    CHECK(std::abs(A(1, 1)) < 1e-8);
  }
}

TEST_CASE("affine reparameterization rescales the profile quadratically") {
  const MetricSpec m = surface_rev();
  const double alpha = 0.5, beta = 0.3;
  const LimitResult base = limit_of(m, vec2(0.0, 0.3), vec2(1.0, 0.0), 0.0, 2.0, 0.0);
  const GeodesicRecord& g = base.geodesic;
  const Vec x0p = g.position(beta);
  const Vec v0p = alpha * g.velocity(beta);
  const double span = (2.0 - beta) / alpha;
  const LimitResult rep = limit_of(m, x0p, v0p, 0.0, span, 0.0);
  for (int k = 0; k <= 10; ++k) {
    const double s = span * k / 10.0;
    const double want = alpha * alpha * base.profile.at(alpha * s + beta)(0, 0);
    CHECK(rep.profile.at(s)(0, 0) == doctest::Approx(want).epsilon(1e-7));
  }
}

TEST_CASE("rosen blocks with closed forms convert exactly") {
  // G = cos^2(u): F = sec(u), A = -1 identically
  const RosenConversion one =
      rosen_to_brinkmann({parse("cos(x1)^2", 1)}, 1, -0.5, 1.2);
  for (double u : {-0.5, 0.0, 0.6, 1.2})
    CHECK(one.profile.at(u)(0, 0) == doctest::Approx(-1.0).epsilon(1e-8));
  CHECK(one.symmetry_monitor < 1e-10);
  CHECK(one.orthonormality_drift < 1e-9);

  // G = diag(cos^2 u, e^{2u}): A = diag(-1, +1)
  const RosenConversion two = rosen_to_brinkmann(
      {parse("cos(x1)^2", 1), parse("0", 1), parse("exp(2*x1)", 1)}, 2, -0.5, 1.2);
  for (double u : {-0.5, 0.3, 1.2}) {
    const Mat A = two.profile.at(u);
    CHECK(A(0, 0) == doctest::Approx(-1.0).epsilon(1e-8));
    CHECK(A(1, 1) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(std::abs(A(0, 1)) < 1e-9);
    CHECK(std::abs(A(1, 0)) < 1e-9);
  }

  // not positive definite at the start
  CHECK_THROWS_AS(rosen_to_brinkmann({parse("0 - 1", 1)}, 1, 0.0, 1.0), NumericalError);
}

TEST_CASE("rosen conversion agrees with the geodesic pipeline") {
  // same wave written as a metric: 2 dv du + G_ij(u) dy^i dy^j
  std::vector<Expr> c(10, parse("0", 4));
  c[1] = parse("1", 4);
  c[7] = parse("1", 4);
  c[8] = parse("0.5*sin(x2)", 4);
  c[9] = parse("1", 4);
  const MetricSpec m(4, c, Vec::Zero(4), "rosen-wave");
  const LimitResult lr = limit_of(m, Vec::Zero(4), vec4(0, 1, 0, 0), 0.0, 2.0, 0.0);

  const RosenConversion rc = rosen_to_brinkmann(
      {parse("1", 1), parse("0.5*sin(x1)", 1), parse("1", 1)}, 2, 0.0, 2.0);

  double worst = 0.0;
  for (int k = 0; k <= 40; ++k) {
    const double u = 2.0 * k / 40.0;
    worst = std::max(worst, (lr.profile.at(u) - rc.profile.at(u)).cwiseAbs().maxCoeff());
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("geodesic congruences satisfy the riccati comparison") {
  // radial field in flat 3-space: shape -I/t along a radial geodesic, wave = 0
  std::vector<Expr> cf = {parse("1", 3), parse("0", 3), parse("0", 3),
                          parse("1", 3), parse("0", 3), parse("1", 3)};
  const MetricSpec flat(3, cf, Vec::Zero(3), "flat3");
  const Vec x0 = (Vec(3) << 0.5, 0.0, 0.0).finished();
  const Vec v0 = (Vec(3) << 1.0, 0.0, 0.0).finished();
  const NormalFrame fr = initial_normal_frame(flat, x0, v0);
  const TransportedFrame tf = transport_frame(flat, x0, v0, fr, 0.5, 3.0, 0.5);
  const std::string rad = "sqrt(x1^2+x2^2+x3^2)";
  const FlowProfileResult fp = flow_profile(
      flat, {parse("x1/" + rad, 3), parse("x2/" + rad, 3), parse("x3/" + rad, 3)}, tf);
  CHECK(fp.alignment_residual < 1e-9);
  for (double t : {0.6, 1.0, 2.0, 2.9}) {
    const Mat Z = fp.shape.at(t);
    CHECK(Z(0, 0) == doctest::Approx(-1.0 / t).epsilon(1e-7));
    CHECK(Z(1, 1) == doctest::Approx(-1.0 / t).epsilon(1e-7));
    CHECK(std::abs(Z(0, 1)) < 1e-8);
    CHECK(fp.wave.at(t).cwiseAbs().maxCoeff() < 1e-9);
  }
  CHECK(fp.riccati_residual < 1e-5);

  // meridian flow on the sphere: shape -cot(t), wave -1
  const MetricSpec sph = sphere2_polar();
  const Vec sx0 = vec2(0.4, 0.7), sv0 = vec2(1.0, 0.0);
  const NormalFrame sfr = initial_normal_frame(sph, sx0, sv0);
  const TransportedFrame stf = transport_frame(sph, sx0, sv0, sfr, 0.4, 2.7, 0.4);
  const FlowProfileResult sp = flow_profile(sph, {parse("1", 2), parse("0", 2)}, stf);
  CHECK(sp.alignment_residual < 1e-9);
  for (double t : {0.5, 1.0, 1.8, 2.6}) {
    CHECK(sp.shape.at(t)(0, 0) == doctest::Approx(-1.0 / std::tan(t)).epsilon(1e-6));
    CHECK(sp.wave.at(t)(0, 0) == doctest::Approx(-1.0).epsilon(1e-8));
  }
  CHECK(sp.riccati_residual < 1e-5);
}

TEST_CASE("incomplete geodesics cannot produce a limit") {
  const MetricSpec m(2, {parse("exp(-2*x1)", 2), parse("0", 2), parse("exp(-2*x1)", 2)},
                     Vec::Zero(2), "horn");
  CHECK_THROWS_WITH_AS(
      (void)limit_of(m, Vec::Zero(2), vec2(1.0, 0.0), 0.0, 2.0, 0.0),
      doctest::Contains("escapes"), NumericalError);
}
