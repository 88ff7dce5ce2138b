#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "pwlab/deviation.hpp"
#include "pwlab/limit.hpp"

using namespace pwlab;

namespace {

const double kPi = 3.14159265358979323846;

MetricSpec ssmm_metric() {
  std::vector<Expr> c(10, parse("0", 4));
  c[1] = parse("1", 4);
  c[4] = parse("x3^2 - x4^2", 4);
  c[7] = parse("0 - 1", 4);
  c[9] = parse("1", 4);
  return MetricSpec(4, c, Vec::Zero(4), "ssmm");
}

MetricSpec sphere2_polar() {
  return MetricSpec(2, {parse("1", 2), parse("0", 2), parse("sin(x1)^2", 2)},
                    (Vec(2) << 1.2, 0.0).finished(), "sphere2-polar");
}

Vec vec4(double a, double b, double c, double d) { return (Vec(4) << a, b, c, d).finished(); }

// Build a profile directly from a matrix-valued function of t, bypassing any
// geodesic integration.  Useful for closed-form coefficient systems.
WaveProfile synth_profile(const std::vector<double>& eps, double t0, double t1,
                          const std::function<Mat(double)>& f) {
  const int N = profile_grid_size(t1 - t0);
  std::vector<double> ts(N);
  std::vector<Mat> samples(N);
  for (int k = 0; k < N; ++k) {
    ts[k] = t0 + (t1 - t0) * k / (N - 1);
    samples[k] = f(ts[k]);
  }
  return detail::tabulate_profile(ts, samples, eps);
}

WaveProfile mixed_wave_profile(double t0, double t1) {
  // Transverse directions of one timelike and one spacelike character, both
  // with coefficient -1: every reduced component oscillates like sin.
  return synth_profile({-1.0, 1.0}, t0, t1,
                       [](double) { return (-1.0) * Mat::Identity(2, 2); });
}

WaveProfile dependent_profile(double t0, double t1) {
  // Cross entries +-1 between opposite-character directions.
  Mat A(2, 2);
  A << -1.0, -1.0, 1.0, -1.0;
  return synth_profile({-1.0, 1.0}, t0, t1, [A](double) { return A; });
}

LimitResult ssmm_limit(double b) {
  return limit_of(ssmm_metric(), Vec::Zero(4), vec4(0, 1, 0, 0), 0.0, b, 0.0);
}

PLField tent_field(double t0, double t1, int comp, int r) {
  PLField f;
  f.ts = {t0, 0.5 * (t0 + t1), t1};
  Vec peak = Vec::Zero(r);
  peak[comp] = 1.0;
  f.vals = {Vec::Zero(r), peak, Vec::Zero(r)};
  return f;
}

}  // namespace

TEST_CASE("causal independence is read off the cross-character entries") {
  const WaveProfile riem = synth_profile({1.0, 1.0}, 0.0, 3.0, [](double t) {
    Mat A(2, 2);
    A << -1.0 - 0.1 * t, 0.3, 0.3, -2.0;
    return A;
  });
  const IndependenceReport r1 = causal_independence_check(riem);
  CHECK(r1.independent);
  CHECK(r1.residual == 0.0);  // no opposite-character pairs exist at all
  CHECK(r1.note.find("supplied frame") != std::string::npos);

  const LimitResult lr = ssmm_limit(3.0);
  const IndependenceReport r2 = causal_independence_check(lr.profile);
  CHECK(r2.independent);
  CHECK(r2.residual < 1e-9);

  const IndependenceReport r3 = causal_independence_check(dependent_profile(0.0, 3.0));
  CHECK_FALSE(r3.independent);
  CHECK(r3.residual == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("reduced systems are block diagonal with exact zero cross entries") {
  const WaveProfile p = mixed_wave_profile(0.0, 4.0);
  const JacobiSystem base(p, JacobiSide::base);
  const JacobiSystem limit(p, JacobiSide::limit);
  for (double t : {0.3, 0.9, 2.7}) {
    const Mat Cb = base.coefficient(t);
    const Mat Cl = limit.coefficient(t);
    CHECK(Cb(0, 0) == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(Cb(1, 1) == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(Cb(0, 1) == 0.0);  // exact: opposite-character couplings are dropped
    CHECK(Cb(1, 0) == 0.0);
    CHECK(Cl(0, 0) == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(Cl(0, 1) == 0.0);
    CHECK(Cl(1, 0) == 0.0);
  }

  // A dependent profile keeps its couplings: the reduction is not applied.
  const JacobiSystem dep(dependent_profile(0.0, 3.0), JacobiSide::base);
  const Mat Cd = dep.coefficient(0.5);
  CHECK(Cd(0, 1) == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(Cd(1, 0) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("constant coefficient systems reproduce the sin/sinh closed forms") {
  SUBCASE("attractive isotropic: conjugate points at each multiple of pi, multiplicity 2") {
    const WaveProfile p = synth_profile({1.0, 1.0}, 0.0, 3.5 * kPi,
                                        [](double) { return (-1.0) * Mat::Identity(2, 2); });
    const ConjugateReport rep = conjugate_points(p, 0.0, 3.5 * kPi);
    REQUIRE(rep.points.size() == 3);
    for (int k = 0; k < 3; ++k) {
      CHECK(std::abs(rep.points[k].t - (k + 1) * kPi) < 1e-8);
      CHECK(rep.points[k].multiplicity == 2);
      CHECK(rep.points[k].t > rep.a);
      CHECK(rep.points[k].t < rep.b);
    }
    CHECK(rep.total == 6);
    CHECK(rep.limit_total == 6);
    CHECK(rep.index_bound == 12);
    CHECK(rep.wronskian_drift < 1e-8);
    CHECK(rep.sigma_scale == doctest::Approx(1.0).epsilon(1e-6));  // sup of |sin|
  }

  SUBCASE("flat: no conjugate points") {
    const WaveProfile p =
        synth_profile({1.0, 1.0}, 0.0, 10.0, [](double) { return Mat::Zero(2, 2); });
    const ConjugateReport rep = conjugate_points(p, 0.0, 10.0);
    CHECK(rep.points.empty());
    CHECK(rep.total == 0);
    CHECK(rep.index_bound == 0);
  }

  SUBCASE("repulsive: sinh never vanishes") {
    const WaveProfile p =
        synth_profile({1.0, 1.0}, 0.0, 8.0, [](double) { return Mat::Identity(2, 2); });
    const ConjugateReport rep = conjugate_points(p, 0.0, 8.0);
    CHECK(rep.points.empty());
  }

  SUBCASE("split sign: multiplicity 1 dips against a growing background") {
    const WaveProfile p = synth_profile({1.0, 1.0}, 0.0, 3.5 * kPi, [](double) {
      Mat A = Mat::Zero(2, 2);
      A(0, 0) = -1.0;
      A(1, 1) = 1.0;
      return A;
    });
    const ConjugateReport rep = conjugate_points(p, 0.0, 3.5 * kPi);
    REQUIRE(rep.points.size() == 3);
    for (int k = 0; k < 3; ++k) {
      CHECK(std::abs(rep.points[k].t - (k + 1) * kPi) < 1e-8);
      CHECK(rep.points[k].multiplicity == 1);
    }
    CHECK(rep.total == 3);
    CHECK(morse_bound(rep).satisfied);
  }
}

TEST_CASE("mixed-signature example: conjugate points, doubling bound, full-coordinate agreement") {
  const double b = 2.5 * kPi;
  const LimitResult lr = ssmm_limit(b);
  const ConjugateReport rep = conjugate_points(lr.profile, 0.0, b);

  REQUIRE(rep.points.size() == 2);
  CHECK(std::abs(rep.points[0].t - kPi) < 1e-7);
  CHECK(std::abs(rep.points[1].t - 2.0 * kPi) < 1e-7);
  CHECK(rep.points[0].multiplicity == 2);
  CHECK(rep.points[1].multiplicity == 2);
  CHECK(rep.total == 4);
  CHECK(rep.limit_total == 4);
  CHECK(rep.index_bound == 8);
  CHECK(rep.independence_residual < 1e-9);

  const MorseCheck mc = morse_bound(rep);
  CHECK(mc.base_count == 4);
  CHECK(mc.limit_index == 4);
  CHECK(mc.bound == 8);
  CHECK(mc.satisfied);

  // Same interval required when comparing two reports.
  const ConjugateReport shorter = conjugate_points(lr.profile, 0.0, 0.5 * b);
  CHECK_THROWS_AS(morse_bound(rep, shorter), ConfigError);
  const MorseCheck mc2 = morse_bound(rep, rep);
  CHECK(mc2.satisfied);

  // The same conjugate parameters must come out of the assembled metric when
  // the deviation equation is integrated in full coordinates.
  const FullConjugateReport full =
      conjugate_points_full(lr.limit_metric, Vec::Zero(4), vec4(0, 1, 0, 0), 0.0, b);
  REQUIRE(full.points.size() == 2);
  CHECK(std::abs(full.points[0].t - rep.points[0].t) < 1e-6);
  CHECK(std::abs(full.points[1].t - rep.points[1].t) < 1e-6);
  CHECK(full.points[0].multiplicity == 2);
  CHECK(full.points[1].multiplicity == 2);
}

TEST_CASE("full-coordinate probe works directly on a curved manifold") {
  const MetricSpec m = sphere2_polar();
  const Vec x0 = (Vec(2) << 0.5 * kPi, 0.0).finished();
  const Vec v0 = (Vec(2) << 0.0, 1.0).finished();
  const FullConjugateReport full = conjugate_points_full(m, x0, v0, 0.0, 1.5 * kPi);
  REQUIRE(full.points.size() == 1);
  CHECK(std::abs(full.points[0].t - kPi) < 1e-8);
  CHECK(full.points[0].multiplicity == 1);
}

TEST_CASE("refusal on causally dependent profiles") {
  const WaveProfile dep = dependent_profile(0.0, 6.0);
  CHECK_THROWS_WITH_AS(conjugate_points(dep, 0.0, 6.0),
                       doctest::Contains("supplied frame"), DomainError);
  CHECK_THROWS_AS(
      correspondence_check(dep, [](double t) { return Vec::Zero(2) * t; }, 0.0, 6.0),
      DomainError);
}

TEST_CASE("transverse field correspondence between base and assembled wave") {
  const LimitResult lr = ssmm_limit(2.5 * kPi);
  const WaveProfile& p = lr.profile;

  SUBCASE("single oscillating component") {
    const auto J = [](double t) { return (Vec(2) << std::sin(t), 0.0).finished(); };
    const CorrespondenceReport rep = correspondence_check(p, J, 0.0, 4.5);
    CHECK(rep.base_residual < 1e-6);
    CHECK(rep.forward_residual < 1e-6);
    CHECK(rep.converse_residual < 1e-6);
    CHECK(rep.t_component_residual < 1e-7);
  }

  SUBCASE("both characters populated") {
    const auto J = [](double t) {
      return (Vec(2) << 0.3 * std::sin(t), -0.7 * std::sin(t)).finished();
    };
    const CorrespondenceReport rep = correspondence_check(p, J, 0.0, 4.5);
    CHECK(rep.base_residual < 1e-6);
    CHECK(rep.forward_residual < 1e-6);
    CHECK(rep.converse_residual < 1e-6);
  }

  SUBCASE("non-solutions are rejected") {
    const auto bad = [](double t) { return (Vec(2) << t * t, 0.0).finished(); };
    CHECK_THROWS_WITH_AS(correspondence_check(p, bad, 0.0, 4.5),
                         doctest::Contains("deviation equation"), DomainError);
  }
}

TEST_CASE("index form on piecewise-linear fields") {
  const WaveProfile p = mixed_wave_profile(0.0, 4.5);

  SUBCASE("frozen tent values straddle the first conjugate point") {
    // With coefficient -1 the form is -(int |V'|^2 - int |V|^2); a unit tent
    // on [0,L] gives -(4/L - L/3): positive for L=4, negative for L=2.
    const PLField t4 = tent_field(0.0, 4.0, 0, 2);
    CHECK(index_form(p, t4, t4) == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
    const PLField t2 = tent_field(0.0, 2.0, 0, 2);
    CHECK(index_form(p, t2, t2) == doctest::Approx(-4.0 / 3.0).epsilon(1e-10));
  }

  SUBCASE("symmetric, and splits across causal characters") {
    std::mt19937 rng(20240817u);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    PLField V, W;
    const int nodes = 9;
    for (int k = 0; k < nodes; ++k) {
      const double t = 0.2 + (4.2 - 0.2) * k / (nodes - 1);
      V.ts.push_back(t);
      W.ts.push_back(t);
      const bool interior = k > 0 && k < nodes - 1;
      V.vals.push_back(interior ? (Vec(2) << u(rng), u(rng)).finished() : Vec::Zero(2));
      W.vals.push_back(interior ? (Vec(2) << u(rng), u(rng)).finished() : Vec::Zero(2));
    }
    const double full = index_form(p, V, W);
    CHECK(std::abs(full - index_form(p, W, V)) < 1e-12);

    auto mask = [](const PLField& f, double keep_eps, const std::vector<double>& eps) {
      PLField out = f;
      for (auto& v : out.vals)
        for (int i = 0; i < v.size(); ++i)
          if (eps[i] != keep_eps) v[i] = 0.0;
      return out;
    };
    const double time_part = index_form(p, mask(V, -1.0, p.eps), mask(W, -1.0, p.eps));
    const double space_part = index_form(p, mask(V, 1.0, p.eps), mask(W, 1.0, p.eps));
    CHECK(full == doctest::Approx(time_part + space_part).epsilon(1e-9));
  }

  SUBCASE("split holds on a pipeline profile too") {
    const LimitResult lr = ssmm_limit(5.0);
    PLField V = tent_field(0.5, 4.5, 0, 2);
    PLField W = tent_field(0.5, 4.5, 1, 2);
    V.vals[1][1] = -0.4;  // populate both characters
    W.vals[1][0] = 0.8;
    const double full = index_form(lr.profile, V, W);
    auto zero_comp = [](PLField f, int comp) {
      for (auto& v : f.vals) v[comp] = 0.0;
      return f;
    };
    const double tpart = index_form(lr.profile, zero_comp(V, 1), zero_comp(W, 1));
    const double spart = index_form(lr.profile, zero_comp(V, 0), zero_comp(W, 0));
    CHECK(full == doctest::Approx(tpart + spart).epsilon(1e-9));
  }

  SUBCASE("fields must vanish at the endpoints") {
    PLField bad = tent_field(0.0, 4.0, 0, 2);
    bad.vals.back()[0] = 0.5;
    CHECK_THROWS_AS(index_form(p, bad, bad), ConfigError);
  }
}

TEST_CASE("focusing verdicts") {
  SUBCASE("oscillating mixed wave: conjugate pair found under nonnegative Ricci") {
    const WaveProfile p = mixed_wave_profile(-4.2, 4.2);
    const FocusingReport rep = focusing_check(p, 4.0);
    CHECK(rep.verdict == "consistent");
    CHECK(rep.ric_min == doctest::Approx(2.0).epsilon(1e-9));
    REQUIRE(rep.pair_found);
    CHECK(rep.pair_a == 0.0);
    CHECK(std::abs(rep.pair_b - kPi) < 1e-7);
    CHECK(rep.multiplicity == 2);
  }

  SUBCASE("flat wave: nothing to focus") {
    const WaveProfile p =
        synth_profile({1.0, 1.0}, -2.5, 2.5, [](double) { return Mat::Zero(2, 2); });
    const FocusingReport rep = focusing_check(p, 2.0);
    CHECK(rep.verdict == "vacuously consistent");
    CHECK_FALSE(rep.pair_found);
  }

  SUBCASE("repulsive wave: Ricci hypothesis fails") {
    const WaveProfile p =
        synth_profile({1.0, 1.0}, -4.2, 4.2, [](double) { return Mat::Identity(2, 2); });
    const FocusingReport rep = focusing_check(p, 4.0);
    CHECK(rep.verdict == "hypothesis fails");
    CHECK(rep.ric_min == doctest::Approx(-2.0).epsilon(1e-9));
  }

  SUBCASE("attractive but short horizon") {
    const WaveProfile p = synth_profile({1.0}, -1.2, 1.2,
                                        [](double) { return (-1.0) * Mat::Identity(1, 1); });
    const FocusingReport rep = focusing_check(p, 1.0);
    CHECK(rep.verdict == "horizon too small");
    CHECK_FALSE(rep.pair_found);
  }

  SUBCASE("horizon beyond the tabulated span is a configuration error") {
    const WaveProfile p = synth_profile({1.0}, -1.2, 1.2,
                                        [](double) { return (-1.0) * Mat::Identity(1, 1); });
    CHECK_THROWS_AS(focusing_check(p, 3.0), ConfigError);
  }
}
