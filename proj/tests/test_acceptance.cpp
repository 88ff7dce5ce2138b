#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "pwlab/cli.hpp"

// Acceptance gate: eight criteria, one pass/fail line each, tolerances pinned
// in the assertions.  Everything here is checked against closed forms or
// independently stated identities; nothing is compared against the library's
// own output.

using namespace pwlab;

namespace {

constexpr double kPi = 3.14159265358979323846;

const std::chrono::steady_clock::time_point kSuiteStart = std::chrono::steady_clock::now();

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void report(int n, bool ok, const std::string& detail) {
  std::printf("[criterion %d] %s  %s\n", n, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
}

std::string tmp_out(const std::string& tag) {
  namespace fs = std::filesystem;
  const fs::path p = fs::temp_directory_path() / ("pwlab-acc-" + tag);
  fs::remove_all(p);
  return p.string();
}

char buf[256];

}  // namespace

TEST_CASE("criterion 1: constant-curvature profiles on random sphere geodesics") {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (const char* name : {"sphere-2", "sphere-3"}) {
    Scenario s = builtin_scenario(name);
    std::mt19937_64 rng(s.seed);
    for (int k = 0; k < 16; ++k) {
      const auto [x0, v0] = sample_initial_data(s, rng);
      const LimitResult lr = limit_of(s.metric, x0, v0, 0.0, 10.0, 0.0);
      const int r = lr.profile.r;
      for (const Mat& A : lr.profile.samples)
        worst = std::max(worst, (A + Mat::Identity(r, r)).cwiseAbs().maxCoeff());
    }
  }
  const double dt = seconds_since(t0);
  const bool ok = worst < 1e-7 && dt < 5.0;
  std::snprintf(buf, sizeof(buf),
                "unit 2- and 3-sphere, 16 random unit-speed geodesics each over [0, 10]: "
                "max|A_ij + delta_ij| = %.2e (< 1e-7), %.2f s (< 5 s)",
                worst, dt);
  report(1, ok, buf);
  CHECK(worst < 1e-7);
  CHECK(dt < 5.0);
}

TEST_CASE("criterion 2: assembled wave reproduces the quadratic curvature slots") {
  Scenario s = builtin_scenario("sphere-3");
  const LimitResult lr = limit_of(s.metric, s.x0, s.v0, s.a, s.b, s.t0);
  const PpWave w = pp_from_profile(lr.profile);
  const PpInvariantReport inv = pp_invariants(w, lr.profile.t0, lr.profile.t1, 1.0, 50, 2024);
  const double res = std::max(inv.curvature_residual, inv.ricci_residual);
  const bool ok = res < 1e-9;
  std::snprintf(buf, sizeof(buf),
                "assembled sphere limit at 50 random points: curvature slots vs -H_ij/2 and "
                "Ricci vs -lap(H)/2, residual %.2e (< 1e-9)",
                res);
  report(2, ok, buf);
  CHECK(inv.curvature_residual < 1e-9);
  CHECK(inv.ricci_residual < 1e-9);
}

TEST_CASE("criterion 3: two-sign wave end to end") {
  const auto t0 = std::chrono::steady_clock::now();
  Scenario s = builtin_scenario("pp-example-ssmm");
  const LimitResult lr = limit_of(s.metric, s.x0, s.v0, s.a, s.b, s.t0);

  double prof_dev = 0.0;
  Mat target = -Mat::Identity(2, 2);
  for (const Mat& A : lr.profile.samples)
    prof_dev = std::max(prof_dev, (A - target).cwiseAbs().maxCoeff());

  double ric_dev = 0.0;
  for (int k = 0; k <= 10; ++k) {
    const double t = s.a + (s.b - s.a) * k / 10.0;
    const Vec x = lr.geodesic.position(t);
    const Vec v = lr.geodesic.velocity(t);
    ric_dev = std::max(ric_dev, std::abs(ricci_contract(curvature_at(s.metric, x), v, v) - 2.0));
  }

  const ConjugateReport rep = conjugate_points(lr.profile, 0.0, 2.5 * kPi);
  const MorseCheck mc = morse_bound(rep);
  const bool points_ok = rep.points.size() == 2 && rep.points[0].multiplicity == 2 &&
                         rep.points[1].multiplicity == 2 &&
                         std::abs(rep.points[0].t - kPi) < 1e-6 &&
                         std::abs(rep.points[1].t - 2.0 * kPi) < 1e-6;
  const double dt = seconds_since(t0);
  const bool ok = prof_dev < 1e-9 && ric_dev < 1e-9 && points_ok && mc.base_count == 4 &&
                  mc.bound == 8 && mc.satisfied && dt < 2.0;
  std::snprintf(buf, sizeof(buf),
                "profile diag(-1,-1) dev %.1e (< 1e-9); tangential Ricci 2 dev %.1e (< 1e-9); "
                "conjugate points {pi, 2pi} x mult 2 within 1e-6: %s; bound 4 <= 8: %s; "
                "%.2f s (< 2 s)",
                prof_dev, ric_dev, points_ok ? "yes" : "no", mc.satisfied ? "holds" : "violated",
                dt);
  report(3, ok, buf);
  CHECK(prof_dev < 1e-9);
  CHECK(ric_dev < 1e-9);
  CHECK(points_ok);
  CHECK(mc.base_count == 4);
  CHECK(mc.bound == 8);
  CHECK(mc.satisfied);
  CHECK(dt < 2.0);
}

TEST_CASE("criterion 4: product lift reproduces the factor profile") {
  double worst = 0.0;
  // sphere factor
  {
    Scenario s = builtin_scenario("sphere-2");
    const LimitResult direct = limit_of(s.metric, s.x0, s.v0, 0.0, 10.0, 0.0);
    const MetricSpec lifted = lift_product(s.metric);
    Vec x0(3), v0(3);
    x0 << s.x0, 0.0;
    v0 << s.v0, 0.0;
    const LimitResult up = limit_of(lifted, x0, v0, 0.0, 10.0, 0.0);
    REQUIRE(direct.profile.r == 1);
    REQUIRE(up.profile.r == 2);
    for (std::size_t k = 0; k < direct.profile.ts.size(); ++k) {
      const double t = direct.profile.ts[k];
      const Mat A = up.profile.at(t);
      worst = std::max(worst, std::abs(A(0, 0) - direct.profile.samples[k](0, 0)));
      worst = std::max(worst, std::abs(A(0, 1)));
      worst = std::max(worst, std::abs(A(1, 1)));
    }
  }
  // non-constant-curvature surface of revolution
  {
    Scenario s = builtin_scenario("surface-rev");
    const LimitResult direct = limit_of(s.metric, s.x0, s.v0, s.a, s.b, s.t0);
    const MetricSpec lifted = lift_product(s.metric);
    Vec x0(3), v0(3);
    x0 << s.x0, 0.0;
    v0 << s.v0, 0.0;
    const LimitResult up = limit_of(lifted, x0, v0, s.a, s.b, s.t0);
    for (std::size_t k = 0; k < direct.profile.ts.size(); ++k) {
      const double t = direct.profile.ts[k];
      const Mat A = up.profile.at(t);
      worst = std::max(worst, std::abs(A(0, 0) - direct.profile.samples[k](0, 0)));
      worst = std::max(worst, std::abs(A(0, 1)));
      worst = std::max(worst, std::abs(A(1, 1)));
    }
  }
  const bool ok = worst < 1e-6;
  std::snprintf(buf, sizeof(buf),
                "lift-then-limit vs direct profile on the 2-sphere and a surface of "
                "revolution: max deviation %.2e (< 1e-6), line block zero",
                worst);
  report(4, ok, buf);
  CHECK(worst < 1e-6);
}

TEST_CASE("criterion 5: comoving-to-profile conversion against closed forms") {
  // g(t) = cos(t)^2 has conversion frame f = sec(t), so the profile is -1
  const RosenConversion rc = rosen_to_brinkmann({parse("cos(x1)^2", 1)}, 1, -0.5, 1.2);
  double cos_dev = 0.0;
  for (const Mat& A : rc.profile.samples) cos_dev = std::max(cos_dev, std::abs(A(0, 0) + 1.0));

  // pipeline cross-check: surface of revolution, comoving block vs direct wave
  Scenario s = builtin_scenario("surface-rev");
  const LimitResult direct = limit_of(s.metric, s.x0, s.v0, s.a, s.b, s.t0);
  const RosenConversion rs = rosen_to_brinkmann(s.rosen_g, 1, s.rosen_a, s.rosen_b);
  double cross_dev = 0.0;
  for (int k = 0; k <= 200; ++k) {
    const double t = s.rosen_a + (s.rosen_b - s.rosen_a) * k / 200.0;
    cross_dev = std::max(cross_dev,
                         std::abs(rs.profile.at(t)(0, 0) - direct.profile.at(t)(0, 0)));
  }
  const bool ok = cos_dev < 1e-6 && cross_dev < 1e-5;
  std::snprintf(buf, sizeof(buf),
                "cos^2 block -> A = -1 dev %.2e (< 1e-6); surface-of-revolution comoving "
                "block vs direct profile dev %.2e (< 1e-5)",
                cos_dev, cross_dev);
  report(5, ok, buf);
  CHECK(cos_dev < 1e-6);
  CHECK(cross_dev < 1e-5);
}

TEST_CASE("criterion 6: congruence comparison identity on the radial field") {
  Scenario s = builtin_scenario("radial-flow");
  const NormalFrame fr0 = initial_normal_frame(s.metric, s.x0, s.v0);
  const TransportedFrame tf = transport_frame(s.metric, s.x0, s.v0, fr0, s.a, s.b, s.t0);
  const FlowProfileResult fp = flow_profile(s.metric, s.flow_field, tf);
  const bool ok = fp.riccati_residual < 1e-5;
  std::snprintf(buf, sizeof(buf),
                "radial unit field on punctured 3-space over [1, 5]: comparison identity "
                "residual %.2e (< 1e-5), shape alignment %.1e",
                fp.riccati_residual, fp.alignment_residual);
  report(6, ok, buf);
  CHECK(fp.riccati_residual < 1e-5);
  CHECK(fp.alignment_residual < 1e-8);
}

TEST_CASE("criterion 7: evidence suite on the designated scenarios") {
  struct Expectation {
    const char* scenario;
    const char* item;
  };
  const Expectation wanted[] = {
      {"flat-3", "i"},        {"sphere-3", "ii"},      {"hyperbolic-3", "ii"},
      {"ppwave-vacuum", "iii"}, {"sphere-3", "iv"},    {"hyperbolic-3", "iv"},
      {"sphere-3", "v"},      {"ppwave-vacuum", "v"},  {"flat-3", "vi"},
      {"sphere-3", "vi"},     {"hyperbolic-3", "vi"},  {"ppwave-vacuum", "vi"},
  };
  std::map<std::string, json> reports;
  for (const char* name : {"flat-3", "sphere-3", "hyperbolic-3", "ppwave-vacuum"}) {
    Scenario s = builtin_scenario(name);
    s.out_dir = tmp_out(std::string("c7-") + name);
    reports[name] = run_verify(s).report;
  }
  bool all = true;
  double worst = 0.0;
  for (const Expectation& e : wanted) {
    bool found = false;
    for (const json& item : reports[e.scenario]["items"]) {
      if (item["item"] != e.item) continue;
      found = true;
      CAPTURE(e.scenario);
      CAPTURE(e.item);
      CHECK(item["hypothesis_declared"] == true);
      CHECK(item["applicable"] == true);
      CHECK(item["pass"] == true);
      const double res = item["max_residual"].get<double>();
      CHECK(res < 1e-6);
      worst = std::max(worst, res);
      all = all && item["pass"].get<bool>() && res < 1e-6;
    }
    CHECK(found);
    all = all && found;
  }
  // item vii is a domain check, never an integration heuristic about
  // completeness; its note must say so and the sampled equivalence must hold
  for (auto& [name, rep] : reports) {
    for (const json& item : rep["items"]) {
      if (item["item"] != "vii") continue;
      CHECK(item["note"].get<std::string>().find("domain check") != std::string::npos);
      CHECK(item["pass"] == true);
      all = all && item["pass"].get<bool>();
    }
  }
  std::snprintf(buf, sizeof(buf),
                "items i-vi forward directions on flat-3 / sphere-3 / hyperbolic-3 / "
                "ppwave-vacuum: worst residual %.2e (< 1e-6); item vii via domain check",
                worst);
  report(7, all, buf);
  CHECK(all);
}

TEST_CASE("criterion 8: cross-module property spot checks and suite runtime") {
  // curvature tensor symmetries and the cyclic identity on a curved metric
  double sym_res = 0.0;
  {
    Scenario s = builtin_scenario("sphere-3");
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-0.8, 0.8);
    for (int trial = 0; trial < 5; ++trial) {
      Vec x(3);
      for (int i = 0; i < 3; ++i) x(i) = u(rng);
      const CurvaturePoint cp = curvature_at(s.metric, x);
      const int n = 3;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l) {
              sym_res = std::max(sym_res, std::abs(cp.rm(i, j, k, l) + cp.rm(j, i, k, l)));
              sym_res = std::max(sym_res, std::abs(cp.rm(i, j, k, l) - cp.rm(k, l, i, j)));
              sym_res = std::max(sym_res, std::abs(cp.rm(i, j, k, l) + cp.rm(i, k, l, j) +
                                                   cp.rm(i, l, j, k)));
            }
    }
  }

  // conserved quantities along transport
  double drift = 0.0;
  {
    Scenario s = builtin_scenario("sphere-3");
    const GeodesicRecord rec = integrate_geodesic(s.metric, s.x0, s.v0, 0.0, 10.0, 0.0);
    const NormalFrame fr0 = initial_normal_frame(s.metric, s.x0, s.v0);
    const TransportedFrame tf = transport_frame(s.metric, s.x0, s.v0, fr0, 0.0, 10.0, 0.0);
    drift = std::max(rec.energy_drift, tf.gram_drift);
  }

  // index form: closed form on a tent field and the causal-character split
  double idx_res = 0.0;
  {
    WaveProfile flat;  // zero profile over [0, 1], one transverse direction
    {
      Scenario s = builtin_scenario("flat-2");
      flat = limit_of(s.metric, s.x0, s.v0, 0.0, 1.0, 0.0).profile;
    }
    PLField tent;
    tent.ts = {0.0, 0.5, 1.0};
    tent.vals = {Vec::Zero(1), Vec::Ones(1), Vec::Zero(1)};
    idx_res = std::abs(index_form(flat, tent, tent) + 4.0);

    Scenario s = builtin_scenario("pp-example-ssmm");
    const WaveProfile mixed = limit_of(s.metric, s.x0, s.v0, s.a, s.b, s.t0).profile;
    PLField V, W;
    for (int k = 0; k <= 8; ++k) {
      const double t = k / 8.0;
      V.ts.push_back(t);
      W.ts.push_back(t);
      const double bump = t * (1.0 - t);
      V.vals.push_back((Vec(2) << bump, 2.0 * bump).finished());
      W.vals.push_back((Vec(2) << -bump, 0.5 * bump).finished());
    }
    auto masked = [](const PLField& F, int keep) {
      PLField out = F;
      for (Vec& v : out.vals)
        for (int i = 0; i < v.size(); ++i)
          if (i != keep) v(i) = 0.0;
      return out;
    };
    const double full = index_form(mixed, V, W);
    const double split =
        index_form(mixed, masked(V, 0), masked(W, 0)) + index_form(mixed, masked(V, 1), masked(W, 1));
    idx_res = std::max(idx_res, std::abs(full - split));
  }

  // forward-mode derivatives against central differences
  double ad_res = 0.0;
  {
    const Expr e = parse("sin(x1*x2) + exp(x2)/(1 + x1^2)", 2);
    const Vec x = (Vec(2) << 0.7, -0.4).finished();
    const Jet2 j = eval_jet(e, x);
    const double h = 1e-5;
    for (int i = 0; i < 2; ++i) {
      Vec xp = x, xm = x;
      xp(i) += h;
      xm(i) -= h;
      const double fd = (eval_jet(e, xp).val - eval_jet(e, xm).val) / (2.0 * h);
      ad_res = std::max(ad_res, std::abs(fd - j.grad(i)));
    }
  }

  const double elapsed = seconds_since(kSuiteStart);
  const bool ok = sym_res < 1e-9 && drift < 1e-7 && idx_res < 1e-9 && ad_res < 1e-6 &&
                  elapsed < 60.0;
  std::snprintf(buf, sizeof(buf),
                "tensor symmetries %.1e (< 1e-9); transport drift %.1e (< 1e-7); index-form "
                "closed form and split %.1e (< 1e-9); derivative vs central difference %.1e "
                "(< 1e-6); acceptance binary %.1f s (< 60 s)",
                sym_res, drift, idx_res, ad_res, elapsed);
  report(8, ok, buf);
  CHECK(sym_res < 1e-9);
  CHECK(drift < 1e-7);
  CHECK(idx_res < 1e-9);
  CHECK(ad_res < 1e-6);
  CHECK(elapsed < 60.0);
}
