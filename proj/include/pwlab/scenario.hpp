#pragma once
// Built-in scenario catalog and config resolution.
//
// A scenario bundles a metric with one distinguished geodesic (initial data
// and a parameter window), a conjugate-point search window, optional add-ons
// for specific pipelines (a vector field for the congruence comparison,
// one-variable metric blocks for the Brinkmann conversion), and declared
// structural traits of the metric.  Traits are declarations the evidence
// reports quote; nothing here measures them.
//
// Trait vocabulary: flat, constant-curvature, ricci-flat, scalar-flat,
// einstein, parallel-curvature, plane-wave.

#include "pwlab/io.hpp"
#include "pwlab/limit.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace pwlab {

// How random verification geodesics are drawn around the base point.  Chart
// samplers keep the draw inside the region where the coordinate patch is
// well conditioned.
enum class SampleChart { box, stereographic, halfspace };

struct Scenario {
  std::string name = "inline";
  std::string summary;
  MetricSpec metric;
  Vec x0, v0;
  double t0 = 0.0, a = 0.0, b = 1.0;   // geodesic window, x(t0) = x0
  double conj_a = 0.0, conj_b = 1.0;   // conjugate search window
  std::vector<std::string> traits;

  SampleChart chart = SampleChart::box;
  int chart_dims = 0;            // leading coordinates covered by the chart
  double sample_offset = 0.4;    // box half-width around x0
  double verify_span = 4.0;      // parameter length of sampled geodesics

  std::vector<Expr> flow_field;  // empty unless the scenario carries a congruence
  std::vector<Expr> rosen_g;     // one-variable blocks g_ij(x1), upper triangle
  int rosen_r = 0;
  double rosen_a = 0.0, rosen_b = 0.0;

  double tol = 1e-6;
  unsigned seed = 20240817;
  int geodesics = 16;
  std::string verify_item = "all";
  std::string out_dir = "out";
};

inline bool has_trait(const Scenario& s, const std::string& t) {
  return std::find(s.traits.begin(), s.traits.end(), t) != s.traits.end();
}

namespace detail {

inline Vec unit_vec(int n, int k, double scale = 1.0) {
  Vec v = Vec::Zero(n);
  v(k) = scale;
  return v;
}

inline MetricSpec metric_from_strings(int n, const std::vector<std::string>& upper,
                                      const Vec& base, const std::string& id) {
  std::vector<Expr> comps;
  comps.reserve(upper.size());
  for (const std::string& src : upper) comps.push_back(parse(src, n));
  return MetricSpec(n, comps, base, id);
}

inline MetricSpec diag_metric(int n, const std::vector<std::string>& diag, const Vec& base,
                              const std::string& id) {
  std::vector<std::string> upper;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) upper.push_back(i == j ? diag[i] : "0");
  return metric_from_strings(n, upper, base, id);
}

// g_ij = 4 delta_ij / (1+|x|^2)^2: the round unit sphere minus one point.
inline std::string stereographic_factor(int n) {
  std::string denom = "(1";
  for (int k = 1; k <= n; ++k) denom += "+x" + std::to_string(k) + "^2";
  denom += ")";
  return "4/" + denom + "^2";
}

// Largest cosine of the angle between the chart's projection pole and the
// great circle through chart point y with chart velocity u.  Values near 1
// mean the circle passes close to the pole, where stereographic coordinates
// blow up.
inline double pole_cosine(const Vec& y, const Vec& u) {
  const int d = static_cast<int>(y.size());
  const double s = y.squaredNorm();
  const double w = 1.0 + s;
  const double yu = y.dot(u);
  Vec P(d + 1), U(d + 1);
  P.head(d) = 2.0 * y / w;
  P(d) = (s - 1.0) / w;
  U.head(d) = 2.0 * u / w - 4.0 * yu * y / (w * w);
  U(d) = 4.0 * yu / (w * w);
  const double un = U.norm();
  const double pn = P(d);
  if (un < 1e-12) return std::abs(pn);  // circle degenerates to the point itself
  return std::sqrt(pn * pn + (U(d) / un) * (U(d) / un));
}

inline int family_dim(const std::string& name, const std::string& prefix) {
  if (name.size() <= prefix.size() || name.compare(0, prefix.size(), prefix) != 0) return -1;
  const std::string tail = name.substr(prefix.size());
  if (tail.empty() || tail.find_first_not_of("0123456789") != std::string::npos) return -1;
  const int n = std::stoi(tail);
  if (n < 2 || n > 6)
    throw ConfigError("scenario " + name + ": dimension must be between 2 and 6");
  return n;
}

}  // namespace detail

inline std::vector<std::string> builtin_scenario_names() {
  return {"flat-2",       "flat-3",     "flat-4",      "sphere-2",        "sphere-3",
          "sphere-4",     "hyperbolic-2", "hyperbolic-3", "minkowski",
          "pp-example-ssmm", "ppwave-vacuum", "product-lift", "surface-rev",
          "radial-flow",  "rosen-cos"};
}

inline Scenario builtin_scenario(const std::string& name) {
  using detail::diag_metric;
  using detail::metric_from_strings;
  using detail::unit_vec;

  const std::vector<std::string> everything = {
      "flat", "constant-curvature", "ricci-flat", "scalar-flat", "einstein",
      "parallel-curvature"};

  Scenario s;
  s.name = name;

  if (int n = detail::family_dim(name, "flat-"); n > 0) {
    s.summary = "euclidean space; every wave limit vanishes";
    s.metric = diag_metric(n, std::vector<std::string>(n, "1"), Vec::Zero(n), name);
    s.x0 = Vec::Zero(n);
    s.v0 = unit_vec(n, 0);
    s.a = 0.0;
    s.b = 10.0;
    s.conj_a = 0.0;
    s.conj_b = 10.0;
    s.traits = everything;
    return s;
  }

  if (int n = detail::family_dim(name, "sphere-"); n > 0) {
    s.summary = "round unit sphere, stereographic chart";
    Vec base = unit_vec(n, 0, 0.4);
    std::vector<std::string> diag(n, detail::stereographic_factor(n));
    s.metric = diag_metric(n, diag, base, name);
    s.x0 = base;
    // unit speed: |v|_g = 2|v|/(1+|x|^2)
    s.v0 = unit_vec(n, 1, (1.0 + 0.16) / 2.0);
    s.a = 0.0;
    s.b = 10.0;
    s.conj_a = 0.0;
    s.conj_b = 4.71238898038469;  // three half-periods
    s.traits = {"constant-curvature", "einstein", "parallel-curvature"};
    s.chart = SampleChart::stereographic;
    s.chart_dims = n;
    return s;
  }

  if (int n = detail::family_dim(name, "hyperbolic-"); n > 0) {
    s.summary = "hyperbolic space, upper half-space chart";
    const std::string h = "1/x" + std::to_string(n) + "^2";
    s.metric = diag_metric(n, std::vector<std::string>(n, h), unit_vec(n, n - 1), name);
    s.x0 = unit_vec(n, n - 1);
    s.v0 = unit_vec(n, n - 1);  // straight up; x_n grows exponentially
    s.a = 0.0;
    s.b = 6.0;
    s.conj_a = 0.0;
    s.conj_b = 3.0;
    s.traits = {"constant-curvature", "einstein", "parallel-curvature"};
    s.chart = SampleChart::halfspace;
    s.verify_span = 3.5;
    return s;
  }

  if (name == "minkowski") {
    s.summary = "flat spacetime, one timelike direction";
    s.metric = diag_metric(4, {"-1", "1", "1", "1"}, Vec::Zero(4), name);
    s.x0 = Vec::Zero(4);
    s.v0 = unit_vec(4, 0);
    s.a = 0.0;
    s.b = 10.0;
    s.conj_a = 0.0;
    s.conj_b = 10.0;
    s.traits = everything;
    return s;
  }

  if (name == "pp-example-ssmm") {
    s.summary = "neutral-signature wave: timelike and spacelike transverse directions";
    std::vector<std::string> upper(10, "0");
    // order: 11,12,13,14,22,23,24,33,34,44
    upper[1] = "1";
    upper[4] = "x3^2-x4^2";
    upper[7] = "-1";
    upper[9] = "1";
    s.metric = metric_from_strings(4, upper, Vec::Zero(4), name);
    s.x0 = Vec::Zero(4);
    s.v0 = unit_vec(4, 1);  // lightlike: runs along the wave coordinate
    s.a = -8.5;
    s.b = 8.5;
    s.conj_a = 0.0;
    s.conj_b = 7.853981633974483;  // 2.5 half-periods of the oscillating pair
    s.traits = {"plane-wave", "scalar-flat", "parallel-curvature"};
    return s;
  }

  if (name == "ppwave-vacuum") {
    s.summary = "lorentzian wave with harmonic quadratic potential";
    std::vector<std::string> upper(10, "0");
    upper[1] = "1";
    upper[4] = "x3^2-x4^2";
    upper[7] = "1";
    upper[9] = "1";
    s.metric = metric_from_strings(4, upper, Vec::Zero(4), name);
    s.x0 = Vec::Zero(4);
    s.v0 = unit_vec(4, 1);
    s.a = -8.5;
    s.b = 8.5;
    s.conj_a = 0.0;
    s.conj_b = 7.853981633974483;
    s.traits = {"plane-wave", "ricci-flat", "scalar-flat", "einstein",
                "parallel-curvature"};
    // the defocusing direction grows like exp(t): keep sampled windows short
    s.verify_span = 2.5;
    return s;
  }

  if (name == "product-lift") {
    s.summary = "unit sphere times a flat line, geodesic in the sphere factor";
    Scenario sphere = builtin_scenario("sphere-2");
    s.metric = lift_product(sphere.metric);
    s.metric.set_id(name);
    s.x0 = Vec::Zero(3);
    s.x0.head(2) = sphere.x0;
    s.v0 = Vec::Zero(3);
    s.v0.head(2) = sphere.v0;
    s.a = 0.0;
    s.b = 10.0;
    s.conj_a = 0.0;
    s.conj_b = 4.71238898038469;
    s.traits = {"parallel-curvature"};
    s.chart = SampleChart::stereographic;
    s.chart_dims = 2;
    return s;
  }

  if (name == "surface-rev") {
    s.summary = "surface of revolution with oscillating curvature";
    s.metric = metric_from_strings(2, {"1", "0", "(2+sin(x1))^2"},
                                   (Vec(2) << 0.0, 0.3).finished(), name);
    s.x0 = (Vec(2) << 0.0, 0.3).finished();
    s.v0 = unit_vec(2, 0);
    s.a = 0.0;
    s.b = 8.0;
    s.conj_a = 0.0;
    s.conj_b = 8.0;
    s.rosen_g = {parse("(2+sin(x1))^2", 1)};
    s.rosen_r = 1;
    s.rosen_a = 0.0;
    s.rosen_b = 8.0;
    return s;
  }

  if (name == "radial-flow") {
    s.summary = "flat space with the unit radial congruence off the origin";
    s.metric = diag_metric(3, {"1", "1", "1"}, (Vec(3) << 1.0, 0.0, 0.0).finished(), name);
    s.x0 = (Vec(3) << 1.0, 0.0, 0.0).finished();
    s.v0 = unit_vec(3, 0);
    s.t0 = 1.0;
    s.a = 1.0;
    s.b = 5.0;
    s.conj_a = 1.0;
    s.conj_b = 5.0;
    s.traits = everything;
    s.sample_offset = 0.3;
    const std::string norm = "sqrt(x1^2+x2^2+x3^2)";
    s.flow_field = {parse("x1/" + norm, 3), parse("x2/" + norm, 3),
                    parse("x3/" + norm, 3)};
    return s;
  }

  if (name == "rosen-cos") {
    s.summary = "plane wave in comoving coordinates with a cosine-squared block";
    std::vector<std::string> upper(6, "0");
    // order: 11,12,13,22,23,33
    upper[1] = "1";
    upper[5] = "cos(x1)^2";
    s.metric = metric_from_strings(3, upper, Vec::Zero(3), name);
    s.x0 = Vec::Zero(3);
    s.v0 = unit_vec(3, 0);  // lightlike wave direction
    s.a = -0.5;
    s.b = 1.2;
    s.conj_a = -0.5;
    s.conj_b = 1.2;
    s.traits = {"plane-wave", "parallel-curvature", "scalar-flat"};
    s.sample_offset = 0.2;
    s.verify_span = 0.8;
    s.rosen_g = {parse("cos(x1)^2", 1)};
    s.rosen_r = 1;
    s.rosen_a = -0.5;
    s.rosen_b = 1.2;
    return s;
  }

  throw ConfigError("unknown scenario `" + name + "`; built-ins: flat-n, sphere-n, "
                    "hyperbolic-n (n = 2..6), minkowski, pp-example-ssmm, ppwave-vacuum, "
                    "product-lift, surface-rev, radial-flow, rosen-cos");
}

inline const std::vector<std::string>& scenario_config_keys() {
  static const std::vector<std::string> keys = {
      "metric.builtin",   "metric.id",     "metric.dim",   "metric.components",
      "metric.point",     "metric.traits", "geodesic.point", "geodesic.velocity",
      "geodesic.t0",      "geodesic.span", "conjugate.span", "verify.item",
      "verify.geodesics", "verify.seed",   "verify.span",  "flow.field",
      "rosen.dim",        "rosen.g",       "rosen.span",   "run.tol",
      "output.dir"};
  return keys;
}

namespace detail {

inline Vec vec_from(const std::vector<double>& v) {
  Vec out(static_cast<int>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<int>(i)) = v[i];
  return out;
}

inline void span_from(const Config& cfg, const std::string& key, double& a, double& b) {
  const std::vector<double> sp = cfg.nums(key);
  if (sp.size() != 2 || !(sp[0] < sp[1]))
    throw ConfigError(key + " must be [a, b] with a < b");
  a = sp[0];
  b = sp[1];
}

inline int int_from(const Config& cfg, const std::string& key, int lo, int hi) {
  const double d = cfg.num(key);
  const int n = static_cast<int>(d);
  if (d != n || n < lo || n > hi)
    throw ConfigError(key + " must be an integer in [" + std::to_string(lo) + ", " +
                      std::to_string(hi) + "]");
  return n;
}

}  // namespace detail

// Resolve a parsed config file into a scenario: either a named built-in or an
// inline metric, then apply the overrides the file spells out.
inline Scenario scenario_from_config(const Config& cfg) {
  cfg.restrict_to(scenario_config_keys());

  Scenario s;
  if (cfg.has("metric.builtin")) {
    if (cfg.has("metric.dim") || cfg.has("metric.components") || cfg.has("metric.point"))
      throw ConfigError("metric.builtin excludes inline metric keys");
    s = builtin_scenario(cfg.text("metric.builtin"));
    if (cfg.has("metric.id")) s.metric.set_id(cfg.text("metric.id"));
  } else {
    if (!cfg.has("metric.dim"))
      throw ConfigError("config needs metric.builtin or an inline metric.dim");
    const int n = detail::int_from(cfg, "metric.dim", 2, 9);
    const std::vector<std::string> comps = cfg.texts("metric.components");
    if (static_cast<int>(comps.size()) != n * (n + 1) / 2)
      throw ConfigError("metric.components needs " + std::to_string(n * (n + 1) / 2) +
                        " upper-triangle entries for dimension " + std::to_string(n));
    const Vec base = detail::vec_from(cfg.nums("metric.point"));
    if (base.size() != n) throw ConfigError("metric.point needs " + std::to_string(n) +
                                            " coordinates");
    try {
      s.metric = detail::metric_from_strings(n, comps, base,
                                             cfg.text_or("metric.id", "inline"));
    } catch (const ParseError& e) {
      throw ConfigError(std::string("metric.components: ") + e.what());
    }
    s.name = s.metric.id();
    s.x0 = base;
    s.v0 = detail::unit_vec(n, 0);
    if (!cfg.has("geodesic.span"))
      throw ConfigError("inline metrics need geodesic.span");
  }

  if (cfg.has("metric.traits")) s.traits = cfg.texts("metric.traits");

  if (cfg.has("geodesic.point")) {
    s.x0 = detail::vec_from(cfg.nums("geodesic.point"));
    if (s.x0.size() != s.metric.dim()) throw ConfigError("geodesic.point dimension mismatch");
  }
  if (cfg.has("geodesic.velocity")) {
    s.v0 = detail::vec_from(cfg.nums("geodesic.velocity"));
    if (s.v0.size() != s.metric.dim())
      throw ConfigError("geodesic.velocity dimension mismatch");
  }
  if (cfg.has("geodesic.span")) {
    detail::span_from(cfg, "geodesic.span", s.a, s.b);
    s.conj_a = s.a;
    s.conj_b = s.b;
    s.verify_span = std::min(4.0, s.b - s.a);
  }
  s.t0 = cfg.num_or("geodesic.t0", cfg.has("geodesic.span") ? s.a : s.t0);
  if (!(s.t0 >= s.a && s.t0 <= s.b))
    throw ConfigError("geodesic.t0 must lie inside geodesic.span");

  if (cfg.has("conjugate.span")) detail::span_from(cfg, "conjugate.span", s.conj_a, s.conj_b);
  if (cfg.has("verify.item")) {
    s.verify_item = cfg.text("verify.item");
    static const std::vector<std::string> known = {"i",  "ii", "iii",      "iv",    "v",
                                                   "vi", "vii", "focusing", "morse", "all"};
    if (std::find(known.begin(), known.end(), s.verify_item) == known.end())
      throw ConfigError("verify.item must be one of i..vii, focusing, morse, all");
  }
  if (cfg.has("verify.geodesics")) s.geodesics = detail::int_from(cfg, "verify.geodesics", 1, 4096);
  if (cfg.has("verify.seed")) s.seed = static_cast<unsigned>(detail::int_from(cfg, "verify.seed", 0, 1 << 30));
  if (cfg.has("verify.span")) {
    s.verify_span = cfg.num("verify.span");
    if (!(s.verify_span > 0.0)) throw ConfigError("verify.span must be positive");
  }

  if (cfg.has("flow.field")) {
    const std::vector<std::string> comps = cfg.texts("flow.field");
    if (static_cast<int>(comps.size()) != s.metric.dim())
      throw ConfigError("flow.field needs one component per coordinate");
    s.flow_field.clear();
    try {
      for (const std::string& src : comps) s.flow_field.push_back(parse(src, s.metric.dim()));
    } catch (const ParseError& e) {
      throw ConfigError(std::string("flow.field: ") + e.what());
    }
  }

  if (cfg.has("rosen.dim")) {
    s.rosen_r = detail::int_from(cfg, "rosen.dim", 1, 7);
    const std::vector<std::string> comps = cfg.texts("rosen.g");
    if (static_cast<int>(comps.size()) != s.rosen_r * (s.rosen_r + 1) / 2)
      throw ConfigError("rosen.g needs " + std::to_string(s.rosen_r * (s.rosen_r + 1) / 2) +
                        " upper-triangle entries");
    s.rosen_g.clear();
    try {
      for (const std::string& src : comps) s.rosen_g.push_back(parse(src, 1));
    } catch (const ParseError& e) {
      throw ConfigError(std::string("rosen.g: ") + e.what());
    }
    detail::span_from(cfg, "rosen.span", s.rosen_a, s.rosen_b);
  } else if (cfg.has("rosen.g") || cfg.has("rosen.span")) {
    throw ConfigError("rosen.g and rosen.span need rosen.dim");
  }

  if (cfg.has("run.tol")) {
    s.tol = cfg.num("run.tol");
    if (!(s.tol > 0.0 && s.tol < 1.0)) throw ConfigError("run.tol must be in (0, 1)");
  }
  s.out_dir = cfg.text_or("output.dir", s.out_dir);
  return s;
}

// Draw initial data for one verification geodesic.  Non-null velocities are
// normalized to unit speed; draws in the awkward nearly-null band are
// rejected so the normal-frame construction stays well conditioned.
inline std::pair<Vec, Vec> sample_initial_data(const Scenario& s, std::mt19937_64& rng) {
  const int n = s.metric.dim();
  std::uniform_real_distribution<double> u11(-1.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int attempt = 0; attempt < 500; ++attempt) {
    Vec x0 = s.x0;
    Vec v(n);
    switch (s.chart) {
      case SampleChart::box: {
        for (int i = 0; i < n; ++i) x0(i) += s.sample_offset * u11(rng);
        break;
      }
      case SampleChart::stereographic: {
        const int d = s.chart_dims;
        Vec dir(d);
        double dn = 0.0;
        do {
          for (int i = 0; i < d; ++i) dir(i) = u11(rng);
          dn = dir.norm();
        } while (dn < 0.15 || dn > 1.0);
        x0.head(d) = (0.2 + 0.6 * u01(rng)) / dn * dir;
        for (int i = d; i < n; ++i) x0(i) += s.sample_offset * u11(rng);
        break;
      }
      case SampleChart::halfspace: {
        for (int i = 0; i + 1 < n; ++i) x0(i) += 0.5 * u11(rng);
        x0(n - 1) = 0.7 + 0.35 * (u11(rng) + 1.0);
        break;
      }
    }
    for (int i = 0; i < n; ++i) v(i) = u11(rng);
    if (v.cwiseAbs().maxCoeff() < 0.2) continue;
    // Reject the nearly-null band: unit normalization divides by sqrt(|q|),
    // and a tiny |q| would inflate the velocity (fast chart motion, stiff
    // transport) besides leaving the normal frame ill conditioned.
    const double q = v.dot(s.metric.g_at(x0) * v);
    if (std::abs(q) < 0.25) continue;
    v /= std::sqrt(std::abs(q));
    if (s.chart == SampleChart::stereographic) {
      // keep the great circle of the chart factor clear of the pole
      if (detail::pole_cosine(x0.head(s.chart_dims), v.head(s.chart_dims)) > 0.9393727128473789)
        continue;
    }
    return {x0, v};
  }
  throw NumericalError("could not draw admissible initial data for scenario " + s.name);
}

}  // namespace pwlab
