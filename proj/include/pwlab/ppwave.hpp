#pragma once
// Wave metrics in adapted coordinates: structure checks, curvature flags,
// specialized geodesic integration, and completeness probes.
//
// The metric family handled here is
//     g = 2 dx1 dx2 + H(x2, x3..x{r+2}) dx2^2 + sum_i eps_i (dx^{i+2})^2
// with eps_i = +-1.  Coordinates: x1 = v (parallel null direction), x2 = t
// (wave parameter), the rest transverse.  Exact structural facts used and
// verified against the generic machinery:
//     Gamma^v_it = H_i/2,  Gamma^v_tt = H_t/2,  Gamma^i_tt = -eps_i H_i/2,
//     Rm(d_i, d_t, d_t, d_j) = -H_ij/2,
//     Ric(d_t, d_t) = -(1/2) sum_i eps_i H_ii,   scal = 0.

#include "pwlab/limit.hpp"

#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace pwlab {

inline bool expr_uses_var(const Expr& e, int idx) {
  if (e.empty()) return false;
  if (e.kind() == ExprKind::Var || e.kind() == ExprKind::Coeff) return e.var_index() == idx;
  return expr_uses_var(e.child_a(), idx) || expr_uses_var(e.child_b(), idx);
}

struct PpWave {
  int r = 0;
  std::vector<double> eps;  // transverse signs
  Expr H;                   // in vars: index 1 = wave parameter, 2..r+1 transverse
  MetricSpec metric;        // assembled on r+2 coordinates
};

inline PpWave make_pp_wave(const Expr& H, int r, std::vector<double> eps = {},
                           const std::string& id = "wave", double base_t = 0.0) {
  if (r < 1) throw ConfigError("wave needs at least one transverse direction");
  if (H.empty()) throw ConfigError("empty wave profile expression");
  if (eps.empty()) eps.assign(r, 1.0);
  if (static_cast<int>(eps.size()) != r) throw ConfigError("eps size must match rank");
  for (double e : eps)
    if (e != 1.0 && e != -1.0) throw ConfigError("transverse signs must be +1 or -1");
  if (expr_uses_var(H, 0))
    throw ConfigError("wave profile must not depend on x1 (the parallel null coordinate)");

  const int n = r + 2;
  std::vector<Expr> comps(n * (n + 1) / 2, Expr::constant(0.0));
  auto tri = [n](int i, int j) { return i * n - i * (i - 1) / 2 + (j - i); };
  comps[tri(0, 1)] = Expr::constant(1.0);
  comps[tri(1, 1)] = H;
  for (int i = 0; i < r; ++i) comps[tri(2 + i, 2 + i)] = Expr::constant(eps[i]);
  Vec base = Vec::Zero(n);
  base(1) = base_t;

  PpWave w;
  w.r = r;
  w.eps = eps;
  w.H = H;
  w.metric = MetricSpec(n, comps, base, id);
  return w;
}

inline PpWave pp_from_profile(const WaveProfile& p, const std::string& id = "limit") {
  return make_pp_wave(profile_quadratic_form(p), p.r, std::vector<double>(p.r, 1.0), id, p.t0);
}

// One curvature flag: the measured residual, the cutoff it was compared
// against, and whether the criterion applies at all in this configuration.
struct FlagResult {
  bool applicable = true;
  bool value = false;
  double residual = 0.0;
  double tolerance = 0.0;
  std::string note;
};

struct PpClassification {
  FlagResult flat;
  FlagResult conformally_flat;
  FlagResult ricci_flat;
  FlagResult scalar_flat;
  FlagResult locally_symmetric;
  FlagResult harmonic_curvature;
  FlagResult parallel_ricci;
};

namespace detail {

inline FlagResult flag(double residual, double tol) {
  FlagResult f;
  f.residual = residual;
  f.tolerance = tol;
  f.value = residual <= tol;
  return f;
}

}  // namespace detail

// Flags for a quadratic wave given by a profile A(t): H = sum A_ij x^i x^j,
// so the transverse Hessian is 2 sym(A)(t) and everything reduces to matrix
// conditions on the tabulated samples.
inline PpClassification classify_profile(const WaveProfile& p, double tol = 1e-6) {
  const int r = p.r;
  // Constancy flags read a wide central difference.  Tabulated knots carry
  // integrator interpolation noise, and a minimal-spacing stencil amplifies
  // it by 1/dt; width costs nothing because these flags only ask whether the
  // derivative vanishes identically.
  const double span = p.t1 - p.t0;
  const double h = std::min(std::max(10.0 * p.dt, span / 80.0), 0.25 * span);
  double m_all = 0.0, m_off = 0.0, m_spread = 0.0, m_dot = 0.0, m_tr = 0.0, m_trdot = 0.0;
  for (std::size_t k = 0; k < p.ts.size(); ++k) {
    const double t = p.ts[k];
    const Mat S = p.sym_at(t);
    m_all = std::max(m_all, S.cwiseAbs().maxCoeff());
    m_tr = std::max(m_tr, std::abs(S.trace()));
    if (t >= p.t0 + h && t <= p.t1 - h) {
      const Mat Ds = (p.sym_at(t + h) - p.sym_at(t - h)) / (2.0 * h);
      m_dot = std::max(m_dot, Ds.cwiseAbs().maxCoeff());
      m_trdot = std::max(m_trdot, std::abs(Ds.trace()));
    }
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j) {
        if (i != j) m_off = std::max(m_off, std::abs(S(i, j)));
        m_spread = std::max(m_spread, std::abs(S(i, i) - S(j, j)));
      }
  }
  const double scale = std::max(1.0, 2.0 * m_all);
  const double cut = tol * scale;

  PpClassification c;
  c.flat = detail::flag(2.0 * m_all, cut);
  if (r >= 2) {
    c.conformally_flat = detail::flag(2.0 * std::max(m_off, m_spread), cut);
  } else {
    c.conformally_flat.applicable = false;
    c.conformally_flat.note = "needs at least two transverse directions";
  }
  c.ricci_flat = detail::flag(2.0 * m_tr, cut);
  c.scalar_flat = detail::flag(0.0, cut);
  c.scalar_flat.note = "identically zero for this family";
  c.locally_symmetric = detail::flag(2.0 * m_dot, cut);
  c.harmonic_curvature = detail::flag(0.0, cut);
  c.harmonic_curvature.note = "transverse gradient of the Laplacian vanishes for quadratic "
                              "profiles";
  c.parallel_ricci = detail::flag(2.0 * m_trdot, cut);
  return c;
}

// Flags for a general wave, decided by sampling the transverse Hessian of H
// over the parameter span and a transverse box.  No third derivatives are
// formed: constancy conditions are tested by comparing samples.
inline PpClassification classify_pp(const PpWave& w, double a, double b, double box = 1.0,
                                    int nt = 25, int nx = 40, double tol = 1e-6,
                                    unsigned seed = 12345) {
  const int r = w.r;
  const int n = r + 2;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-box, box);

  double m_all = 0.0, m_off = 0.0, m_spread = 0.0, m_lap = 0.0;
  double m_const = 0.0, m_harm = 0.0, m_prll = 0.0;
  Mat ref;
  bool have_ref = false;
  double lap_min = 0.0, lap_max = 0.0;
  bool have_lap = false;

  for (int it = 0; it < nt; ++it) {
    const double t = a + (b - a) * (nt == 1 ? 0.5 : double(it) / (nt - 1));
    double lap_t_min = 0.0, lap_t_max = 0.0;
    bool have_t = false;
    for (int ix = 0; ix < nx; ++ix) {
      Vec x = Vec::Zero(n);
      x(1) = t;
      for (int i = 0; i < r; ++i) x(2 + i) = u(rng);
      const Jet2 jet = eval_jet(w.H, x);
      Mat B(r, r);
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) B(i, j) = jet.hess(2 + i, 2 + j);
      double lap = 0.0;
      for (int i = 0; i < r; ++i) lap += w.eps[i] * B(i, i);

      m_all = std::max(m_all, B.cwiseAbs().maxCoeff());
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) {
          if (i != j) m_off = std::max(m_off, std::abs(B(i, j)));
          m_spread = std::max(m_spread, std::abs(B(i, i) - B(j, j)));
        }
      m_lap = std::max(m_lap, std::abs(lap));
      if (!have_ref) {
        ref = B;
        have_ref = true;
      }
      m_const = std::max(m_const, (B - ref).cwiseAbs().maxCoeff());
      if (!have_t) {
        lap_t_min = lap_t_max = lap;
        have_t = true;
      } else {
        lap_t_min = std::min(lap_t_min, lap);
        lap_t_max = std::max(lap_t_max, lap);
      }
      if (!have_lap) {
        lap_min = lap_max = lap;
        have_lap = true;
      } else {
        lap_min = std::min(lap_min, lap);
        lap_max = std::max(lap_max, lap);
      }
    }
    m_harm = std::max(m_harm, lap_t_max - lap_t_min);
  }
  m_prll = lap_max - lap_min;

  const double scale = std::max(1.0, m_all);
  const double cut = tol * scale;

  PpClassification c;
  c.flat = detail::flag(m_all, cut);
  if (r >= 2) {
    c.conformally_flat = detail::flag(std::max(m_off, m_spread), cut);
  } else {
    c.conformally_flat.applicable = false;
    c.conformally_flat.note = "needs at least two transverse directions";
  }
  c.ricci_flat = detail::flag(m_lap, cut);
  c.scalar_flat = detail::flag(0.0, cut);
  c.scalar_flat.note = "identically zero for this family";
  c.locally_symmetric = detail::flag(m_const, cut);
  c.harmonic_curvature = detail::flag(m_harm, cut);
  c.parallel_ricci = detail::flag(m_prll, cut);
  return c;
}

// Specialized geodesic equations in wave coordinates:
//     t'' = 0,   z_i'' = eps_i (t'^2/2) H_i,   v'' = -H_t t'^2/2 - t' sum_i H_i z_i'
// Cross-validated against the generic christoffel-based integrator.
struct PpGeodesicResult {
  OdeSolution special;  // state (x, x') of size 2(r+2)
  GeodesicRecord generic;
  double cross_validation = 0.0;  // max state difference at shared samples
  double energy_drift = 0.0;      // drift of g(x', x') along the special solution
  bool incomplete = false;
  double escape_time = 0.0;
};

inline PpGeodesicResult integrate_pp_geodesic(const PpWave& w, const Vec& x0, const Vec& v0,
                                              double a, double b, double t0,
                                              const OdeOptions& opt = {},
                                              bool cross_validate = true) {
  const int r = w.r;
  const int n = r + 2;
  if (x0.size() != n || v0.size() != n) throw ConfigError("initial data dimension mismatch");

  OdeRhs rhs = [&w, r, n](double, const Vec& y, Vec& dy) {
    const Vec x = y.head(n);
    const auto vv = y.segment(n, n);
    const Jet2 jet = eval_jet(w.H, x);
    const double td = vv(1);
    dy.resize(2 * n);
    dy.head(n) = vv;
    dy(n + 1) = 0.0;  // wave parameter is affine
    double vsum = 0.0;
    for (int i = 0; i < r; ++i) {
      const double Hi = jet.grad(2 + i);
      dy(n + 2 + i) = w.eps[i] * 0.5 * td * td * Hi;
      vsum += Hi * vv(2 + i);
    }
    dy(n + 0) = -0.5 * jet.grad(1) * td * td - td * vsum;
  };

  PpGeodesicResult out;
  Vec y0(2 * n);
  y0 << x0, v0;
  out.special = integrate_two_sided(rhs, t0, y0, a, b, opt);
  out.incomplete = out.special.status == OdeStatus::blowup;
  out.escape_time = out.special.blowup_time;

  const Mat G0 = w.metric.g_at(x0);
  const double e0 = v0.dot(G0 * v0);
  double drift = 0.0;
  for (std::size_t k = 0; k < out.special.ts.size(); ++k) {
    const Vec x = out.special.ys[k].head(n);
    const Vec v = out.special.ys[k].tail(n);
    drift = std::max(drift, std::abs(v.dot(w.metric.g_at(x) * v) - e0));
  }
  out.energy_drift = drift / std::max(1.0, std::abs(e0));

  if (cross_validate && !out.incomplete) {
    out.generic = integrate_geodesic(w.metric, x0, v0, a, b, t0, opt);
    double worst = 0.0;
    for (int k = 0; k <= 100; ++k) {
      const double t = a + (b - a) * k / 100.0;
      worst = std::max(worst,
                       (out.special.eval(t) - out.generic.sol.eval(t)).cwiseAbs().maxCoeff());
    }
    out.cross_validation = worst;
  }
  return out;
}

struct CompletenessProbe {
  bool complete = false;
  double escape_time = 0.0;  // valid when incomplete
  double reached = 0.0;      // last parameter covered
};

inline CompletenessProbe completeness_probe(const PpWave& w, const Vec& x0, const Vec& v0,
                                            double a, double b, double t0,
                                            const OdeOptions& opt = {}) {
  const PpGeodesicResult g = integrate_pp_geodesic(w, x0, v0, a, b, t0, opt, false);
  CompletenessProbe p;
  p.complete = !g.incomplete;
  p.escape_time = g.escape_time;
  p.reached = g.incomplete ? g.escape_time
                           : std::max(g.special.t_begin(), g.special.t_end());
  return p;
}

// Residuals of the structural identities, sampled over the span and a
// transverse box.  All should sit at solver noise for a genuine wave metric.
struct PpInvariantReport {
  double scalar_residual = 0.0;       // |scal|
  double christoffel_residual = 0.0;  // worst deviation from the 3-slot structure
  double curvature_residual = 0.0;    // Rm(i,t,t,j) vs -H_ij/2, rest of the i,t,t,j block
  double ricci_residual = 0.0;        // Ric vs -(1/2) signed Laplacian in the tt slot
  double weyl_residual = 0.0;         // W(i,t,t,j) vs -H_ij/2 + eps_i delta_ij lap/(2r); r>=2
};

inline PpInvariantReport pp_invariants(const PpWave& w, double a, double b, double box = 1.0,
                                       int nsamples = 30, unsigned seed = 777) {
  const int r = w.r;
  const int n = r + 2;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-box, box);
  PpInvariantReport rep;

  for (int s = 0; s < nsamples; ++s) {
    Vec x = Vec::Zero(n);
    x(1) = a + (b - a) * (nsamples == 1 ? 0.5 : double(s) / (nsamples - 1));
    for (int i = 0; i < r; ++i) x(2 + i) = u(rng);
    x(0) = u(rng);  // nothing may depend on the null coordinate

    const CurvaturePoint cp = curvature_at(w.metric, x);
    const Jet2 jet = eval_jet(w.H, x);
    double lap = 0.0;
    for (int i = 0; i < r; ++i) lap += w.eps[i] * jet.hess(2 + i, 2 + i);

    rep.scalar_residual = std::max(rep.scalar_residual, std::abs(cp.scal));

    Tensor3 expected(n);
    for (int i = 0; i < r; ++i) {
      expected(0, 2 + i, 1) = 0.5 * jet.grad(2 + i);
      expected(0, 1, 2 + i) = 0.5 * jet.grad(2 + i);
      expected(2 + i, 1, 1) = -w.eps[i] * 0.5 * jet.grad(2 + i);
    }
    expected(0, 1, 1) = 0.5 * jet.grad(1);
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          rep.christoffel_residual =
              std::max(rep.christoffel_residual, std::abs(cp.gamma(k, i, j) - expected(k, i, j)));

    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j)
        rep.curvature_residual =
            std::max(rep.curvature_residual,
                     std::abs(cp.rm(2 + i, 1, 1, 2 + j) + 0.5 * jet.hess(2 + i, 2 + j)));

    Mat ric_expected = Mat::Zero(n, n);
    ric_expected(1, 1) = -0.5 * lap;
    rep.ricci_residual =
        std::max(rep.ricci_residual, (cp.ric - ric_expected).cwiseAbs().maxCoeff());

    if (r >= 2) {
      const Tensor4 W = weyl_tensor(cp);
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) {
          const double want = -0.5 * jet.hess(2 + i, 2 + j) +
                              (i == j ? w.eps[i] * lap / (2.0 * r) : 0.0);
          rep.weyl_residual =
              std::max(rep.weyl_residual, std::abs(W(2 + i, 1, 1, 2 + j) - want));
        }
    }
  }
  return rep;
}

}  // namespace pwlab
