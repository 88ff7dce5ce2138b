#pragma once
// Plane wave limits along geodesics.
//
// Given a geodesic with a parallel orthonormal normal frame E_1..E_r, the wave
// profile is
//     A_ij(t) = -eps_i Rm(E_i, v, v, E_j),        eps_i = g(E_i, E_i),
// an r x r matrix family on a uniform grid.  Mixed-sign pairs make A_ij
// antisymmetric; same-sign pairs symmetric.  The trace obeys
//     tr A(t) = -Ric(v, v)  along the curve, which is monitored.
//
// The associated limit metric is the plane wave
//     2 dx1 dx2 + (sum_ij A_ij(x2) x^{i+2} x^{j+2}) dx2^2 + sum_i (dx^{i+2})^2
// on R^{r+2}, always Lorentzian, with the profile entering through sampled
// coefficient tables.

#include "pwlab/geometry.hpp"
#include "pwlab/transport.hpp"

#include <cmath>
#include <memory>
#include <string>
#include <vector>

namespace pwlab {

struct WaveProfile {
  int r = 0;
  std::vector<double> eps;
  double t0 = 0.0, t1 = 0.0, dt = 0.0;
  std::vector<double> ts;
  std::vector<Mat> samples;                              // A at each knot
  std::vector<std::shared_ptr<const CoeffTable>> tables; // r*r tables, row-major
  double trace_residual = 0.0;  // max |tr A + Ric(v,v)| over knots

  Mat at(double t) const {
    Mat A(r, r);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j) {
        double p;
        tables[i * r + j]->eval(t, &p, nullptr, nullptr);
        A(i, j) = p;
      }
    return A;
  }

  Mat dot_at(double t) const {
    Mat B(r, r);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j) {
        double dp;
        tables[i * r + j]->eval(t, nullptr, &dp, nullptr);
        B(i, j) = dp;
      }
    return B;
  }

  Mat sym_at(double t) const {
    const Mat A = at(t);
    return 0.5 * (A + A.transpose());
  }
};

inline int profile_grid_size(double len) {
  const double want = std::ceil(len * 120.0) + 1.0;
  return static_cast<int>(std::max(601.0, std::min(4001.0, want)));
}

namespace detail {

inline WaveProfile tabulate_profile(const std::vector<double>& ts,
                                    const std::vector<Mat>& samples,
                                    const std::vector<double>& eps) {
  WaveProfile p;
  p.r = samples.empty() ? 0 : static_cast<int>(samples.front().rows());
  p.eps = eps;
  p.ts = ts;
  p.t0 = ts.front();
  p.t1 = ts.back();
  p.dt = ts.size() > 1 ? (p.t1 - p.t0) / (ts.size() - 1) : 0.0;
  p.samples = samples;
  p.tables.resize(p.r * p.r);
  std::vector<double> vals(ts.size());
  for (int i = 0; i < p.r; ++i)
    for (int j = 0; j < p.r; ++j) {
      for (std::size_t k = 0; k < ts.size(); ++k) vals[k] = samples[k](i, j);
      p.tables[i * p.r + j] =
          std::make_shared<const CoeffTable>(CoeffTable::from_samples(p.t0, p.dt, vals));
    }
  return p;
}

}  // namespace detail

// Extract the wave profile from a transported frame.  The frame's joint dense
// output supplies positions, velocities, and frame vectors on one grid, so all
// ingredients are mutually consistent.
inline WaveProfile wave_profile(const MetricSpec& m, const TransportedFrame& tf) {
  if (tf.incomplete)
    throw NumericalError("wave profile needs a complete geodesic; state escaped at t=" +
                         std::to_string(tf.escape_time));
  const double a = tf.joint.t_begin(), b = tf.joint.t_end();
  const int N = profile_grid_size(b - a);
  const int r = tf.r;
  std::vector<double> ts(N);
  std::vector<Mat> samples(N);
  double trace_res = 0.0;
  for (int k = 0; k < N; ++k) {
    const double t = a + (b - a) * k / (N - 1);
    ts[k] = t;
    const Vec x = tf.x_at(t);
    const Vec v = tf.v_at(t);
    const Mat F = tf.frame_at(t);
    const CurvaturePoint cp = curvature_at(m, x);
    const Mat T = rm_vv_slots(cp, v);
    Mat A(r, r);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j) A(i, j) = -tf.eps[i] * F.col(i).dot(T * F.col(j));
    samples[k] = A;
    trace_res = std::max(trace_res, std::abs(A.trace() + ricci_contract(cp, v, v)));
  }
  WaveProfile p = detail::tabulate_profile(ts, samples, tf.eps);
  p.trace_residual = trace_res;
  return p;
}

// Quadratic form sum_ij A_ij(t) x^i x^j as an expression in the limit
// coordinates (x1 = v, x2 = t, x3.. transverse), with the profile entering
// through sampled coefficient tables.  Only the symmetric part survives;
// mixed-sign antisymmetric entries cancel, which is the invariance of the
// construction.
inline Expr profile_quadratic_form(const WaveProfile& p) {
  const int r = p.r;
  if (r < 1) throw ConfigError("profile has no transverse directions");
  if (p.ts.size() < 5) throw ConfigError("profile grid too small");
  Expr H;
  for (int i = 0; i < r; ++i)
    for (int j = i; j < r; ++j) {
      std::vector<double> vals(p.ts.size());
      for (std::size_t k = 0; k < p.ts.size(); ++k)
        vals[k] = (i == j) ? p.samples[k](i, i) : p.samples[k](i, j) + p.samples[k](j, i);
      bool all_zero = true;
      for (double v : vals)
        if (v != 0.0) all_zero = false;
      if (all_zero) continue;
      auto table = std::make_shared<const CoeffTable>(CoeffTable::from_samples(p.t0, p.dt, vals));
      const std::string label = "A" + std::to_string(i + 1) + std::to_string(j + 1);
      Expr term = Expr::coeff(table, 1, label) * Expr::var(2 + i) * Expr::var(2 + j);
      H = H.empty() ? term : H + term;
    }
  if (H.empty()) H = Expr::constant(0.0);
  return H;
}

// Build the limit plane wave metric on R^{r+2}.  Coordinates: x1 = v, x2 = t,
// x3..x{r+2} transverse.
inline MetricSpec assemble_plane_wave(const WaveProfile& p, const std::string& id = "limit") {
  const int r = p.r;
  const int n = r + 2;
  const Expr H = profile_quadratic_form(p);

  std::vector<Expr> comps(n * (n + 1) / 2, Expr::constant(0.0));
  auto tri = [n](int i, int j) { return i * n - i * (i - 1) / 2 + (j - i); };
  comps[tri(0, 1)] = Expr::constant(1.0);
  comps[tri(1, 1)] = H;
  for (int i = 0; i < r; ++i) comps[tri(2 + i, 2 + i)] = Expr::constant(1.0);

  Vec base = Vec::Zero(n);
  base(1) = p.t0;
  MetricSpec limit(n, comps, base, id);
  if (signature_at(limit, base).first != 1)
    throw NumericalError("assembled limit metric is not Lorentzian");
  return limit;
}

// Full pipeline: geodesic -> frame -> transport -> profile -> limit metric.
struct LimitResult {
  GeodesicRecord geodesic;
  NormalFrame frame0;
  TransportedFrame transported;
  WaveProfile profile;
  MetricSpec limit_metric;
};

inline LimitResult limit_of(const MetricSpec& m, const Vec& x0, const Vec& v0, double a,
                            double b, double t0, const OdeOptions& opt = {}) {
  LimitResult out;
  out.geodesic = integrate_geodesic(m, x0, v0, a, b, t0, opt);
  if (out.geodesic.incomplete)
    throw NumericalError("geodesic escapes the manifold at t=" +
                         std::to_string(out.geodesic.escape_time) +
                         "; shrink the span or move the base point");
  out.frame0 = initial_normal_frame(m, x0, v0);
  if (out.frame0.rank() < 1)
    throw ConfigError("no transverse directions normal to this geodesic (dimension too low)");
  out.transported = transport_frame(m, x0, v0, out.frame0, a, b, t0, opt);
  out.profile = wave_profile(m, out.transported);
  out.limit_metric = assemble_plane_wave(out.profile, m.id() + "-limit");
  return out;
}

// Relate the profiles of two frame choices along one geodesic.  The change of
// frame K (computed at the initial parameter) must preserve the inner products
// and avoid mixing timelike with spacelike members; then A2 = K A1 K^T.
struct FrameChangeReport {
  Mat K;
  double block_orthogonality_residual = 0.0;  // K eps K^T vs eps, plus cross-block mass
  double profile_residual = 0.0;              // max_t |A2 - K A1 K^T|_inf
};

inline FrameChangeReport frame_change_check(const MetricSpec& m, double t0,
                                            const TransportedFrame& f1,
                                            const TransportedFrame& f2, const WaveProfile& p1,
                                            const WaveProfile& p2) {
  if (f1.r != f2.r) throw ConfigError("frames have different ranks");
  const int r = f1.r;
  const Mat G = m.g_at(f1.x_at(t0));
  const Mat F1 = f1.frame_at(t0);
  const Mat F2 = f2.frame_at(t0);
  FrameChangeReport rep;
  rep.K = Mat(r, r);
  for (int i = 0; i < r; ++i)
    for (int l = 0; l < r; ++l) rep.K(i, l) = f1.eps[l] * F2.col(i).dot(G * F1.col(l));

  Mat eps1 = Mat::Zero(r, r), eps2 = Mat::Zero(r, r);
  for (int i = 0; i < r; ++i) {
    eps1(i, i) = f1.eps[i];
    eps2(i, i) = f2.eps[i];
  }
  double resid = (rep.K * eps1 * rep.K.transpose() - eps2).cwiseAbs().maxCoeff();
  for (int i = 0; i < r; ++i)
    for (int l = 0; l < r; ++l)
      if (f2.eps[i] != f1.eps[l]) resid = std::max(resid, std::abs(rep.K(i, l)));
  rep.block_orthogonality_residual = resid;

  double prof = 0.0;
  for (std::size_t k = 0; k < p1.ts.size(); ++k) {
    const double t = p1.ts[k];
    const Mat want = rep.K * p1.samples[k] * rep.K.transpose();
    prof = std::max(prof, (p2.at(t) - want).cwiseAbs().maxCoeff());
  }
  rep.profile_residual = prof;
  return rep;
}

// Product with a flat line: same components plus one new flat coordinate
// appended at the end.  Existing component expressions keep their variable
// indices, so they are reused as-is.
inline MetricSpec lift_product(const MetricSpec& m) {
  const int n = m.dim();
  const int N = n + 1;
  std::vector<Expr> comps(N * (N + 1) / 2, Expr::constant(0.0));
  auto tri = [N](int i, int j) { return i * N - i * (i - 1) / 2 + (j - i); };
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) comps[tri(i, j)] = m.comp(i, j);
  comps[tri(n, n)] = Expr::constant(1.0);
  Vec base(N);
  base.head(n) = m.base_point();
  base(n) = 0.0;
  return MetricSpec(N, comps, base, m.id() + "-x-line");
}

}  // namespace pwlab
