#pragma once
// Geodesics, causal classification, orthonormal normal frames, and parallel
// transport.
//
// Frames normal to a geodesic:
//   - spacelike/timelike velocity: the full g-orthogonal complement, r = n-1
//   - lightlike velocity: a null partner W with g(W,W)=0, g(W,v)!=0 is split
//     off and the frame spans the screen {v, W}^perp, r = n-2
// Members satisfy g(E_i, E_j) = eps_i delta_ij with eps_i = +-1, timelike
// members ordered first, signs fixed deterministically.
//
// Parallel transport integrates the frame jointly with the base geodesic in
// one augmented system, so frame samples and geodesic samples come from the
// same dense output and cannot drift apart.

#include "pwlab/geometry.hpp"
#include "pwlab/ode.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace pwlab {

enum class CausalCharacter { spacelike, timelike, lightlike };

inline const char* to_string(CausalCharacter c) {
  switch (c) {
    case CausalCharacter::spacelike: return "spacelike";
    case CausalCharacter::timelike: return "timelike";
    default: return "lightlike";
  }
}

inline CausalCharacter classify_causal(double q, double tol = 1e-9) {
  if (std::abs(q) <= tol) return CausalCharacter::lightlike;
  return q < 0.0 ? CausalCharacter::timelike : CausalCharacter::spacelike;
}

struct GeodesicRecord {
  MetricSpec metric;
  double a = 0.0, b = 0.0, t0 = 0.0;
  Vec x0, v0;
  double g_vv = 0.0;  // g(v, v) at the initial point, conserved along the flow
  CausalCharacter character = CausalCharacter::spacelike;
  OdeSolution sol;  // state (x, v), knots sorted increasing
  bool incomplete = false;
  double escape_time = 0.0;   // where the state escaped, when incomplete
  double energy_drift = 0.0;  // max relative drift of g(v,v) over accepted knots

  Vec position(double t) const { return sol.eval(t).head(x0.size()); }
  Vec velocity(double t) const { return sol.eval(t).tail(x0.size()); }
};

namespace detail {

inline void geodesic_rhs(const MetricSpec& m, const Vec& y, Vec& dy, int n) {
  const Vec x = y.head(n);
  const auto v = y.segment(n, n);
  const Tensor3 gamma = christoffel_impl(m, x, false).gamma;
  dy.resize(2 * n);
  dy.head(n) = v;
  for (int k = 0; k < n; ++k) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) acc += gamma(k, i, j) * v(i) * v(j);
    dy(n + k) = -acc;
  }
}

}  // namespace detail

inline GeodesicRecord integrate_geodesic(const MetricSpec& m, const Vec& x0, const Vec& v0,
                                         double a, double b, double t0,
                                         const OdeOptions& opt = {}) {
  const int n = m.dim();
  if (x0.size() != n || v0.size() != n) throw ConfigError("initial data dimension mismatch");
  if (v0.cwiseAbs().maxCoeff() < 1e-12) throw ConfigError("initial velocity is zero");
  if (!(a <= t0 && t0 <= b)) throw ConfigError("initial parameter outside span");

  GeodesicRecord rec;
  rec.metric = m;
  rec.a = a;
  rec.b = b;
  rec.t0 = t0;
  rec.x0 = x0;
  rec.v0 = v0;
  rec.g_vv = v0.dot(m.g_at(x0) * v0);
  rec.character = classify_causal(rec.g_vv);

  OdeRhs rhs = [&m, n](double, const Vec& y, Vec& dy) { detail::geodesic_rhs(m, y, dy, n); };
  Vec y0(2 * n);
  y0 << x0, v0;
  // a trajectory that runs off the chart (metric evaluation fails) is data,
  // not an error: record how far it got
  OdeOptions gopt = opt;
  gopt.stop_on_rhs_failure = true;
  rec.sol = integrate_two_sided(rhs, t0, y0, a, b, gopt);
  rec.incomplete = rec.sol.status == OdeStatus::blowup;
  rec.escape_time = rec.sol.blowup_time;

  double drift = 0.0;
  for (std::size_t i = 0; i < rec.sol.ts.size(); ++i) {
    const Vec x = rec.sol.ys[i].head(n);
    const Vec v = rec.sol.ys[i].tail(n);
    drift = std::max(drift, std::abs(v.dot(m.g_at(x) * v) - rec.g_vv));
  }
  rec.energy_drift = drift / std::max(1.0, std::abs(rec.g_vv));
  return rec;
}

// Orthonormal frame normal to a velocity vector at a single point.
struct NormalFrame {
  std::vector<Vec> E;
  std::vector<double> eps;
  Vec null_partner;  // size 0 unless the velocity is lightlike
  int rank() const { return static_cast<int>(E.size()); }
};

inline NormalFrame initial_normal_frame(const MetricSpec& m, const Vec& x0, const Vec& v0) {
  const int n = m.dim();
  if (x0.size() != n || v0.size() != n) throw ConfigError("initial data dimension mismatch");
  const Mat G = m.g_at(x0);
  auto ip = [&G](const Vec& u, const Vec& w) { return u.dot(G * w); };
  const double q0 = ip(v0, v0);
  const CausalCharacter ch = classify_causal(q0);

  std::vector<Vec> pool;
  int r = 0;
  NormalFrame fr;

  if (ch != CausalCharacter::lightlike) {
    r = n - 1;
    for (int k = 0; k < n; ++k) {
      Vec c = Vec::Zero(n);
      c(k) = 1.0;
      c -= (ip(c, v0) / q0) * v0;
      pool.push_back(c);
    }
  } else {
    r = n - 2;
    int kbest = -1;
    double best = 0.0;
    for (int k = 0; k < n; ++k) {
      Vec e = Vec::Zero(n);
      e(k) = 1.0;
      const double p = std::abs(ip(e, v0));
      if (p > best) {
        best = p;
        kbest = k;
      }
    }
    if (kbest < 0 || best < 1e-9)
      throw NumericalError("cannot build null partner: velocity pairs to zero with every "
                           "coordinate direction");
    Vec e = Vec::Zero(n);
    e(kbest) = 1.0;
    Vec w = e - (ip(e, e) / (2.0 * ip(e, v0))) * v0;
    fr.null_partner = w;
    const double wv = ip(w, v0);
    for (int k = 0; k < n; ++k) {
      Vec c = Vec::Zero(n);
      c(k) = 1.0;
      const double beta = ip(c, v0) / wv;
      const double alpha = ip(c, w) / wv;
      c -= alpha * v0 + beta * w;
      pool.push_back(c);
    }
  }

  // extend the pool with pairwise sums/differences: a spanning set can still
  // present only null pivots one at a time
  const std::size_t base = pool.size();
  for (std::size_t i = 0; i < base; ++i)
    for (std::size_t j = i + 1; j < base; ++j) {
      pool.push_back(pool[i] + pool[j]);
      pool.push_back(pool[i] - pool[j]);
    }

  for (const Vec& cand : pool) {
    if (fr.rank() == r) break;
    Vec c = cand;
    for (int j = 0; j < fr.rank(); ++j) c -= fr.eps[j] * ip(c, fr.E[j]) * fr.E[j];
    const double q = ip(c, c);
    if (std::abs(q) < 1e-9 * std::max(1.0, c.squaredNorm())) continue;
    fr.E.push_back(c / std::sqrt(std::abs(q)));
    fr.eps.push_back(q > 0 ? 1.0 : -1.0);
  }
  if (fr.rank() < r)
    throw NumericalError("frame construction failed: no usable pivot among " +
                         std::to_string(pool.size()) + " candidates");

  // timelike members first, then deterministic sign
  std::vector<int> order(r);
  for (int i = 0; i < r; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&fr](int i, int j) { return fr.eps[i] < fr.eps[j]; });
  NormalFrame out;
  out.null_partner = fr.null_partner;
  for (int i : order) {
    Vec e = fr.E[i];
    int imax = 0;
    for (int k = 1; k < n; ++k)
      if (std::abs(e(k)) > std::abs(e(imax))) imax = k;
    if (e(imax) < 0) e = -e;
    out.E.push_back(e);
    out.eps.push_back(fr.eps[i]);
  }

  // sanity: negative-sign count must match the metric index
  const int nu = signature_at(m, x0).first;
  const int want_neg = (ch == CausalCharacter::spacelike) ? nu : nu - 1;
  int got_neg = 0;
  for (double e : out.eps)
    if (e < 0) ++got_neg;
  if (got_neg != want_neg)
    throw NumericalError("frame signature mismatch: expected " + std::to_string(want_neg) +
                         " timelike members, built " + std::to_string(got_neg));
  return out;
}

// A frame parallel-transported along a geodesic, sharing one dense output with
// the geodesic itself.  State layout: (x, v, E_1, ..., E_r), each block size n.
struct TransportedFrame {
  int n = 0, r = 0;
  std::vector<double> eps;
  Vec null_partner;  // at the initial point; transported on demand by callers
  OdeSolution joint;
  double gram_drift = 0.0;
  bool incomplete = false;
  double escape_time = 0.0;

  Vec x_at(double t) const { return joint.eval(t).head(n); }
  Vec v_at(double t) const { return joint.eval(t).segment(n, n); }
  Vec E_at(double t, int i) const { return joint.eval(t).segment(n * (2 + i), n); }
  Mat frame_at(double t) const {
    const Vec y = joint.eval(t);
    Mat F(n, r);
    for (int i = 0; i < r; ++i) F.col(i) = y.segment(n * (2 + i), n);
    return F;
  }
};

inline TransportedFrame transport_frame(const MetricSpec& m, const Vec& x0, const Vec& v0,
                                        const NormalFrame& fr, double a, double b, double t0,
                                        const OdeOptions& opt = {}) {
  const int n = m.dim();
  const int r = fr.rank();
  TransportedFrame tf;
  tf.n = n;
  tf.r = r;
  tf.eps = fr.eps;
  tf.null_partner = fr.null_partner;

  OdeRhs rhs = [&m, n, r](double, const Vec& y, Vec& dy) {
    const Vec x = y.head(n);
    const auto v = y.segment(n, n);
    const Tensor3 gamma = detail::christoffel_impl(m, x, false).gamma;
    dy.resize(n * (2 + r));
    dy.head(n) = v;
    for (int k = 0; k < n; ++k) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) acc += gamma(k, i, j) * v(i) * v(j);
      dy(n + k) = -acc;
    }
    for (int f = 0; f < r; ++f) {
      const auto E = y.segment(n * (2 + f), n);
      for (int k = 0; k < n; ++k) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) acc += gamma(k, i, j) * v(i) * E(j);
        dy(n * (2 + f) + k) = -acc;
      }
    }
  };

  Vec y0(n * (2 + r));
  y0.head(n) = x0;
  y0.segment(n, n) = v0;
  for (int i = 0; i < r; ++i) y0.segment(n * (2 + i), n) = fr.E[i];
  tf.joint = integrate_two_sided(rhs, t0, y0, a, b, opt);
  tf.incomplete = tf.joint.status == OdeStatus::blowup;
  tf.escape_time = tf.joint.blowup_time;

  // orthonormality is conserved exactly by parallel transport; measure the
  // numerical residue over the covered span
  const double lo = std::min(tf.joint.t_begin(), tf.joint.t_end());
  const double hi = std::max(tf.joint.t_begin(), tf.joint.t_end());
  const int samples = 201;
  double drift = 0.0;
  for (int s = 0; s < samples; ++s) {
    const double t = lo + (hi - lo) * s / (samples - 1);
    const Vec x = tf.x_at(t);
    const Mat G = m.g_at(x);
    const Mat F = tf.frame_at(t);
    const Mat gram = F.transpose() * G * F;
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j) {
        const double want = (i == j) ? fr.eps[i] : 0.0;
        drift = std::max(drift, std::abs(gram(i, j) - want));
      }
    const Vec gv = G * tf.v_at(t);
    for (int i = 0; i < r; ++i) drift = std::max(drift, std::abs(F.col(i).dot(gv)));
  }
  tf.gram_drift = drift;
  if (!tf.incomplete && drift > 1e-5)
    throw NumericalError("parallel transport lost orthonormality: Gram drift " +
                         std::to_string(drift));
  return tf;
}

}  // namespace pwlab
