#pragma once
// Adaptive Dormand-Prince 5(4) integrator with cubic Hermite dense output.
//
// The solver stores every accepted step (t, y, y') and interpolates between
// knots; callers sample trajectories at arbitrary parameters without
// re-integrating.  Integration runs forward or backward depending on the span,
// and two_sided() stitches both directions around an interior initial time.
// Solutions that exceed the blow-up threshold stop early with status::blowup;
// step-size underflow (no progress possible within tolerances) throws.  With
// stop_on_rhs_failure set, a right-hand side that throws NumericalError mid
// trajectory ends the leg with status::blowup instead of propagating, so
// callers that treat early escape as data (geodesics leaving a chart) see it
// the same way as a threshold crossing.

#include "pwlab/common.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace pwlab {

using OdeRhs = std::function<void(double, const Vec&, Vec&)>;

struct OdeOptions {
  double rtol = 1e-10;
  double atol = 1e-10;
  double h_max = 0.0;     // 0: clamp(|span|/500, 1e-3, 0.05)
  double blowup = 1e8;    // sup-norm threshold for declaring finite-time escape
  long max_steps = 4000000;
  bool stop_on_rhs_failure = false;  // NumericalError from the RHS: stop, don't throw
};

enum class OdeStatus { ok, blowup };

struct OdeSolution {
  std::vector<double> ts;  // accepted knots, monotone in integration direction
  std::vector<Vec> ys;
  std::vector<Vec> fs;
  OdeStatus status = OdeStatus::ok;
  double blowup_time = 0.0;  // meaningful when status == blowup

  double t_begin() const { return ts.front(); }
  double t_end() const { return ts.back(); }

  // Interpolated state.  t is clamped to the covered span (tiny overshoots from
  // roundoff in caller-generated grids are absorbed).
  Vec eval(double t) const { return hermite(t, false); }
  // Derivative of the interpolant.
  Vec deriv(double t) const { return hermite(t, true); }

 private:
  Vec hermite(double t, bool want_deriv) const {
    const std::size_t m = ts.size();
    if (m == 1) return want_deriv ? fs[0] : ys[0];
    const bool fwd = ts.back() >= ts.front();
    const double lo = fwd ? ts.front() : ts.back();
    const double hi = fwd ? ts.back() : ts.front();
    t = std::min(std::max(t, lo), hi);
    // locate segment
    std::size_t i;
    if (fwd) {
      i = static_cast<std::size_t>(std::upper_bound(ts.begin(), ts.end(), t) - ts.begin());
    } else {
      i = static_cast<std::size_t>(
          std::upper_bound(ts.begin(), ts.end(), t, std::greater<double>()) - ts.begin());
    }
    if (i == 0) i = 1;
    if (i >= m) i = m - 1;
    const double dt = ts[i] - ts[i - 1];
    const double s = (t - ts[i - 1]) / dt;
    const Vec& y0 = ys[i - 1];
    const Vec& y1 = ys[i];
    const Vec& f0 = fs[i - 1];
    const Vec& f1 = fs[i];
    if (!want_deriv) {
      const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
      const double h10 = s * (1 - s) * (1 - s);
      const double h01 = s * s * (3 - 2 * s);
      const double h11 = s * s * (s - 1);
      return h00 * y0 + (h10 * dt) * f0 + h01 * y1 + (h11 * dt) * f1;
    }
    const double d00 = 6 * s * (s - 1) / dt;
    const double d10 = 3 * s * s - 4 * s + 1;
    const double d01 = -d00;
    const double d11 = 3 * s * s - 2 * s;
    return d00 * y0 + d10 * f0 + d01 * y1 + d11 * f1;
  }
};

namespace detail {

// Dormand-Prince coefficients (FSAL pair).
struct Dopri {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                          e4 = 125.0 / 192 - 393.0 / 640,
                          e5 = -2187.0 / 6784 + 92097.0 / 339200, e6 = 11.0 / 84 - 187.0 / 2100,
                          e7 = -1.0 / 40;
};

}  // namespace detail

inline OdeSolution integrate_ode(const OdeRhs& f, double t0, const Vec& y0, double t1,
                                 const OdeOptions& opt = {}) {
  using D = detail::Dopri;
  const int n = static_cast<int>(y0.size());
  const double span = t1 - t0;
  if (span == 0.0) {
    OdeSolution sol;
    Vec f0(n);
    f(t0, y0, f0);
    sol.ts = {t0};
    sol.ys = {y0};
    sol.fs = {f0};
    return sol;
  }
  const double dir = span > 0 ? 1.0 : -1.0;
  const double hmax = opt.h_max > 0 ? opt.h_max
                                    : std::min(0.05, std::max(1e-3, std::abs(span) / 500.0));

  OdeSolution sol;
  sol.ts.reserve(1024);
  sol.ys.reserve(1024);
  sol.fs.reserve(1024);

  double t = t0;
  Vec y = y0;
  Vec k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n), err(n);
  f(t, y, k1);
  if (!k1.allFinite()) throw NumericalError("ODE right-hand side not finite at initial point");
  sol.ts.push_back(t);
  sol.ys.push_back(y);
  sol.fs.push_back(k1);

  double h = dir * std::min(hmax, std::max(1e-8, 1e-3 * std::abs(span)));
  bool last_rejected = false;
  long steps = 0;

  while (dir * (t1 - t) > 0.0) {
    if (++steps > opt.max_steps) throw NumericalError("ODE step limit exceeded");
    if (dir * (t + h - t1) > 0.0) h = t1 - t;
    if (std::abs(h) < 1e-14 * std::max(1.0, std::abs(t))) {
      if (opt.stop_on_rhs_failure) {
        // cannot advance past t within tolerances: report where the leg ends
        sol.status = OdeStatus::blowup;
        sol.blowup_time = t;
        return sol;
      }
      throw NumericalError("ODE step size underflow at t=" + std::to_string(t));
    }

    try {
      ytmp = y + h * (D::a21 * k1);
      f(t + D::c2 * h, ytmp, k2);
      ytmp = y + h * (D::a31 * k1 + D::a32 * k2);
      f(t + D::c3 * h, ytmp, k3);
      ytmp = y + h * (D::a41 * k1 + D::a42 * k2 + D::a43 * k3);
      f(t + D::c4 * h, ytmp, k4);
      ytmp = y + h * (D::a51 * k1 + D::a52 * k2 + D::a53 * k3 + D::a54 * k4);
      f(t + D::c5 * h, ytmp, k5);
      ytmp = y + h * (D::a61 * k1 + D::a62 * k2 + D::a63 * k3 + D::a64 * k4 + D::a65 * k5);
      f(t + h, ytmp, k6);
      ynew = y + h * (D::b1 * k1 + D::b3 * k3 + D::b4 * k4 + D::b5 * k5 + D::b6 * k6);
      f(t + h, ynew, k7);
    } catch (const NumericalError&) {
      if (!opt.stop_on_rhs_failure) throw;
      // a stage left the region where the RHS is defined: back off
      h *= 0.2;
      last_rejected = true;
      continue;
    }
    err = h * (D::e1 * k1 + D::e3 * k3 + D::e4 * k4 + D::e5 * k5 + D::e6 * k6 + D::e7 * k7);

    double errnorm = 0.0;
    bool finite = ynew.allFinite() && k7.allFinite();
    if (finite) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) {
        const double sc = opt.atol + opt.rtol * std::max(std::abs(y(i)), std::abs(ynew(i)));
        const double q = err(i) / sc;
        acc += q * q;
      }
      errnorm = std::sqrt(acc / n);
    }

    if (!finite || !(errnorm <= 1.0)) {
      // rejected: shrink and retry
      const double fac = finite ? std::max(0.2, 0.9 * std::pow(errnorm, -0.2)) : 0.2;
      h *= std::min(fac, 0.9);
      last_rejected = true;
      continue;
    }

    t += h;
    y.swap(ynew);
    k1.swap(k7);  // FSAL
    sol.ts.push_back(t);
    sol.ys.push_back(y);
    sol.fs.push_back(k1);

    if (y.cwiseAbs().maxCoeff() > opt.blowup) {
      sol.status = OdeStatus::blowup;
      sol.blowup_time = t;
      return sol;
    }

    double fac = 0.9 * std::pow(std::max(errnorm, 1e-12), -0.2);
    fac = std::min(fac, last_rejected ? 1.0 : 5.0);
    fac = std::max(fac, 0.2);
    h *= fac;
    if (std::abs(h) > hmax) h = dir * hmax;
    last_rejected = false;
  }
  return sol;
}

// Integrate over [a, b] with the initial condition at an interior (or end)
// point t0.  The result has knots sorted increasing.  If either directed leg
// blows up, the merged solution carries that status and covers what was
// reached.
inline OdeSolution integrate_two_sided(const OdeRhs& f, double t0, const Vec& y0, double a,
                                       double b, const OdeOptions& opt = {}) {
  if (!(a <= t0 && t0 <= b)) throw ConfigError("initial parameter must lie inside the span");
  if (a == b) return integrate_ode(f, t0, y0, t0, opt);
  OdeSolution merged;
  if (t0 > a) {
    OdeSolution back = integrate_ode(f, t0, y0, a, opt);
    const std::size_t m = back.ts.size();
    merged.ts.reserve(m);
    for (std::size_t i = m; i-- > 0;) {
      merged.ts.push_back(back.ts[i]);
      merged.ys.push_back(std::move(back.ys[i]));
      merged.fs.push_back(std::move(back.fs[i]));
    }
    if (back.status == OdeStatus::blowup) {
      merged.status = OdeStatus::blowup;
      merged.blowup_time = back.blowup_time;
    }
  }
  if (t0 < b) {
    OdeSolution fwd = integrate_ode(f, t0, y0, b, opt);
    if (merged.ts.empty()) {
      merged.ts.push_back(fwd.ts.front());
      merged.ys.push_back(std::move(fwd.ys.front()));
      merged.fs.push_back(std::move(fwd.fs.front()));
    }
    for (std::size_t i = 1; i < fwd.ts.size(); ++i) {
      merged.ts.push_back(fwd.ts[i]);
      merged.ys.push_back(std::move(fwd.ys[i]));
      merged.fs.push_back(std::move(fwd.fs[i]));
    }
    if (fwd.status == OdeStatus::blowup) {
      merged.status = OdeStatus::blowup;
      merged.blowup_time = fwd.blowup_time;
    }
  }
  return merged;
}

}  // namespace pwlab
