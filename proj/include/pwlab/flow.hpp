#pragma once
// Shape operator of a geodesic congruence along one of its geodesics, and the
// Riccati comparison with the wave profile.
//
// For a vector field Z whose integral curves are geodesics containing the
// base geodesic (unit or affine speed matching the curve), set
//     (A_Z)_ij(t) = -g( nabla_{E_j} Z , E_i )
// in the transported frame.  Differentiating along the curve yields the
// Riccati relation  A + A_Z' - A_Z^2 = 0, whose residual is reported; it
// vanishes exactly when Z really is a geodesic spray around the curve.

#include "pwlab/limit.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace pwlab {

struct FlowProfileResult {
  WaveProfile shape;            // A_Z on the grid
  WaveProfile wave;             // A on the same grid
  double riccati_residual = 0.0;  // max_t |A + A_Z' - A_Z^2|_inf (interior knots)
  double alignment_residual = 0.0;  // max_t |Z(x(t)) - v(t)|_inf: Z must extend the velocity
};

inline FlowProfileResult flow_profile(const MetricSpec& m, const std::vector<Expr>& Z,
                                      const TransportedFrame& tf) {
  const int n = m.dim();
  if (static_cast<int>(Z.size()) != n)
    throw ConfigError("vector field needs " + std::to_string(n) + " components");
  for (const Expr& e : Z)
    if (e.empty()) throw ConfigError("empty vector field component");
  if (tf.incomplete)
    throw NumericalError("flow profile needs a complete geodesic; state escaped at t=" +
                         std::to_string(tf.escape_time));

  FlowProfileResult out;
  out.wave = wave_profile(m, tf);
  const int r = tf.r;
  const std::vector<double>& ts = out.wave.ts;
  std::vector<Mat> az(ts.size());
  double align = 0.0;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    const double t = ts[k];
    const Vec x = tf.x_at(t);
    const Vec v = tf.v_at(t);
    const Mat F = tf.frame_at(t);
    const ChristoffelPoint ch = christoffel_at(m, x);

    Vec zval(n);
    Mat dz(n, n);  // dz(a, k) = d_a Z^k
    for (int c = 0; c < n; ++c) {
      const Jet2 jet = eval_jet(Z[c], x);
      zval(c) = jet.val;
      for (int a = 0; a < n; ++a) dz(a, c) = jet.grad(a);
    }
    align = std::max(align, (zval - v).cwiseAbs().maxCoeff());

    // (nabla_E Z)^k = E^a ( d_a Z^k + Gamma^k_ab Z^b )
    Mat covd(n, n);  // covd(a, k) = (nabla_a Z)^k
    for (int a = 0; a < n; ++a)
      for (int kk = 0; kk < n; ++kk) {
        double s = dz(a, kk);
        for (int b = 0; b < n; ++b) s += ch.gamma(kk, a, b) * zval(b);
        covd(a, kk) = s;
      }

    Mat A(r, r);
    for (int j = 0; j < r; ++j) {
      Vec nz = Vec::Zero(n);
      for (int a = 0; a < n; ++a)
        for (int kk = 0; kk < n; ++kk) nz(kk) += F(a, j) * covd(a, kk);
      const Vec gnz = ch.g * nz;
      for (int i = 0; i < r; ++i) A(i, j) = -F.col(i).dot(gnz);
    }
    az[k] = A;
  }
  out.shape = detail::tabulate_profile(ts, az, tf.eps);
  out.alignment_residual = align;

  double res = 0.0;
  for (std::size_t k = 2; k + 2 < ts.size(); ++k) {
    const double t = ts[k];
    const Mat azk = out.shape.at(t);
    const Mat r1 = out.wave.at(t) + out.shape.dot_at(t) - azk * azk;
    res = std::max(res, r1.cwiseAbs().maxCoeff());
  }
  out.riccati_residual = res;
  return out;
}

}  // namespace pwlab
