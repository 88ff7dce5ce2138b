#pragma once
// Rosen form to Brinkmann form.
//
// A wave in Rosen coordinates, 2 du dv + G_ij(u) dy^i dy^j with G(u) positive
// definite, converts to Brinkmann form by propagating a matrix F(u) with
//     F' = M F,   M = -(1/2) G^{-1} G',
// which preserves F^T G F.  Starting from F(u0) = L^{-T} (G(u0) = L L^T) the
// columns of F stay G-orthonormal, and the Brinkmann profile is
//     A = -( F'^T G' F + F''^T G F ),   F'' = (M' + M^2) F,
//     M' = (1/2) G^{-1} G' G^{-1} G' - (1/2) G^{-1} G''.
// A is symmetric up to integration error.  S = F'^T G F stays symmetric along
// exact solutions; its worst asymmetry is reported as a health monitor.

#include "pwlab/limit.hpp"
#include "pwlab/ode.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace pwlab {

struct RosenConversion {
  int r = 0;
  WaveProfile profile;            // eps all +1
  Mat F0;                         // initial frame matrix actually used
  double symmetry_monitor = 0.0;  // max |S - S^T|_inf over the grid
  double orthonormality_drift = 0.0;  // max |F^T G F - I|_inf over the grid
};

namespace detail {

// Evaluate G, G', G'' at u from upper-triangle expressions in one variable.
inline void rosen_g_jets(const std::vector<Expr>& upper, int r, double u, Mat& G, Mat& dG,
                         Mat& ddG) {
  G.resize(r, r);
  dG.resize(r, r);
  ddG.resize(r, r);
  Vec x(1);
  x(0) = u;
  int idx = 0;
  for (int i = 0; i < r; ++i)
    for (int j = i; j < r; ++j, ++idx) {
      const Jet2 jet = eval_jet(upper[idx], x);
      G(i, j) = G(j, i) = jet.val;
      dG(i, j) = dG(j, i) = jet.grad(0);
      ddG(i, j) = ddG(j, i) = jet.hess(0, 0);
    }
}

}  // namespace detail

inline RosenConversion rosen_to_brinkmann(const std::vector<Expr>& G_upper, int r, double a,
                                          double b, const OdeOptions& opt = {}) {
  if (r < 1) throw ConfigError("Rosen block needs rank >= 1");
  if (static_cast<int>(G_upper.size()) != r * (r + 1) / 2)
    throw ConfigError("expected " + std::to_string(r * (r + 1) / 2) +
                      " upper-triangle entries for the Rosen block");
  if (!(a < b)) throw ConfigError("invalid parameter span");

  Mat G, dG, ddG;
  detail::rosen_g_jets(G_upper, r, a, G, dG, ddG);
  Eigen::LLT<Mat> llt(G);
  if (llt.info() != Eigen::Success)
    throw NumericalError("Rosen block is not positive definite at the start of the span");
  const Mat L = llt.matrixL();
  const Mat F0 = L.transpose().inverse();

  auto rhs = [&G_upper, r](double u, const Vec& y, Vec& dy) {
    Mat G, dG, ddG;
    detail::rosen_g_jets(G_upper, r, u, G, dG, ddG);
    Eigen::LLT<Mat> llt(G);
    if (llt.info() != Eigen::Success)
      throw NumericalError("Rosen block loses positive definiteness at u=" + std::to_string(u));
    const Mat F = Eigen::Map<const Mat>(y.data(), r, r);
    const Mat M = -0.5 * llt.solve(dG);
    const Mat dF = M * F;
    dy.resize(r * r);
    Eigen::Map<Mat>(dy.data(), r, r) = dF;
  };

  Vec y0(r * r);
  Eigen::Map<Mat>(y0.data(), r, r) = F0;
  const OdeSolution sol = integrate_ode(rhs, a, y0, b, opt);
  if (sol.status != OdeStatus::ok)
    throw NumericalError("Rosen frame propagation blew up at u=" +
                         std::to_string(sol.blowup_time) +
                         " (coordinate singularity of the Rosen chart)");

  const int N = profile_grid_size(b - a);
  std::vector<double> ts(N);
  std::vector<Mat> samples(N);
  double asym = 0.0, orth = 0.0;
  for (int k = 0; k < N; ++k) {
    const double u = a + (b - a) * k / (N - 1);
    ts[k] = u;
    detail::rosen_g_jets(G_upper, r, u, G, dG, ddG);
    Eigen::LLT<Mat> llt2(G);
    if (llt2.info() != Eigen::Success)
      throw NumericalError("Rosen block loses positive definiteness at u=" + std::to_string(u));
    const Vec yk = sol.eval(u);
    const Mat F = Eigen::Map<const Mat>(yk.data(), r, r);
    const Mat Ginv_dG = llt2.solve(dG);
    const Mat M = -0.5 * Ginv_dG;
    const Mat Mp = 0.5 * Ginv_dG * Ginv_dG - 0.5 * llt2.solve(ddG);
    const Mat Fp = M * F;
    const Mat Fpp = (Mp + M * M) * F;
    samples[k] = -(Fp.transpose() * dG * F + Fpp.transpose() * G * F);
    const Mat S = Fp.transpose() * G * F;
    asym = std::max(asym, (S - S.transpose()).cwiseAbs().maxCoeff());
    orth = std::max(orth, (F.transpose() * G * F - Mat::Identity(r, r)).cwiseAbs().maxCoeff());
  }

  RosenConversion out;
  out.r = r;
  out.F0 = F0;
  out.profile = detail::tabulate_profile(ts, samples, std::vector<double>(r, 1.0));
  out.symmetry_monitor = asym;
  out.orthonormality_drift = orth;
  return out;
}

}  // namespace pwlab
