#pragma once
// Metric specifications and pointwise curvature.
//
// Conventions (fixed throughout the library):
//   Gamma^k_ij = (1/2) g^kl (d_i g_jl + d_j g_il - d_l g_ij)
//   R(X,Y)Z    = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z
//   Rm(a,b,c,d) = g(R(d_a,d_b) d_c, d_d)      (lowered on the last slot)
//   Ric_bc     = g^ad Rm_abcd,   scal = g^bc Ric_bc
// With these signs the unit round 2-sphere has Rm(th,ph,ph,th) = sin^2(th),
// Ric = g, scal = 2.

#include "pwlab/common.hpp"
#include "pwlab/expr.hpp"

#include <string>
#include <utility>
#include <vector>

namespace pwlab {

// A semi-Riemannian metric given by expression components on a coordinate patch.
// Components are stored for the upper triangle (i <= j); the matrix is symmetric
// by construction.  Coordinates are x1..xn in expression text, 0-based in code.
class MetricSpec {
 public:
  MetricSpec() = default;

  MetricSpec(int n, std::vector<Expr> upper_triangle, Vec base_point, std::string id = "metric")
      : n_(n), comps_(std::move(upper_triangle)), base_(std::move(base_point)), id_(std::move(id)) {
    if (n_ < 2) throw ConfigError("metric dimension must be >= 2");
    if (static_cast<int>(comps_.size()) != n_ * (n_ + 1) / 2)
      throw ConfigError("expected " + std::to_string(n_ * (n_ + 1) / 2) +
                        " upper-triangle components, got " + std::to_string(comps_.size()));
    if (base_.size() != n_) throw ConfigError("base point dimension mismatch");
    for (const Expr& e : comps_)
      if (e.empty()) throw ConfigError("empty metric component");
    nu_ = -1;  // computed lazily by index(); construction must not throw on
               // points where the caller never evaluates
  }

  int dim() const { return n_; }
  const Vec& base_point() const { return base_; }
  const std::string& id() const { return id_; }
  void set_id(std::string id) { id_ = std::move(id); }

  // Number of negative eigenvalues of g at the base point.
  int index() const;

  const Expr& comp(int i, int j) const {
    if (i > j) std::swap(i, j);
    return comps_[tri_index(i, j)];
  }

  Mat g_at(const Vec& x) const {
    Mat G(n_, n_);
    for (int i = 0; i < n_; ++i)
      for (int j = i; j < n_; ++j) G(i, j) = G(j, i) = eval(comp(i, j), x);
    return G;
  }

  // Values, first, and second derivatives of every component at x.
  //   dG(k,i,j)    = d_k g_ij
  //   d2G(k,l,i,j) = d_k d_l g_ij
  // Symmetric slots share one evaluation, so g_ij == g_ji holds exactly.
  void jets_at(const Vec& x, Mat& G, Tensor3& dG, Tensor4& d2G) const {
    G.resize(n_, n_);
    dG = Tensor3(n_);
    d2G = Tensor4(n_);
    for (int i = 0; i < n_; ++i)
      for (int j = i; j < n_; ++j) {
        const Jet2 jet = eval_jet(comp(i, j), x);
        G(i, j) = G(j, i) = jet.val;
        for (int k = 0; k < n_; ++k) {
          dG(k, i, j) = jet.grad(k);
          dG(k, j, i) = jet.grad(k);
          for (int l = 0; l < n_; ++l) {
            d2G(k, l, i, j) = jet.hess(k, l);
            d2G(k, l, j, i) = jet.hess(k, l);
          }
        }
      }
  }

 private:
  int tri_index(int i, int j) const { return i * n_ - i * (i - 1) / 2 + (j - i); }

  int n_ = 0;
  std::vector<Expr> comps_;
  Vec base_;
  mutable int nu_ = -1;
  std::string id_;
};

// Metric index and full eigenvalue spectrum at x.  An eigenvalue within
// degeneracy_tol of zero makes the signature ill-defined and throws.
inline std::pair<int, Vec> signature_at(const MetricSpec& m, const Vec& x,
                                        double degeneracy_tol = 1e-10) {
  const Mat G = m.g_at(x);
  Eigen::SelfAdjointEigenSolver<Mat> es(G);
  if (es.info() != Eigen::Success) throw NumericalError("eigensolver failed on metric");
  const Vec ev = es.eigenvalues();
  int nu = 0;
  for (int i = 0; i < ev.size(); ++i) {
    if (std::abs(ev(i)) <= degeneracy_tol)
      throw NumericalError("metric degenerate: eigenvalue " + std::to_string(i) + " is " +
                           std::to_string(ev(i)) + " (|.| <= " + std::to_string(degeneracy_tol) +
                           ")");
    if (ev(i) < 0.0) ++nu;
  }
  return {nu, ev};
}

inline int MetricSpec::index() const {
  if (nu_ < 0) nu_ = signature_at(*this, base_).first;
  return nu_;
}

// Christoffel symbols and their first derivatives at a point.
//   gamma(k,i,j)    = Gamma^k_ij           (symmetric in i,j exactly)
//   dgamma(a,k,i,j) = d_a Gamma^k_ij
struct ChristoffelPoint {
  Mat g, g_inv;
  Tensor3 gamma;
  Tensor4 dgamma;
};

namespace detail {

inline void check_conditioning(const Mat& G, const Vec& x) {
  Eigen::SelfAdjointEigenSolver<Mat> es(G);
  const Vec ev = es.eigenvalues().cwiseAbs();
  const double lo = ev.minCoeff(), hi = ev.maxCoeff();
  if (lo == 0.0 || hi / lo > 1e12) {
    std::string pt = "(";
    for (int i = 0; i < x.size(); ++i) pt += (i ? "," : "") + std::to_string(x(i));
    pt += ")";
    throw NumericalError("metric ill-conditioned at " + pt + ": |eigenvalue| range [" +
                         std::to_string(lo) + ", " + std::to_string(hi) +
                         "] exceeds condition limit 1e12");
  }
}

inline ChristoffelPoint christoffel_impl(const MetricSpec& m, const Vec& x,
                                         bool with_derivatives) {
  const int n = m.dim();
  Mat G;
  Tensor3 dG;
  Tensor4 d2G;
  m.jets_at(x, G, dG, d2G);
  check_conditioning(G, x);

  ChristoffelPoint cp;
  cp.g = G;
  cp.g_inv = G.inverse();
  cp.gamma = Tensor3(n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double s = 0.0;
        for (int l = 0; l < n; ++l)
          s += cp.g_inv(k, l) * (dG(i, j, l) + dG(j, i, l) - dG(l, i, j));
        cp.gamma(k, i, j) = 0.5 * s;
        cp.gamma(k, j, i) = cp.gamma(k, i, j);
      }

  if (with_derivatives) {
    // d_a g^kl = -g^km (d_a g_mn) g^nl
    std::vector<Mat> dGinv(n);
    for (int a = 0; a < n; ++a) {
      Mat dGa(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) dGa(i, j) = dG(a, i, j);
      dGinv[a] = -cp.g_inv * dGa * cp.g_inv;
    }
    cp.dgamma = Tensor4(n);
    for (int a = 0; a < n; ++a)
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j)
          for (int k = 0; k < n; ++k) {
            double s = 0.0;
            for (int l = 0; l < n; ++l) {
              s += dGinv[a](k, l) * (dG(i, j, l) + dG(j, i, l) - dG(l, i, j));
              s += cp.g_inv(k, l) * (d2G(a, i, j, l) + d2G(a, j, i, l) - d2G(a, l, i, j));
            }
            cp.dgamma(a, k, i, j) = 0.5 * s;
            cp.dgamma(a, k, j, i) = cp.dgamma(a, k, i, j);
          }
  }
  return cp;
}

}  // namespace detail

inline ChristoffelPoint christoffel_at(const MetricSpec& m, const Vec& x) {
  return detail::christoffel_impl(m, x, true);
}

// Pointwise curvature data.  rm is the fully lowered tensor in the slot
// convention documented at the top of this header.
struct CurvaturePoint {
  Mat g, g_inv;
  Tensor3 gamma;
  Tensor4 rm;
  Mat ric;
  double scal = 0.0;
};

inline CurvaturePoint curvature_at(const MetricSpec& m, const Vec& x) {
  const int n = m.dim();
  const ChristoffelPoint ch = detail::christoffel_impl(m, x, true);

  CurvaturePoint cp;
  cp.g = ch.g;
  cp.g_inv = ch.g_inv;
  cp.gamma = ch.gamma;

  // R^l_abc = d_a Gamma^l_bc - d_b Gamma^l_ac + Gamma^l_am Gamma^m_bc - Gamma^l_bm Gamma^m_ac
  Tensor4 rup(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < a; ++b)  // antisymmetric in (a,b); fill b<a and mirror
      for (int c = 0; c < n; ++c)
        for (int l = 0; l < n; ++l) {
          double s = ch.dgamma(a, l, b, c) - ch.dgamma(b, l, a, c);
          for (int mu = 0; mu < n; ++mu)
            s += ch.gamma(l, a, mu) * ch.gamma(mu, b, c) -
                 ch.gamma(l, b, mu) * ch.gamma(mu, a, c);
          rup(a, b, c, l) = s;     // note: (a,b,c;l) layout, l = upper index
        }

  cp.rm = Tensor4(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < a; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          double s = 0.0;
          for (int l = 0; l < n; ++l) s += rup(a, b, c, l) * ch.g(l, d);
          cp.rm(a, b, c, d) = s;
          cp.rm(b, a, c, d) = -s;
        }

  cp.ric = Mat::Zero(n, n);
  for (int b = 0; b < n; ++b)
    for (int c = 0; c < n; ++c) {
      double s = 0.0;
      for (int a = 0; a < n; ++a)
        for (int d = 0; d < n; ++d) s += ch.g_inv(a, d) * cp.rm(a, b, c, d);
      cp.ric(b, c) = s;
    }

  cp.scal = 0.0;
  for (int b = 0; b < n; ++b)
    for (int c = 0; c < n; ++c) cp.scal += ch.g_inv(b, c) * cp.ric(b, c);
  return cp;
}

// Ric(u, v) at a precomputed curvature point.
inline double ricci_contract(const CurvaturePoint& cp, const Vec& u, const Vec& v) {
  return u.dot(cp.ric * v);
}

// Fully lowered Weyl tensor in the library's slot convention.  Identically zero
// in dimension 3; requires dim >= 3.
inline Tensor4 weyl_tensor(const CurvaturePoint& cp) {
  const int n = static_cast<int>(cp.g.rows());
  if (n < 3) throw NumericalError("Weyl tensor needs dimension >= 3");
  const double c1 = 1.0 / (n - 2);
  const double c2 = cp.scal / ((n - 1.0) * (n - 2.0));
  Tensor4 W(n);
  const Mat& g = cp.g;
  const Mat& ric = cp.ric;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d)
          W(a, b, c, d) = cp.rm(a, b, c, d) -
                          c1 * (g(a, d) * ric(b, c) - g(a, c) * ric(b, d) +
                                g(b, c) * ric(a, d) - g(b, d) * ric(a, c)) +
                          c2 * (g(a, d) * g(b, c) - g(a, c) * g(b, d));
  return W;
}

// Contraction Rm(u, v, v, w) -> bilinear slot matrix T_ad = Rm(d_a, v, v, d_d),
// used by profile extraction: A_ij pairs contract T with frame vectors.
inline Mat rm_vv_slots(const CurvaturePoint& cp, const Vec& v) {
  const int n = static_cast<int>(cp.g.rows());
  Mat T = Mat::Zero(n, n);
  for (int a = 0; a < n; ++a)
    for (int d = 0; d < n; ++d) {
      double s = 0.0;
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c) s += cp.rm(a, b, c, d) * v(b) * v(c);
      T(a, d) = s;
    }
  return T;
}

}  // namespace pwlab
