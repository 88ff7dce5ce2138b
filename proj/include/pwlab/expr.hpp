#pragma once
// Scalar expression AST with exact first/second derivatives (truncated jets).
//
// Grammar (EBNF, also reproduced in the README):
//   expr   := term  (('+' | '-') term)*
//   term   := unary (('*' | '/') unary)*
//   unary  := '-' unary | power
//   power  := atom ('^' unary)?            right-associative; exponent must fold to a constant
//   atom   := number | func '(' expr ')' | 'x' digits | 'pi' | '(' expr ')'
//   func   := 'sin' | 'cos' | 'tan' | 'exp' | 'log' | 'sqrt'
// Precedence: '^'  >  unary '-'  >  '*' '/'  >  '+' '-'.  Angles are radians.
//
// Derivatives are propagated as second-order jets (value, gradient, symmetric
// Hessian); nothing above order two is ever formed.

#include "pwlab/common.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace pwlab {

// ---------------------------------------------------------------------------
// Jets

// Value, gradient, and symmetric Hessian of a scalar at a point of R^n.
struct Jet2 {
  double val = 0.0;
  Vec grad;
  Mat hess;

  static Jet2 constant(double c, int n) {
    Jet2 j;
    j.val = c;
    j.grad = Vec::Zero(n);
    j.hess = Mat::Zero(n, n);
    return j;
  }
  static Jet2 variable(int i, double x, int n) {
    Jet2 j = constant(x, n);
    j.grad(i) = 1.0;
    return j;
  }
};

// ---------------------------------------------------------------------------
// Sampled 1-D coefficient tables (cubic Hermite on a uniform grid)
//
// Assembled plane-wave metrics carry profile entries A_ij(t) that exist only as
// samples.  A CoeffTable is the interpolant; expressions may hold one as a leaf
// so that sampled coefficients flow through the same jet-based curvature path
// as closed-form components.  The parser never produces this node.

class CoeffTable {
 public:
  CoeffTable(double t0, double dt, std::vector<double> values, std::vector<double> slopes)
      : t0_(t0), dt_(dt), v_(std::move(values)), s_(std::move(slopes)) {
    if (v_.size() < 2 || v_.size() != s_.size() || dt_ <= 0.0)
      throw NumericalError("coefficient table needs >= 2 uniform samples");
  }

  // Knot slopes by 4th-order finite differences (asymmetric near the ends).
  static CoeffTable from_samples(double t0, double dt, const std::vector<double>& v) {
    const int n = static_cast<int>(v.size());
    if (n < 5) throw NumericalError("coefficient table needs >= 5 samples");
    std::vector<double> s(n);
    for (int i = 2; i + 2 < n; ++i)
      s[i] = (v[i - 2] - 8 * v[i - 1] + 8 * v[i + 1] - v[i + 2]) / (12 * dt);
    s[0] = (-25 * v[0] + 48 * v[1] - 36 * v[2] + 16 * v[3] - 3 * v[4]) / (12 * dt);
    s[1] = (-3 * v[0] - 10 * v[1] + 18 * v[2] - 6 * v[3] + v[4]) / (12 * dt);
    s[n - 2] =
        (3 * v[n - 1] + 10 * v[n - 2] - 18 * v[n - 3] + 6 * v[n - 4] - v[n - 5]) / (12 * dt);
    s[n - 1] =
        (25 * v[n - 1] - 48 * v[n - 2] + 36 * v[n - 3] - 16 * v[n - 4] + 3 * v[n - 5]) / (12 * dt);
    return CoeffTable(t0, dt, v, std::move(s));
  }

  double t_begin() const { return t0_; }
  double t_end() const { return t0_ + dt_ * (static_cast<double>(v_.size()) - 1); }

  // value, first, and second derivative of the interpolant at t.  Queries
  // outside [t_begin, t_end] extrapolate the boundary cubic.
  void eval(double t, double* p, double* dp, double* ddp) const {
    const int nseg = static_cast<int>(v_.size()) - 1;
    int k = static_cast<int>(std::floor((t - t0_) / dt_));
    if (k < 0) k = 0;
    if (k >= nseg) k = nseg - 1;
    const double u = (t - (t0_ + k * dt_)) / dt_;
    const double v0 = v_[k], v1 = v_[k + 1], s0 = s_[k], s1 = s_[k + 1];
    if (p) {
      const double h00 = (2 * u - 3) * u * u + 1, h10 = ((u - 2) * u + 1) * u;
      const double h01 = (3 - 2 * u) * u * u, h11 = (u - 1) * u * u;
      *p = h00 * v0 + h10 * dt_ * s0 + h01 * v1 + h11 * dt_ * s1;
    }
    if (dp) {
      const double d00 = 6 * u * (u - 1), d10 = (3 * u - 4) * u + 1;
      const double d01 = -6 * u * (u - 1), d11 = (3 * u - 2) * u;
      *dp = d00 * v0 / dt_ + d10 * s0 + d01 * v1 / dt_ + d11 * s1;
    }
    if (ddp) {
      const double e00 = 12 * u - 6, e10 = 6 * u - 4, e01 = 6 - 12 * u, e11 = 6 * u - 2;
      *ddp = e00 * v0 / (dt_ * dt_) + e10 * s0 / dt_ + e01 * v1 / (dt_ * dt_) + e11 * s1 / dt_;
    }
  }

 private:
  static double dir2(const std::vector<double>& v, double dt, int i) {
    // 4-point centered-ish derivative for the second and second-to-last knot.
    return (v[i + 1] - v[i - 1]) / (2 * dt) -
           (i + 2 < static_cast<int>(v.size()) && i - 2 >= 0
                ? (v[i + 2] - 2 * v[i + 1] + 2 * v[i - 1] - v[i - 2]) / (12 * dt)
                : 0.0);
  }
  double t0_, dt_;
  std::vector<double> v_, s_;
};

// ---------------------------------------------------------------------------
// AST

enum class ExprKind {
  Constant,
  Var,
  Neg,
  Sin,
  Cos,
  Tan,
  Exp,
  Log,
  Sqrt,
  Add,
  Sub,
  Mul,
  Div,
  Pow,
  Coeff,  // sampled 1-D coefficient leaf; programmatic only
};

class Expr;
namespace detail {
struct ExprNode {
  ExprKind kind;
  double cval = 0.0;                        // Constant value, or Pow exponent
  int var = -1;                             // Var / Coeff coordinate index (0-based)
  std::shared_ptr<const ExprNode> a, b;     // children
  std::shared_ptr<const CoeffTable> table;  // Coeff payload
  std::string label;                        // Coeff display tag
};
using NodePtr = std::shared_ptr<const ExprNode>;
}  // namespace detail

class Expr {
 public:
  Expr() = default;

  bool empty() const { return !n_; }
  ExprKind kind() const { return n_->kind; }
  double constant_value() const { return n_->cval; }
  int var_index() const { return n_->var; }
  const Expr child_a() const { return Expr(n_->a); }
  const Expr child_b() const { return Expr(n_->b); }

  static Expr constant(double c) {
    auto n = std::make_shared<detail::ExprNode>();
    n->kind = ExprKind::Constant;
    n->cval = c;
    return Expr(std::move(n));
  }
  // 0-based coordinate index; the textual form x1..xn maps to index 0..n-1.
  static Expr var(int index) {
    auto n = std::make_shared<detail::ExprNode>();
    n->kind = ExprKind::Var;
    n->var = index;
    return Expr(std::move(n));
  }
  static Expr coeff(std::shared_ptr<const CoeffTable> table, int var_index, std::string label) {
    auto n = std::make_shared<detail::ExprNode>();
    n->kind = ExprKind::Coeff;
    n->var = var_index;
    n->table = std::move(table);
    n->label = std::move(label);
    return Expr(std::move(n));
  }

  static Expr unary(ExprKind k, Expr e);
  static Expr binary(ExprKind k, Expr lhs, Expr rhs);
  static Expr pow(Expr base, double exponent);

  const detail::ExprNode* node() const { return n_.get(); }

 private:
  explicit Expr(detail::NodePtr n) : n_(std::move(n)) {}
  detail::NodePtr n_;
};

// ---------------------------------------------------------------------------
// Printing

namespace detail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline int precedence(ExprKind k) {
  switch (k) {
    case ExprKind::Add:
    case ExprKind::Sub:
      return 1;
    case ExprKind::Mul:
    case ExprKind::Div:
      return 2;
    case ExprKind::Neg:
      return 3;
    case ExprKind::Pow:
      return 4;
    default:
      return 5;
  }
}

inline const char* func_name(ExprKind k) {
  switch (k) {
    case ExprKind::Sin: return "sin";
    case ExprKind::Cos: return "cos";
    case ExprKind::Tan: return "tan";
    case ExprKind::Exp: return "exp";
    case ExprKind::Log: return "log";
    case ExprKind::Sqrt: return "sqrt";
    default: return "?";
  }
}

inline void print_rec(const ExprNode* n, std::string& out);

inline void print_child(const ExprNode* c, int parent_prec, bool needs_strict, std::string& out) {
  const bool parens = precedence(c->kind) < parent_prec ||
                      (needs_strict && precedence(c->kind) == parent_prec);
  if (parens) out += '(';
  print_rec(c, out);
  if (parens) out += ')';
}

inline void print_rec(const ExprNode* n, std::string& out) {
  switch (n->kind) {
    case ExprKind::Constant: {
      if (n->cval < 0) {
        out += '-';
        out += fmt_double(-n->cval);
      } else {
        out += fmt_double(n->cval);
      }
      return;
    }
    case ExprKind::Var:
      out += 'x';
      out += std::to_string(n->var + 1);
      return;
    case ExprKind::Coeff:
      out += '[';
      out += n->label;
      out += "](x";
      out += std::to_string(n->var + 1);
      out += ')';
      return;
    case ExprKind::Neg:
      out += '-';
      print_child(n->a.get(), 3, false, out);
      return;
    case ExprKind::Sin:
    case ExprKind::Cos:
    case ExprKind::Tan:
    case ExprKind::Exp:
    case ExprKind::Log:
    case ExprKind::Sqrt:
      out += func_name(n->kind);
      out += '(';
      print_rec(n->a.get(), out);
      out += ')';
      return;
    case ExprKind::Add:
      print_child(n->a.get(), 1, false, out);
      out += " + ";
      print_child(n->b.get(), 1, true, out);
      return;
    case ExprKind::Sub:
      print_child(n->a.get(), 1, false, out);
      out += " - ";
      print_child(n->b.get(), 1, true, out);
      return;
    case ExprKind::Mul:
      print_child(n->a.get(), 2, false, out);
      out += "*";
      print_child(n->b.get(), 2, true, out);
      return;
    case ExprKind::Div:
      print_child(n->a.get(), 2, false, out);
      out += "/";
      print_child(n->b.get(), 2, true, out);
      return;
    case ExprKind::Pow: {
      print_child(n->a.get(), 5, false, out);  // any non-atom base gets parens
      out += '^';
      if (n->cval < 0) {
        out += '-';
        out += fmt_double(-n->cval);
      } else {
        out += fmt_double(n->cval);
      }
      return;
    }
  }
}

}  // namespace detail

inline std::string print(const Expr& e) {
  if (e.empty()) return "<empty>";
  std::string out;
  detail::print_rec(e.node(), out);
  return out;
}

// ---------------------------------------------------------------------------
// Node construction (with constant folding of fully-constant subtrees)

namespace detail {

inline NodePtr raw(ExprKind k, NodePtr a, NodePtr b, double cval, int var,
                   std::shared_ptr<const CoeffTable> table = nullptr, std::string label = {}) {
  auto n = std::make_shared<ExprNode>();
  n->kind = k;
  n->cval = cval;
  n->var = var;
  n->a = std::move(a);
  n->b = std::move(b);
  n->table = std::move(table);
  n->label = std::move(label);
  return n;
}

inline NodePtr clone_ptr(const Expr& e) {
  // Nodes are immutable; a shallow copy shares the children.
  return std::make_shared<ExprNode>(*e.node());
}

}  // namespace detail

inline Expr Expr::unary(ExprKind k, Expr e) {
  if (e.empty()) throw Error("unary op on empty expression");
  detail::NodePtr child = detail::clone_ptr(e);
  if (child->kind == ExprKind::Constant) {
    // Fold if the value is defined; otherwise keep the node and let eval report.
    const double u = child->cval;
    double v = 0.0;
    bool ok = true;
    switch (k) {
      case ExprKind::Neg: v = -u; break;
      case ExprKind::Sin: v = std::sin(u); break;
      case ExprKind::Cos: v = std::cos(u); break;
      case ExprKind::Tan: v = std::tan(u); break;
      case ExprKind::Exp: v = std::exp(u); break;
      case ExprKind::Log: ok = u > 0.0; v = ok ? std::log(u) : 0.0; break;
      case ExprKind::Sqrt: ok = u >= 0.0; v = ok ? std::sqrt(u) : 0.0; break;
      default: ok = false; break;
    }
    if (ok && std::isfinite(v)) return constant(v);
  }
  return Expr(detail::raw(k, std::move(child), nullptr, 0.0, -1));
}

inline Expr Expr::binary(ExprKind k, Expr lhs, Expr rhs) {
  if (lhs.empty() || rhs.empty()) throw Error("binary op on empty expression");
  detail::NodePtr a = detail::clone_ptr(lhs), b = detail::clone_ptr(rhs);
  if (a->kind == ExprKind::Constant && b->kind == ExprKind::Constant) {
    const double u = a->cval, w = b->cval;
    double v = 0.0;
    bool ok = true;
    switch (k) {
      case ExprKind::Add: v = u + w; break;
      case ExprKind::Sub: v = u - w; break;
      case ExprKind::Mul: v = u * w; break;
      case ExprKind::Div: ok = w != 0.0; v = ok ? u / w : 0.0; break;
      default: ok = false; break;
    }
    if (ok && std::isfinite(v)) return constant(v);
  }
  return Expr(detail::raw(k, std::move(a), std::move(b), 0.0, -1));
}

inline Expr Expr::pow(Expr base, double exponent) {
  if (base.empty()) throw Error("pow on empty expression");
  detail::NodePtr a = detail::clone_ptr(base);
  if (exponent == 0.0) return constant(1.0);
  if (exponent == 1.0) return Expr(std::move(a));
  if (a->kind == ExprKind::Constant) {
    const double v = std::pow(a->cval, exponent);
    if (std::isfinite(v)) return constant(v);
  }
  return Expr(detail::raw(ExprKind::Pow, std::move(a), nullptr, exponent, -1));
}

inline Expr operator+(const Expr& a, const Expr& b) { return Expr::binary(ExprKind::Add, a, b); }
inline Expr operator-(const Expr& a, const Expr& b) { return Expr::binary(ExprKind::Sub, a, b); }
inline Expr operator*(const Expr& a, const Expr& b) { return Expr::binary(ExprKind::Mul, a, b); }
inline Expr operator/(const Expr& a, const Expr& b) { return Expr::binary(ExprKind::Div, a, b); }
inline Expr operator-(const Expr& a) { return Expr::unary(ExprKind::Neg, a); }
inline Expr operator+(const Expr& a, double c) { return a + Expr::constant(c); }
inline Expr operator+(double c, const Expr& a) { return Expr::constant(c) + a; }
inline Expr operator-(const Expr& a, double c) { return a - Expr::constant(c); }
inline Expr operator-(double c, const Expr& a) { return Expr::constant(c) - a; }
inline Expr operator*(const Expr& a, double c) { return a * Expr::constant(c); }
inline Expr operator*(double c, const Expr& a) { return Expr::constant(c) * a; }
inline Expr operator/(const Expr& a, double c) { return a / Expr::constant(c); }
inline Expr operator/(double c, const Expr& a) { return Expr::constant(c) / a; }
inline Expr sin(const Expr& a) { return Expr::unary(ExprKind::Sin, a); }
inline Expr cos(const Expr& a) { return Expr::unary(ExprKind::Cos, a); }
inline Expr tan(const Expr& a) { return Expr::unary(ExprKind::Tan, a); }
inline Expr exp(const Expr& a) { return Expr::unary(ExprKind::Exp, a); }
inline Expr log(const Expr& a) { return Expr::unary(ExprKind::Log, a); }
inline Expr sqrt(const Expr& a) { return Expr::unary(ExprKind::Sqrt, a); }
inline Expr pow(const Expr& a, double p) { return Expr::pow(a, p); }

inline bool structurally_equal(const Expr& a, const Expr& b) {
  const detail::ExprNode *p = a.node(), *q = b.node();
  if (!p || !q) return p == q;
  std::vector<std::pair<const detail::ExprNode*, const detail::ExprNode*>> stack{{p, q}};
  while (!stack.empty()) {
    auto [u, v] = stack.back();
    stack.pop_back();
    if (u->kind != v->kind || u->cval != v->cval || u->var != v->var) return false;
    if (!!u->a != !!v->a || !!u->b != !!v->b) return false;
    if (u->table != v->table) return false;
    if (u->a) stack.push_back({u->a.get(), v->a.get()});
    if (u->b) stack.push_back({u->b.get(), v->b.get()});
  }
  return true;
}

// ---------------------------------------------------------------------------
// Evaluation

namespace detail {

inline double powi(double base, long long p) {
  if (p < 0) return 1.0 / powi(base, -p);
  double r = 1.0, b = base;
  while (p) {
    if (p & 1) r *= b;
    b *= b;
    p >>= 1;
  }
  return r;
}

inline bool integer_exponent(double p, long long* out) {
  if (std::abs(p) > 64.0) return false;
  const double r = std::round(p);
  if (std::abs(p - r) > 1e-12) return false;
  *out = static_cast<long long>(r);
  return true;
}

[[noreturn]] inline void domain_fail(const ExprNode* n, const char* reason) {
  std::string sub;
  print_rec(n, sub);
  throw DomainError(reason, sub);
}

inline double eval_plain(const ExprNode* n, const double* x, int nx) {
  switch (n->kind) {
    case ExprKind::Constant: return n->cval;
    case ExprKind::Var:
      if (n->var < 0 || n->var >= nx) domain_fail(n, "variable index out of range");
      return x[n->var];
    case ExprKind::Coeff: {
      if (n->var < 0 || n->var >= nx) domain_fail(n, "variable index out of range");
      double v;
      n->table->eval(x[n->var], &v, nullptr, nullptr);
      return v;
    }
    case ExprKind::Neg: return -eval_plain(n->a.get(), x, nx);
    case ExprKind::Sin: return std::sin(eval_plain(n->a.get(), x, nx));
    case ExprKind::Cos: return std::cos(eval_plain(n->a.get(), x, nx));
    case ExprKind::Tan: return std::tan(eval_plain(n->a.get(), x, nx));
    case ExprKind::Exp: {
      const double v = std::exp(eval_plain(n->a.get(), x, nx));
      if (!std::isfinite(v)) domain_fail(n, "exp overflow");
      return v;
    }
    case ExprKind::Log: {
      const double u = eval_plain(n->a.get(), x, nx);
      if (u <= 0.0) domain_fail(n, "log of nonpositive value");
      return std::log(u);
    }
    case ExprKind::Sqrt: {
      const double u = eval_plain(n->a.get(), x, nx);
      if (u < 0.0) domain_fail(n, "sqrt of negative value");
      return std::sqrt(u);
    }
    case ExprKind::Add: return eval_plain(n->a.get(), x, nx) + eval_plain(n->b.get(), x, nx);
    case ExprKind::Sub: return eval_plain(n->a.get(), x, nx) - eval_plain(n->b.get(), x, nx);
    case ExprKind::Mul: return eval_plain(n->a.get(), x, nx) * eval_plain(n->b.get(), x, nx);
    case ExprKind::Div: {
      const double d = eval_plain(n->b.get(), x, nx);
      if (d == 0.0) domain_fail(n, "division by zero");
      const double v = eval_plain(n->a.get(), x, nx) / d;
      if (!std::isfinite(v)) domain_fail(n, "division overflow");
      return v;
    }
    case ExprKind::Pow: {
      const double u = eval_plain(n->a.get(), x, nx);
      long long ip;
      if (integer_exponent(n->cval, &ip)) {
        if (ip < 0 && u == 0.0) domain_fail(n, "zero base with negative exponent");
        return powi(u, ip);
      }
      if (u <= 0.0) domain_fail(n, "non-integer power of nonpositive base");
      return std::pow(u, n->cval);
    }
  }
  throw Error("corrupt expression node");
}

// Chain rule for a scalar function applied to jet u: f(u), f'(u), f''(u) given.
// Outer products are materialized unscaled before use: Eigen's scaled rank-1
// kernel computes (alpha*u_j)*u_i, which rounds differently across the diagonal
// and would break the exact-Hessian-symmetry guarantee.
inline Jet2 chain(const Jet2& u, double f, double df, double ddf) {
  Jet2 r;
  r.val = f;
  r.grad = df * u.grad;
  const Mat outer = u.grad * u.grad.transpose();
  r.hess = df * u.hess + ddf * outer;
  return r;
}

inline Jet2 eval_jet_rec(const ExprNode* n, const double* x, int nx) {
  switch (n->kind) {
    case ExprKind::Constant: return Jet2::constant(n->cval, nx);
    case ExprKind::Var:
      if (n->var < 0 || n->var >= nx) domain_fail(n, "variable index out of range");
      return Jet2::variable(n->var, x[n->var], nx);
    case ExprKind::Coeff: {
      if (n->var < 0 || n->var >= nx) domain_fail(n, "variable index out of range");
      double v, dv, ddv;
      n->table->eval(x[n->var], &v, &dv, &ddv);
      Jet2 r = Jet2::constant(v, nx);
      r.grad(n->var) = dv;
      r.hess(n->var, n->var) = ddv;
      return r;
    }
    case ExprKind::Neg: {
      Jet2 u = eval_jet_rec(n->a.get(), x, nx);
      u.val = -u.val;
      u.grad = -u.grad;
      u.hess = -u.hess;
      return u;
    }
    case ExprKind::Sin: {
      const Jet2 u = eval_jet_rec(n->a.get(), x, nx);
      const double s = std::sin(u.val), c = std::cos(u.val);
      return chain(u, s, c, -s);
    }
    case ExprKind::Cos: {
      const Jet2 u = eval_jet_rec(n->a.get(), x, nx);
      const double s = std::sin(u.val), c = std::cos(u.val);
      return chain(u, c, -s, -c);
    }
    case ExprKind::Tan: {
      const Jet2 u = eval_jet_rec(n->a.get(), x, nx);
      const double t = std::tan(u.val), d = 1.0 + t * t;
      return chain(u, t, d, 2.0 * t * d);
    }
    case ExprKind::Exp: {
      const Jet2 u = eval_jet_rec(n->a.get(), x, nx);
      const double e = std::exp(u.val);
      if (!std::isfinite(e)) domain_fail(n, "exp overflow");
      return chain(u, e, e, e);
    }
    case ExprKind::Log: {
      const Jet2 u = eval_jet_rec(n->a.get(), x, nx);
      if (u.val <= 0.0) domain_fail(n, "log of nonpositive value");
      return chain(u, std::log(u.val), 1.0 / u.val, -1.0 / (u.val * u.val));
    }
    case ExprKind::Sqrt: {
      const Jet2 u = eval_jet_rec(n->a.get(), x, nx);
      if (u.val <= 0.0) domain_fail(n, "sqrt of nonpositive value (derivative undefined)");
      const double s = std::sqrt(u.val);
      return chain(u, s, 0.5 / s, -0.25 / (u.val * s));
    }
    case ExprKind::Add: {
      Jet2 u = eval_jet_rec(n->a.get(), x, nx);
      const Jet2 w = eval_jet_rec(n->b.get(), x, nx);
      u.val += w.val;
      u.grad += w.grad;
      u.hess += w.hess;
      return u;
    }
    case ExprKind::Sub: {
      Jet2 u = eval_jet_rec(n->a.get(), x, nx);
      const Jet2 w = eval_jet_rec(n->b.get(), x, nx);
      u.val -= w.val;
      u.grad -= w.grad;
      u.hess -= w.hess;
      return u;
    }
    case ExprKind::Mul: {
      const Jet2 u = eval_jet_rec(n->a.get(), x, nx);
      const Jet2 w = eval_jet_rec(n->b.get(), x, nx);
      Jet2 r;
      r.val = u.val * w.val;
      r.grad = w.val * u.grad + u.val * w.grad;
      const Mat cross = u.grad * w.grad.transpose();
      const Mat sym = cross + cross.transpose();  // materialized: exact symmetry
      r.hess = w.val * u.hess + u.val * w.hess + sym;
      return r;
    }
    case ExprKind::Div: {
      const Jet2 u = eval_jet_rec(n->a.get(), x, nx);
      const Jet2 w = eval_jet_rec(n->b.get(), x, nx);
      if (w.val == 0.0) domain_fail(n, "division by zero");
      const double inv = 1.0 / w.val;
      Jet2 r;
      r.val = u.val * inv;
      if (!std::isfinite(r.val)) domain_fail(n, "division overflow");
      r.grad = inv * u.grad - (u.val * inv * inv) * w.grad;
      const Mat cross = u.grad * w.grad.transpose();
      const Mat sym = cross + cross.transpose();  // materialized: exact symmetry
      const Mat wouter = w.grad * w.grad.transpose();
      r.hess = inv * u.hess - (u.val * inv * inv) * w.hess - inv * inv * sym +
               (2.0 * u.val * inv * inv * inv) * wouter;
      return r;
    }
    case ExprKind::Pow: {
      const Jet2 u = eval_jet_rec(n->a.get(), x, nx);
      const double p = n->cval;
      long long ip;
      double f, df, ddf;
      if (integer_exponent(p, &ip)) {
        if (ip < 0 && u.val == 0.0) domain_fail(n, "zero base with negative exponent");
        f = powi(u.val, ip);
        df = (ip == 0) ? 0.0 : p * powi(u.val, ip - 1);
        ddf = (ip == 0 || ip == 1) ? 0.0 : p * (p - 1.0) * powi(u.val, ip - 2);
      } else {
        if (u.val <= 0.0) domain_fail(n, "non-integer power of nonpositive base");
        f = std::pow(u.val, p);
        df = p * std::pow(u.val, p - 1.0);
        ddf = p * (p - 1.0) * std::pow(u.val, p - 2.0);
      }
      return chain(u, f, df, ddf);
    }
  }
  throw Error("corrupt expression node");
}

}  // namespace detail

// Plain value of e at x.
inline double eval(const Expr& e, const Vec& x) {
  if (e.empty()) throw Error("eval of empty expression");
  return detail::eval_plain(e.node(), x.data(), static_cast<int>(x.size()));
}

// Value, gradient, and Hessian of e at x.  The Hessian is symmetric by construction.
inline Jet2 eval_jet(const Expr& e, const Vec& x) {
  if (e.empty()) throw Error("eval_jet of empty expression");
  return detail::eval_jet_rec(e.node(), x.data(), static_cast<int>(x.size()));
}

// ---------------------------------------------------------------------------
// Parser

namespace detail {

struct Token {
  enum Type { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, End } type;
  double num = 0.0;
  std::string text;
  std::size_t pos = 0;
};

class Lexer {
 public:
  explicit Lexer(const std::string& s) : s_(s) { advance(); }
  const Token& peek() const { return tok_; }
  Token take() {
    Token t = tok_;
    advance();
    return t;
  }

 private:
  void advance() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
    tok_.pos = i_;
    if (i_ >= s_.size()) {
      tok_.type = Token::End;
      return;
    }
    const char c = s_[i_];
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i_ + 1 < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_ + 1])))) {
      const char* begin = s_.c_str() + i_;
      char* end = nullptr;
      tok_.num = std::strtod(begin, &end);
      if (end == begin) throw ParseError("malformed number", i_);
      i_ += static_cast<std::size_t>(end - begin);
      tok_.type = Token::Number;
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t j = i_;
      while (j < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[j])))) ++j;
      tok_.text = s_.substr(i_, j - i_);
      i_ = j;
      tok_.type = Token::Ident;
      return;
    }
    ++i_;
    switch (c) {
      case '+': tok_.type = Token::Plus; return;
      case '-': tok_.type = Token::Minus; return;
      case '*': tok_.type = Token::Star; return;
      case '/': tok_.type = Token::Slash; return;
      case '^': tok_.type = Token::Caret; return;
      case '(': tok_.type = Token::LParen; return;
      case ')': tok_.type = Token::RParen; return;
      default: throw ParseError(std::string("unexpected character `") + c + "`", i_ - 1);
    }
  }
  const std::string& s_;
  std::size_t i_ = 0;
  Token tok_;
};

class Parser {
 public:
  Parser(const std::string& s, int nvars) : lex_(s), nvars_(nvars) {}

  Expr run() {
    Expr e = expr();
    const Token& t = lex_.peek();
    if (t.type != Token::End) throw ParseError("trailing input", t.pos);
    return e;
  }

 private:
  Expr expr() {
    Expr e = term();
    while (true) {
      const Token& t = lex_.peek();
      if (t.type == Token::Plus) {
        lex_.take();
        e = Expr::binary(ExprKind::Add, e, term());
      } else if (t.type == Token::Minus) {
        lex_.take();
        e = Expr::binary(ExprKind::Sub, e, term());
      } else {
        return e;
      }
    }
  }

  Expr term() {
    Expr e = unary();
    while (true) {
      const Token& t = lex_.peek();
      if (t.type == Token::Star) {
        lex_.take();
        e = Expr::binary(ExprKind::Mul, e, unary());
      } else if (t.type == Token::Slash) {
        lex_.take();
        e = Expr::binary(ExprKind::Div, e, unary());
      } else {
        return e;
      }
    }
  }

  Expr unary() {
    if (lex_.peek().type == Token::Minus) {
      lex_.take();
      return Expr::unary(ExprKind::Neg, unary());
    }
    return power();
  }

  Expr power() {
    Expr base = atom();
    if (lex_.peek().type != Token::Caret) return base;
    const Token caret = lex_.take();
    Expr ex = unary();  // right-associative, allows x^-2 and x^(1/2)
    if (ex.empty() || ex.kind() != ExprKind::Constant)
      throw ParseError("exponent must be a constant", caret.pos);
    return Expr::pow(base, ex.constant_value());
  }

  Expr atom() {
    Token t = lex_.take();
    switch (t.type) {
      case Token::Number:
        return Expr::constant(t.num);
      case Token::LParen: {
        Expr e = expr();
        if (lex_.peek().type != Token::RParen)
          throw ParseError("expected `)`", lex_.peek().pos);
        lex_.take();
        return e;
      }
      case Token::Ident: {
        if (t.text == "pi") return Expr::constant(3.14159265358979323846);
        if (t.text.size() >= 2 && t.text[0] == 'x' &&
            std::isdigit(static_cast<unsigned char>(t.text[1]))) {
          for (std::size_t k = 1; k < t.text.size(); ++k)
            if (!std::isdigit(static_cast<unsigned char>(t.text[k])))
              throw ParseError("unknown identifier `" + t.text + "`", t.pos);
          const long idx = std::strtol(t.text.c_str() + 1, nullptr, 10);
          if (idx < 1 || idx > nvars_)
            throw ParseError("variable index out of range in `" + t.text + "`", t.pos);
          return Expr::var(static_cast<int>(idx - 1));
        }
        ExprKind k;
        if (t.text == "sin") k = ExprKind::Sin;
        else if (t.text == "cos") k = ExprKind::Cos;
        else if (t.text == "tan") k = ExprKind::Tan;
        else if (t.text == "exp") k = ExprKind::Exp;
        else if (t.text == "log") k = ExprKind::Log;
        else if (t.text == "sqrt") k = ExprKind::Sqrt;
        else throw ParseError("unknown identifier `" + t.text + "`", t.pos);
        if (lex_.peek().type != Token::LParen)
          throw ParseError("expected `(` after function name", lex_.peek().pos);
        lex_.take();
        Expr arg = expr();
        if (lex_.peek().type != Token::RParen)
          throw ParseError("expected `)`", lex_.peek().pos);
        lex_.take();
        return Expr::unary(k, arg);
      }
      default:
        throw ParseError("expected a value", t.pos);
    }
  }

  Lexer lex_;
  int nvars_;
};

}  // namespace detail

// Parse source text into an AST.  Variables x1..x<nvars> are admitted.
inline Expr parse(const std::string& src, int nvars) {
  return detail::Parser(src, nvars).run();
}

}  // namespace pwlab
