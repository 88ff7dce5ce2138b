#pragma once
// Shared aliases, error types, and small dense tensor holders used across the library.

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pwlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Base class for everything this library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed expression text. `position` is a 0-based offset into the source string.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what + " (at offset " + std::to_string(position) + ")"), position(position) {}
  std::size_t position;
};

// Evaluation left the domain of some operation (log of a nonpositive value, division
// by zero, ...). `subexpression` is the printed node at which evaluation failed.
class DomainError : public Error {
 public:
  DomainError(const std::string& reason, std::string subexpression)
      : Error(reason + " in `" + subexpression + "`"), subexpression(std::move(subexpression)) {}
  std::string subexpression;
};

// A numerical procedure could not meet its contract (degenerate metric, pivot
// breakdown, integration failure, tolerance violation).
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Bad scenario configuration (unknown key, missing field, unreadable file).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Dense rank-3 tensor, all dimensions equal to n. Sized for n <= 8 use.
class Tensor3 {
 public:
  Tensor3() : n_(0) {}
  explicit Tensor3(int n) : n_(n), d_(static_cast<std::size_t>(n) * n * n, 0.0) {}
  int dim() const { return n_; }
  double& operator()(int i, int j, int k) { return d_[idx(i, j, k)]; }
  double operator()(int i, int j, int k) const { return d_[idx(i, j, k)]; }

 private:
  std::size_t idx(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * n_ + j) * n_ + k;
  }
  int n_;
  std::vector<double> d_;
};

// Dense rank-4 tensor, all dimensions equal to n.
class Tensor4 {
 public:
  Tensor4() : n_(0) {}
  explicit Tensor4(int n) : n_(n), d_(static_cast<std::size_t>(n) * n * n * n, 0.0) {}
  int dim() const { return n_; }
  double& operator()(int i, int j, int k, int l) { return d_[idx(i, j, k, l)]; }
  double operator()(int i, int j, int k, int l) const { return d_[idx(i, j, k, l)]; }

 private:
  std::size_t idx(int i, int j, int k, int l) const {
    return ((static_cast<std::size_t>(i) * n_ + j) * n_ + k) * n_ + l;
  }
  int n_;
  std::vector<double> d_;
};

inline double sqr(double x) { return x * x; }

}  // namespace pwlab
