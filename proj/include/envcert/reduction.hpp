// Finite-dimensional evolution systems
//
//     u' + A(t) u = h(t, u) + f(t),   u(t0) = u0,   u in R^d,
//
// and their reduction to the scalar inequality for g = |u|: with
// <A u, u> >= gamma |u|^2 and |h(t, u)| <= alpha(t, |u|),
//
//     g' <= -gamma(t) g + alpha(t, g) + |f(t)|.

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "envcert/continuous.hpp"
#include "envcert/expr.hpp"
#include "envcert/ode.hpp"

namespace envcert {

/// Dense row-major square matrix.
class Matrix {
 public:
  Matrix() = default;
  explicit Matrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}
  Matrix(std::size_t n, std::vector<double> row_major);
  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> d);

  std::size_t size() const { return n_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
  const std::vector<double>& data() const { return data_; }

  /// Largest |a_ij - a_ji|.
  double asymmetry() const;
  /// Frobenius norm.
  double norm() const;

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

class AsymmetricMatrixError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// All eigenvalues of a symmetric matrix by cyclic Jacobi rotations, in
/// ascending order. Throws AsymmetricMatrixError beyond 1e-12 asymmetry.
std::vector<double> symmetric_eigenvalues(const Matrix& m);

double min_eigenvalue(const Matrix& m);

struct VectorSystem {
  std::size_t dim = 0;
  /// dim*dim row-major entries, expressions over {t}.
  std::vector<Expression> a;
  /// dim expressions over {t, u1, ..., ud}.
  std::vector<Expression> h;
  /// dim expressions over {t}.
  std::vector<Expression> f;
  /// User-supplied bound |h(t, u)| <= alpha(t, |u|), over {t, y}.
  StateFunction alpha_bound;
  std::vector<double> u0;
  double t0 = 0.0;

  bool constant_a() const;
  Matrix a_at(double t) const;
  /// Throws std::invalid_argument on inconsistent sizes or variable sets.
  void validate() const;
};

/// Variable set {t, u1, ..., ud} for the components of h.
std::vector<std::string> state_variables(std::size_t dim);

/// gamma(t) = min eigenvalue of A(t), beta(t) = |f(t)|, alpha = alpha_bound.
/// A constant A is decomposed once; a time-dependent A is decomposed per
/// evaluation time and memoized.
ContinuousProblem reduce_to_scalar(const VectorSystem& sys);

struct VectorSample {
  double t;
  std::vector<double> u;
  double norm;
};

struct VectorTrajectory {
  std::vector<VectorSample> samples;
  TrajectoryStatus status = TrajectoryStatus::Completed;
  std::vector<std::string> notes;
  std::shared_ptr<const OdeSolution> solution;

  /// The norm history as a scalar trajectory (g = |u|, g_dot from the
  /// derivative projected on u / |u|).
  Trajectory norm_trajectory() const;
};

VectorTrajectory integrate_vector(const VectorSystem& sys, double horizon, double rel_tol,
                                  double abs_tol);

/// "t,u_1,...,u_d,norm".
std::string vector_trajectory_csv(const VectorTrajectory& traj);

struct AlphaBoundCounterexample {
  double t;
  double radius;
  std::vector<double> u;
  double h_norm;
  double alpha;
};

/// Samples random u on spheres |u| = radius and reports points where
/// |h(t, u)| > alpha(t, radius) + 1e-12. Can refute the bound, never prove it.
std::vector<AlphaBoundCounterexample> falsify_alpha_bound(const VectorSystem& sys,
                                                          std::span<const double> times,
                                                          std::span<const double> radii,
                                                          std::size_t directions,
                                                          std::uint64_t seed);

struct Example2Params {
  double c = 1.0;
  double lambda = 1.0;
  double b = 1.0;
  double theta = 0.5;
  double p = 2.0;
};

struct Example2 {
  Example2Params params;
  /// c^(p-1) for p > 1, (lambda + c)^(p-1) for p <= 1.
  double big_c = 1.0;
  ContinuousProblem problem;
  Envelope envelope;
};

double example2_constant(const Example2Params& params);

/// Scalar problem with gamma = 0 whose alpha and beta equal the admissible
/// bounds for the shifted envelope mu(t) = c + lambda (1+t)^(-b):
///   alpha(t, y) = theta C |y|^p b lambda / ((lambda + c)(1+t)^(1+b)),
///   beta(t) = (1 - theta) b lambda / ((c + lambda)^2 (1+t)^(1+b)).
/// theta = 1 is accepted and gives beta = 0.
Example2 build_example2(const Example2Params& params);

/// A dim-dimensional system with A = 0, h(t, u) = k(t) u |u|^(p-1) and f(t)
/// along e1, whose reduction is exactly the problem of build_example2.
VectorSystem example2_system(const Example2Params& params, std::size_t dim,
                             std::vector<double> u0);

struct DecayReport {
  /// Decade windows in 1+t, oldest first: (start, end, sup |g'|(1+t)^(1+b)).
  struct Window {
    double t_begin;
    double t_end;
    double sup;
  };
  std::vector<Window> windows;
  /// log10(W_last / W_prev) over the last two decades.
  double growth_exponent = 0.0;
  bool bounded = false;
  double g_end = 0.0;
  /// Tail estimate sup_last * (1+T)^(-b) / b of the remaining increase.
  double tail = 0.0;
  double g_limit = 0.0;  // g_end + tail
  std::optional<double> limit_bound;
  bool limit_ok = true;
};

/// Examines |g'(t)|(1+t)^(1+b) per decade of 1+t. The statistic is bounded
/// when the last decade grows by at most 10^0.05 over the previous one.
/// Requires b > 0 and at least two decades of 1+t.
DecayReport check_gdot_decay(const Trajectory& traj, double b,
                             std::optional<double> limit_bound = std::nullopt,
                             double limit_tol = 1e-6);

}  // namespace envcert
