#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "gvc/types.hpp"

namespace gvc {

using ScalarFn = std::function<double(const Vec&)>;
using VectorFn = std::function<Vec(const Vec&)>;
using OdeRhs = std::function<Vec(double, const Vec&)>;

inline double machine_eps() { return std::numeric_limits<double>::epsilon(); }

// Step scale for first-order central differences: eps^(1/3), the usual
// balance of truncation against roundoff.
double default_fd_scale();

// Step scale for second-order (nested) central differences: eps^(1/4).
double second_order_fd_scale();

// Tunables shared by every iterative kernel in the library.
struct SolverConfig {
  double newton_tol = 1e-10;  // max-norm residual tolerance
  int newton_max_iter = 50;
  double fd_step_scale = default_fd_scale();
  double rk_dt = 1e-3;
  double condition_floor = 1e-10;

  // Throws InvalidArgument unless every field is positive.
  void validate() const;
};

// Central-difference step for a coordinate of magnitude |xi|: scale*max(1,|xi|).
double fd_step(double xi, double scale);

// Gradient of f at x by central differences with the first-order step rule.
Vec fd_grad(const ScalarFn& f, const Vec& x, const SolverConfig& config = {});

// Jacobian of F at x by central differences with the first-order step rule.
Mat fd_jac(const VectorFn& F, const Vec& x, const SolverConfig& config = {});

// Jacobian by central differences with the second-order step rule; use when F
// is itself a finite-difference derivative, so the total error stays balanced.
Mat fd_jac_nested(const VectorFn& F, const Vec& x, const SolverConfig& config = {});

// Hessian of f at x: nested central differences, symmetrized as (H+Hᵀ)/2.
Mat fd_hess(const ScalarFn& f, const Vec& x, const SolverConfig& config = {});

struct LinearSolution {
  Vec x;
  double rcond;  // reciprocal 1-norm condition estimate of the matrix
};

// Solves A x = b by LU with partial pivoting (dense, implemented here; the
// problems this library targets have dimension at most a few tens). Throws
// SingularMatrixError when the reciprocal condition estimate is below
// config.condition_floor. `context` names the caller in error messages.
LinearSolution linsolve(const Mat& A, const Vec& b, const SolverConfig& config = {},
                        const std::string& context = {});

// Newton iteration with a fresh central-difference Jacobian per step.
// Stops when the max-norm of F falls at or below config.newton_tol; throws
// ConvergenceError after config.newton_max_iter iterations and
// SingularMatrixError when a Jacobian solve fails.
Vec newton(const VectorFn& F, Vec x0, const SolverConfig& config = {},
           const std::string& context = {});

// Classical fixed-step 4th-order Runge-Kutta from t0 to t1. Every step has
// width dt except the last, which is shortened to land exactly on t1. The
// returned trajectory contains both endpoints. Throws on non-finite
// right-hand sides, naming the offending time.
Trajectory rk4(const OdeRhs& rhs, const Vec& x0, double t0, double t1, double dt,
               std::vector<std::string> labels = {});

}  // namespace gvc
