#include "gvc/numerics.hpp"

#include <cmath>
#include <utility>

namespace gvc {

void validate(const Trajectory& trajectory) {
  if (trajectory.times.size() != trajectory.states.size())
    throw InvalidArgument("trajectory: one state row required per time sample");
  for (std::size_t i = 1; i < trajectory.times.size(); ++i)
    if (!(trajectory.times[i] > trajectory.times[i - 1]))
      throw InvalidArgument("trajectory: times must be strictly increasing");
  const Eigen::Index width =
      trajectory.states.empty() ? static_cast<Eigen::Index>(trajectory.labels.size())
                                : trajectory.states.front().size();
  for (const Vec& row : trajectory.states)
    if (row.size() != width)
      throw InvalidArgument("trajectory: state rows must have uniform width");
  if (static_cast<Eigen::Index>(trajectory.labels.size()) != width)
    throw InvalidArgument("trajectory: one label required per state component");
}

double default_fd_scale() { return std::cbrt(machine_eps()); }

double second_order_fd_scale() { return std::pow(machine_eps(), 0.25); }

void SolverConfig::validate() const {
  if (!(newton_tol > 0 && newton_max_iter > 0 && fd_step_scale > 0 && rk_dt > 0 &&
        condition_floor > 0))
    throw InvalidArgument("solver config: all fields must be positive");
}

double fd_step(double xi, double scale) { return scale * std::max(1.0, std::abs(xi)); }

namespace {

Mat central_jacobian(const VectorFn& F, const Vec& x, double scale) {
  Vec probe = x;
  Mat jac;
  // `jac.size() == 0` cannot distinguish "not yet sized" from a genuine 0×k
  // Jacobian (a map into a zero-dimensional codomain), so track sizing
  // explicitly.
  bool sized = false;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = fd_step(x[j], scale);
    probe[j] = x[j] + h;
    const Vec forward = F(probe);
    probe[j] = x[j] - h;
    const Vec backward = F(probe);
    probe[j] = x[j];
    if (!sized) {
      jac.resize(forward.size(), x.size());
      sized = true;
    }
    jac.col(j) = (forward - backward) / (2 * h);
  }
  if (!sized) jac.resize(F(x).size(), 0);
  return jac;
}

}  // namespace

Vec fd_grad(const ScalarFn& f, const Vec& x, const SolverConfig& config) {
  Vec grad(x.size());
  Vec probe = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = fd_step(x[j], config.fd_step_scale);
    probe[j] = x[j] + h;
    const double forward = f(probe);
    probe[j] = x[j] - h;
    const double backward = f(probe);
    probe[j] = x[j];
    grad[j] = (forward - backward) / (2 * h);
  }
  return grad;
}

Mat fd_jac(const VectorFn& F, const Vec& x, const SolverConfig& config) {
  return central_jacobian(F, x, config.fd_step_scale);
}

Mat fd_jac_nested(const VectorFn& F, const Vec& x, const SolverConfig& config) {
  (void)config;
  return central_jacobian(F, x, second_order_fd_scale());
}

Mat fd_hess(const ScalarFn& f, const Vec& x, const SolverConfig& config) {
  const Mat raw = fd_jac_nested(
      [&](const Vec& z) { return fd_grad(f, z, config); }, x, config);
  return (raw + raw.transpose()) / 2;
}

namespace {

// LU factorization with partial pivoting, kept in-place. `perm` records row
// exchanges as applied to b during substitution.
struct LuFactors {
  Mat lu;
  std::vector<Eigen::Index> perm;
  bool zero_pivot = false;
};

LuFactors lu_factor(Mat A) {
  const Eigen::Index n = A.rows();
  LuFactors f{std::move(A), {}, false};
  f.perm.resize(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index pivot = k;
    double best = std::abs(f.lu(k, k));
    for (Eigen::Index i = k + 1; i < n; ++i) {
      const double cand = std::abs(f.lu(i, k));
      if (cand > best) {
        best = cand;
        pivot = i;
      }
    }
    f.perm[static_cast<std::size_t>(k)] = pivot;
    if (pivot != k) f.lu.row(pivot).swap(f.lu.row(k));
    if (f.lu(k, k) == 0.0) {
      f.zero_pivot = true;
      continue;
    }
    for (Eigen::Index i = k + 1; i < n; ++i) {
      f.lu(i, k) /= f.lu(k, k);
      f.lu.row(i).tail(n - k - 1) -= f.lu(i, k) * f.lu.row(k).tail(n - k - 1);
    }
  }
  return f;
}

Vec lu_solve(const LuFactors& f, Vec b) {
  const Eigen::Index n = f.lu.rows();
  // The stored multipliers refer to the fully exchanged row layout (row swaps
  // during factorization move the already-computed columns of L along), so
  // every recorded exchange must hit b before substitution starts.
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index p = f.perm[static_cast<std::size_t>(k)];
    if (p != k) std::swap(b[p], b[k]);
  }
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index i = k + 1; i < n; ++i) b[i] -= f.lu(i, k) * b[k];
  for (Eigen::Index k = n - 1; k >= 0; --k) {
    for (Eigen::Index i = k + 1; i < n; ++i) b[k] -= f.lu(k, i) * b[i];
    b[k] /= f.lu(k, k);
  }
  return b;
}

double one_norm(const Mat& A) {
  double norm = 0;
  for (Eigen::Index j = 0; j < A.cols(); ++j)
    norm = std::max(norm, A.col(j).cwiseAbs().sum());
  return norm;
}

}  // namespace

LinearSolution linsolve(const Mat& A, const Vec& b, const SolverConfig& config,
                        const std::string& context) {
  const std::string where = context.empty() ? std::string("linsolve") : context;
  if (A.rows() != A.cols()) throw InvalidArgument(where + ": matrix must be square");
  if (A.rows() != b.size()) throw InvalidArgument(where + ": size mismatch");
  if (A.rows() == 0) return {Vec(0), 1.0};

  const LuFactors factors = lu_factor(A);
  if (factors.zero_pivot)
    throw SingularMatrixError(where + ": matrix is singular (zero pivot)", 0.0);

  // Exact 1-norm of the inverse via n unit solves; dimensions here are tiny.
  const Eigen::Index n = A.rows();
  Mat inverse(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    inverse.col(j) = lu_solve(factors, Vec::Unit(n, j));
  const double rcond = 1.0 / (one_norm(A) * one_norm(inverse));

  if (!(rcond >= config.condition_floor))
    throw SingularMatrixError(
        where + ": reciprocal condition estimate " + std::to_string(rcond) +
            " below floor " + std::to_string(config.condition_floor),
        rcond);
  return {lu_solve(factors, b), rcond};
}

Vec newton(const VectorFn& F, Vec x0, const SolverConfig& config,
           const std::string& context) {
  const std::string where = context.empty() ? std::string("newton") : context;
  if (x0.size() == 0) return x0;
  Vec residual = F(x0);
  if (residual.size() != x0.size())
    throw InvalidArgument(where + ": residual and unknown dimensions differ");
  for (int iter = 0; iter < config.newton_max_iter; ++iter) {
    if (!residual.allFinite())
      throw ConvergenceError(where + ": non-finite residual", iter,
                             std::numeric_limits<double>::quiet_NaN());
    if (residual.lpNorm<Eigen::Infinity>() <= config.newton_tol) return x0;
    const Mat jac = fd_jac(F, x0, config);
    x0 += linsolve(jac, -residual, config, where + " (Jacobian solve)").x;
    residual = F(x0);
  }
  if (residual.allFinite() && residual.lpNorm<Eigen::Infinity>() <= config.newton_tol)
    return x0;
  throw ConvergenceError(
      where + ": no convergence after " + std::to_string(config.newton_max_iter) +
          " iterations",
      config.newton_max_iter,
      residual.allFinite() ? residual.lpNorm<Eigen::Infinity>()
                           : std::numeric_limits<double>::quiet_NaN());
}

Trajectory rk4(const OdeRhs& rhs, const Vec& x0, double t0, double t1, double dt,
               std::vector<std::string> labels) {
  if (!(dt > 0)) throw InvalidArgument("rk4: dt must be positive");
  if (!(t1 > t0)) throw InvalidArgument("rk4: t1 must exceed t0");

  if (labels.empty())
    for (Eigen::Index i = 0; i < x0.size(); ++i)
      labels.push_back("x" + std::to_string(i + 1));

  const auto stage = [&](double t, const Vec& x) {
    Vec d = rhs(t, x);
    if (!d.allFinite())
      throw Error("rk4: non-finite right-hand side at t=" + std::to_string(t));
    return d;
  };

  // Walk an index grid rather than accumulating t, so times stay exact; the
  // final step is shortened to land on t1.
  const auto span = t1 - t0;
  auto steps = static_cast<long>(std::ceil(span / dt - 1e-12));
  if (steps < 1) steps = 1;

  Trajectory out;
  out.labels = std::move(labels);
  out.times.reserve(static_cast<std::size_t>(steps) + 1);
  out.states.reserve(static_cast<std::size_t>(steps) + 1);
  out.times.push_back(t0);
  out.states.push_back(x0);

  Vec x = x0;
  double t = t0;
  for (long k = 1; k <= steps; ++k) {
    const double t_next = (k == steps) ? t1 : t0 + static_cast<double>(k) * dt;
    const double h = t_next - t;
    const Vec k1 = stage(t, x);
    const Vec k2 = stage(t + h / 2, x + (h / 2) * k1);
    const Vec k3 = stage(t + h / 2, x + (h / 2) * k2);
    const Vec k4 = stage(t + h, x + h * k3);
    x += (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
    t = t_next;
    out.times.push_back(t);
    out.states.push_back(x);
  }
  validate(out);
  return out;
}

}  // namespace gvc
