#include "gvc/discrete.hpp"

#include <string>

namespace gvc {

void validate(const DiscretePath& path) {
  if (path.configs.empty()) throw InvalidArgument("discrete path: no configurations");
  const Eigen::Index n = path.configs.front().size();
  for (const Vec& q : path.configs)
    if (q.size() != n)
      throw InvalidArgument("discrete path: configurations must have uniform dimension");
  if (path.multipliers.empty()) return;
  if (path.multipliers.size() != path.configs.size() - 1)
    throw InvalidArgument("discrete path: one multiplier vector per consecutive pair");
  const Eigen::Index r = path.multipliers.front().size();
  for (const Vec& lambda : path.multipliers)
    if (lambda.size() != r)
      throw InvalidArgument("discrete path: multipliers must have uniform dimension");
}

namespace {

void require_config(const DiscreteLagrangian& Ld, const Vec& q, const char* name) {
  if (q.size() != Ld.n())
    throw InvalidArgument(std::string("discrete: ") + name +
                          " does not match the configuration dimension");
}

}  // namespace

Vec del_residual(const DiscreteLagrangian& Ld, const Vec& q_prev, const Vec& q,
                 const Vec& q_next) {
  require_config(Ld, q_prev, "q_prev");
  require_config(Ld, q, "q");
  require_config(Ld, q_next, "q_next");
  return Ld.d1(q, q_next) + Ld.d2(q_prev, q);
}

Vec del_step(const DiscreteLagrangian& Ld, const Vec& q_prev, const Vec& q,
             const std::optional<Vec>& guess, const SolverConfig& config) {
  require_config(Ld, q_prev, "q_prev");
  require_config(Ld, q, "q");
  const Vec seed = guess ? *guess : Vec(2 * q - q_prev);
  require_config(Ld, seed, "guess");

  const Vec d2_term = Ld.d2(q_prev, q);
  const auto residual = [&](const Vec& q_next) -> Vec {
    return Ld.d1(q, q_next) + d2_term;
  };
  const Vec q_next = newton(residual, seed, config, "del_step");

  // Enforce the local-invertibility precondition: a residual that vanishes
  // identically (degenerate L_d) must not pass for a solution.
  const Mat jac = fd_jac(residual, q_next, config);
  linsolve(jac, Vec::Zero(Ld.n()), config, "del_step (invertibility check)");
  return q_next;
}

ConstrainedStep discrete_constrained_step(const DiscreteLagrangian& Ld,
                                          const std::vector<ScalarField>& phi,
                                          const Vec& q_prev, const Vec& q,
                                          const Vec& lambda_prev,
                                          const std::optional<Vec>& q_guess,
                                          const std::optional<Vec>& lambda_guess,
                                          const SolverConfig& config) {
  const int n = Ld.n();
  const int r = static_cast<int>(phi.size());
  if (r > n)
    throw InvalidArgument("discrete_constrained_step: more constraints than "
                          "configuration dimensions");
  require_config(Ld, q_prev, "q_prev");
  require_config(Ld, q, "q");
  if (lambda_prev.size() != r)
    throw InvalidArgument("discrete_constrained_step: one previous multiplier per "
                          "constraint");
  for (const ScalarField& constraint : phi)
    if (constraint.dim_a() != n || constraint.dim_b() != n)
      throw InvalidArgument("discrete_constrained_step: constraints must consume "
                            "configuration pairs");

  if (r == 0) return {del_step(Ld, q_prev, q, q_guess, config), Vec(0)};

  // The D2 block is constant in the unknowns: D2(L_d + λ^k Φ)(σ(k−1), σ(k)).
  Vec d2_term = Ld.d2(q_prev, q);
  for (int a = 0; a < r; ++a)
    d2_term += lambda_prev[a] * phi[static_cast<std::size_t>(a)].grad_b(q_prev, q);

  const auto residual = [&](const Vec& z) -> Vec {
    const Vec q_next = z.head(n);
    const Vec lambda = z.tail(r);
    Vec top = Ld.d1(q, q_next) + d2_term;
    Vec bottom(r);
    for (int a = 0; a < r; ++a) {
      const ScalarField& constraint = phi[static_cast<std::size_t>(a)];
      top += lambda[a] * constraint.grad_a(q, q_next);
      bottom[a] = constraint(q, q_next);
    }
    Vec out(n + r);
    out.head(n) = top;
    out.tail(r) = bottom;
    return out;
  };

  const Vec q_seed = q_guess ? *q_guess : Vec(2 * q - q_prev);
  const Vec lambda_seed = lambda_guess ? *lambda_guess : Vec(Vec::Zero(r));
  if (q_seed.size() != n || lambda_seed.size() != r)
    throw InvalidArgument("discrete_constrained_step: guess dimension mismatch");
  Vec seed(n + r);
  seed.head(n) = q_seed;
  seed.tail(r) = lambda_seed;

  const Vec z = newton(residual, seed, config, "discrete_constrained_step");
  return {z.head(n), z.tail(r)};
}

DiscreteOcpSolution discrete_ocp_solve(const DiscreteControlSystem& sys, const Vec& q0,
                                       int horizon, const TerminalCondition& terminal,
                                       const SolverConfig& config) {
  const int N = horizon;
  const int n = sys.cost.dim_a();
  const int k = sys.control_dim;
  if (N < 1) throw InvalidArgument("discrete_ocp_solve: horizon must be at least 1");
  if (sys.cost.dim_b() != k)
    throw InvalidArgument("discrete_ocp_solve: cost must consume (q, u)");
  if (q0.size() != n) throw InvalidArgument("discrete_ocp_solve: q0 dimension mismatch");
  if (terminal.fixed_q && terminal.fixed_q->size() != n)
    throw InvalidArgument("discrete_ocp_solve: terminal point dimension mismatch");

  const bool free_terminal = !terminal.fixed_q.has_value();
  const ControlField step{k, n, sys.gamma_d};

  // Unknown layout: controls u(0..N−1), costates μ₁(1..N), interior states
  // σ(1..N−1), then σ(N) when the endpoint is free.
  const int u_base = 0;
  const int mu_base = N * k;
  const int state_base = mu_base + N * n;
  const int unknowns = state_base + (N - 1) * n + (free_terminal ? n : 0);

  const auto state_at = [&](const Vec& z, int index) -> Vec {
    if (index == 0) return q0;
    if (index == N && !free_terminal) return *terminal.fixed_q;
    return z.segment(state_base + (index - 1) * n, n);
  };
  const auto costate_at = [&](const Vec& z, int index) -> Vec {
    return z.segment(mu_base + (index - 1) * n, n);
  };
  const auto control_at = [&](const Vec& z, int index) -> Vec {
    return z.segment(u_base + index * k, k);
  };

  const auto residual = [&](const Vec& z) -> Vec {
    Vec out(unknowns);
    int row = 0;
    // Costate recursion μ₁(k) = ∂H/∂q(σ(k), μ₁(k+1), u(k)) on interior indices.
    for (int i = 1; i <= N - 1; ++i) {
      const Vec q = state_at(z, i);
      const Vec u = control_at(z, i);
      const Vec mu_next = costate_at(z, i + 1);
      const Vec dH_dq = control_jac_q(step, q, u, config).transpose() * mu_next +
                        sys.cost.grad_a(q, u);
      out.segment(row, n) = costate_at(z, i) - dH_dq;
      row += n;
    }
    // Stationarity ∂H/∂u = 0 at every step.
    for (int i = 0; i <= N - 1; ++i) {
      const Vec q = state_at(z, i);
      const Vec u = control_at(z, i);
      const Vec mu_next = costate_at(z, i + 1);
      out.segment(row, k) = control_jac_u(step, q, u, config).transpose() * mu_next +
                            sys.cost.grad_b(q, u);
      row += k;
    }
    // Dynamics σ(k+1) = Γ̃_d(σ(k), u(k)).
    for (int i = 0; i <= N - 1; ++i) {
      out.segment(row, n) = state_at(z, i + 1) - sys.gamma_d(state_at(z, i), control_at(z, i));
      row += n;
    }
    // Transversality for the free endpoint.
    if (free_terminal) {
      out.segment(row, n) = costate_at(z, N);
      row += n;
    }
    return out;
  };

  // Seed: controls zero, costates zero, states frozen at q0 (or interpolated
  // toward the fixed endpoint).
  Vec z0 = Vec::Zero(unknowns);
  for (int i = 1; i <= N - 1 + (free_terminal ? 1 : 0); ++i) {
    Vec q = q0;
    if (!free_terminal)
      q = q0 + (static_cast<double>(i) / N) * (*terminal.fixed_q - q0);
    z0.segment(state_base + (i - 1) * n, n) = q;
  }

  const Vec z = newton(residual, z0, config, "discrete_ocp_solve");

  // Reject degenerate stationarity: a cost with singular ∂²H/∂u² leaves the
  // stacked system rank-deficient even when the residual happens to vanish.
  linsolve(fd_jac(residual, z, config), Vec::Zero(unknowns), config,
           "discrete_ocp_solve (regularity check)");

  DiscreteOcpSolution out;
  out.path.configs.reserve(static_cast<std::size_t>(N) + 1);
  for (int i = 0; i <= N; ++i) out.path.configs.push_back(state_at(z, i));
  out.controls.reserve(static_cast<std::size_t>(N));
  for (int i = 0; i <= N - 1; ++i) out.controls.push_back(control_at(z, i));
  out.costates.reserve(static_cast<std::size_t>(N));
  for (int i = 1; i <= N; ++i) out.costates.push_back(costate_at(z, i));
  validate(out.path);
  return out;
}

Vec discrete_momentum(const DiscreteLagrangian& Ld, const Vec& q_prev, const Vec& q) {
  require_config(Ld, q_prev, "q_prev");
  require_config(Ld, q, "q");
  return Ld.d2(q_prev, q);
}

}  // namespace gvc
