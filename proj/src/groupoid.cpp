#include "gvc/groupoid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gvc {

namespace {

constexpr double composability_tol = 1e-10;

void require_model(const GroupoidModel& G, const std::string& who) {
  if (G.base_dim < 0 || G.fiber_dim < 1)
    throw InvalidArgument(who + ": model needs fiber_dim >= 1 and base_dim >= 0");
  if (!G.target_map || !G.product_map)
    throw InvalidArgument(who + ": model must provide target and product maps");
  if (!(G.chart_radius > 0))
    throw InvalidArgument(who + ": chart radius must be positive");
}

void require_base(const GroupoidModel& G, const Vec& q, const std::string& who) {
  if (q.size() != G.base_dim)
    throw InvalidArgument(who + ": base coordinate has wrong dimension");
}

void require_chart(const GroupoidModel& G, const Vec& v, const std::string& who) {
  if (v.size() != G.fiber_dim)
    throw InvalidArgument(who + ": fiber coordinate has wrong dimension");
  if (!(v.norm() < G.chart_radius))
    throw ChartError(who + ": |v| = " + std::to_string(v.norm()) +
                     " outside chart radius " + std::to_string(G.chart_radius));
}

void require_lagrangian(const GroupoidModel& G, const ScalarField& Ld,
                        const std::string& who) {
  if (Ld.dim_a() != G.base_dim || Ld.dim_b() != G.fiber_dim)
    throw InvalidArgument(who + ": discrete Lagrangian must consume (q, v)");
}

}  // namespace

Mat extract_rho(const GroupoidModel& G, const Vec& q, const SolverConfig& config) {
  require_model(G, "extract_rho");
  require_base(G, q, "extract_rho");
  if (G.anchor_override) {
    const Mat rho = G.anchor_override(q);
    if (rho.rows() != G.base_dim || rho.cols() != G.fiber_dim)
      throw InvalidArgument("extract_rho: override has wrong shape");
    return rho;
  }
  return fd_jac([&](const Vec& v) { return G.target_map(q, v); },
                Vec::Zero(G.fiber_dim), config);
}

Mat extract_L(const GroupoidModel& G, const Vec& q, const Vec& v,
              const SolverConfig& config) {
  require_model(G, "extract_L");
  require_base(G, q, "extract_L");
  require_chart(G, v, "extract_L");
  if (G.left_override) {
    const Mat left = G.left_override(q, v);
    if (left.rows() != G.fiber_dim || left.cols() != G.fiber_dim)
      throw InvalidArgument("extract_L: override has wrong shape");
    return left;
  }
  return fd_jac([&](const Vec& vt) { return G.product_map(q, v, vt); },
                Vec::Zero(G.fiber_dim), config);
}

Mat extract_R(const GroupoidModel& G, const Vec& q, const Vec& vt,
              const SolverConfig& config) {
  require_model(G, "extract_R");
  require_base(G, q, "extract_R");
  require_chart(G, vt, "extract_R");
  if (G.right_override) {
    const Mat right = G.right_override(q, vt);
    if (right.rows() != G.fiber_dim || right.cols() != G.fiber_dim)
      throw InvalidArgument("extract_R: override has wrong shape");
    return right;
  }
  return fd_jac([&](const Vec& v) { return G.product_map(q, v, vt); },
                Vec::Zero(G.fiber_dim), config);
}

GroupoidElement groupoid_inverse(const GroupoidModel& G, const GroupoidElement& g,
                                 const SolverConfig& config) {
  require_model(G, "groupoid_inverse");
  require_base(G, g.q, "groupoid_inverse");
  require_chart(G, g.v, "groupoid_inverse");
  const Vec w = newton([&](const Vec& cand) { return G.product_map(g.q, g.v, cand); },
                       -g.v, config, "groupoid_inverse");
  return {G.target_map(g.q, g.v), w};
}

Vec groupoid_del_residual(const GroupoidModel& G, const ScalarField& Ld,
                          const GroupoidElement& g, const GroupoidElement& h,
                          const SolverConfig& config) {
  require_model(G, "groupoid_del_residual");
  require_lagrangian(G, Ld, "groupoid_del_residual");
  require_base(G, g.q, "groupoid_del_residual");
  require_base(G, h.q, "groupoid_del_residual");
  require_chart(G, g.v, "groupoid_del_residual");
  require_chart(G, h.v, "groupoid_del_residual");

  const Vec target = G.target_map(g.q, g.v);
  if (G.base_dim > 0 &&
      (h.q - target).lpNorm<Eigen::Infinity>() > composability_tol)
    throw InvalidArgument("groupoid_del_residual: non-composable pair "
                          "(h.q differs from b(g.q, g.v))");

  return extract_rho(G, h.q, config).transpose() * Ld.grad_a(h.q, h.v) +
         extract_L(G, g.q, g.v, config).transpose() * Ld.grad_b(g.q, g.v) -
         extract_R(G, h.q, h.v, config).transpose() * Ld.grad_b(h.q, h.v);
}

GroupoidElement groupoid_del_step(const GroupoidModel& G, const ScalarField& Ld,
                                  const GroupoidElement& g,
                                  const std::optional<Vec>& guess,
                                  const SolverConfig& config) {
  require_model(G, "groupoid_del_step");
  require_lagrangian(G, Ld, "groupoid_del_step");
  require_base(G, g.q, "groupoid_del_step");
  require_chart(G, g.v, "groupoid_del_step");

  const Vec q_next = G.target_map(g.q, g.v);
  const Vec seed = guess ? *guess : g.v;
  require_chart(G, seed, "groupoid_del_step (guess)");

  // The g-terms of the residual do not move during the solve.
  const Vec carried = extract_L(G, g.q, g.v, config).transpose() * Ld.grad_b(g.q, g.v);
  const Mat rho_t = extract_rho(G, q_next, config).transpose();

  const Vec v_next = newton(
      [&](const Vec& vt) -> Vec {
        return rho_t * Ld.grad_a(q_next, vt) -
               extract_R(G, q_next, vt, config).transpose() * Ld.grad_b(q_next, vt) +
               carried;
      },
      seed, config, "groupoid_del_step");
  return {q_next, v_next};
}

Vec lie_poisson_update(const LieGroupModel& group, const Vec& v, const Vec& mu) {
  require_model(group.model, "lie_poisson_update");
  if (group.model.base_dim != 0)
    throw InvalidArgument("lie_poisson_update: the model must be a Lie group "
                          "(base_dim 0)");
  if (!group.coad) throw InvalidArgument("lie_poisson_update: model lacks coad");
  require_chart(group.model, v, "lie_poisson_update");
  if (mu.size() != group.model.fiber_dim)
    throw InvalidArgument("lie_poisson_update: momentum has wrong dimension");
  const Vec out = group.coad(v, mu);
  if (out.size() != mu.size())
    throw InvalidArgument("lie_poisson_update: coad output has wrong dimension");
  return out;
}

std::vector<Vec> discrete_euler_poincare_solve(const LieGroupModel& group,
                                               const ScalarField& Ld, const Vec& v0,
                                               int horizon,
                                               const SolverConfig& config) {
  require_model(group.model, "discrete_euler_poincare_solve");
  if (group.model.base_dim != 0)
    throw InvalidArgument("discrete_euler_poincare_solve: the model must be a Lie "
                          "group (base_dim 0)");
  require_lagrangian(group.model, Ld, "discrete_euler_poincare_solve");
  if (horizon < 0)
    throw InvalidArgument("discrete_euler_poincare_solve: horizon must be "
                          "nonnegative");
  if (horizon == 0) return {};
  require_chart(group.model, v0, "discrete_euler_poincare_solve");

  std::vector<Vec> chart;
  chart.reserve(static_cast<std::size_t>(horizon) + 1);
  chart.push_back(v0);
  const Vec base(0);
  for (int k = 0; k < horizon; ++k)
    chart.push_back(
        groupoid_del_step(group.model, Ld, {base, chart.back()}, std::nullopt, config)
            .v);
  return chart;
}

Vec euler_poincare_momentum(const LieGroupModel& group, const ScalarField& Ld,
                            const Vec& v, const SolverConfig& config) {
  require_model(group.model, "euler_poincare_momentum");
  require_lagrangian(group.model, Ld, "euler_poincare_momentum");
  require_chart(group.model, v, "euler_poincare_momentum");
  const Vec base(0);
  return extract_R(group.model, base, v, config).transpose() * Ld.grad_b(base, v);
}

GroupoidConstrainedStep groupoid_constrained_step(
    const GroupoidModel& G, const ScalarField& Ld, const std::vector<ScalarField>& phi,
    const GroupoidElement& prev, const Vec& lambda_prev,
    const std::optional<Vec>& v_guess, const std::optional<Vec>& lambda_guess,
    const SolverConfig& config) {
  require_model(G, "groupoid_constrained_step");
  require_lagrangian(G, Ld, "groupoid_constrained_step");
  require_base(G, prev.q, "groupoid_constrained_step");
  require_chart(G, prev.v, "groupoid_constrained_step");

  const int m = G.fiber_dim;
  const int r = static_cast<int>(phi.size());
  if (r > m)
    throw InvalidArgument("groupoid_constrained_step: more constraints than fiber "
                          "dimensions");
  if (lambda_prev.size() != r)
    throw InvalidArgument("groupoid_constrained_step: one previous multiplier per "
                          "constraint");
  for (const ScalarField& constraint : phi)
    if (constraint.dim_a() != G.base_dim || constraint.dim_b() != m)
      throw InvalidArgument("groupoid_constrained_step: constraints must consume "
                            "(q, v)");

  if (r == 0) return {groupoid_del_step(G, Ld, prev, v_guess, config), Vec(0)};

  const Vec q_k = G.target_map(prev.q, prev.v);

  // Carried term at γ(k−1): L(γ(k−1))ᵀ ∂(L_d + λ^k Φ)/∂v(γ(k−1)).
  Vec grad_prev = Ld.grad_b(prev.q, prev.v);
  for (int a = 0; a < r; ++a)
    grad_prev +=
        lambda_prev[a] * phi[static_cast<std::size_t>(a)].grad_b(prev.q, prev.v);
  const Vec carried = extract_L(G, prev.q, prev.v, config).transpose() * grad_prev;

  const Mat rho_t = extract_rho(G, q_k, config).transpose();

  const auto residual = [&](const Vec& z) -> Vec {
    const Vec v = z.head(m);
    const Vec lambda = z.tail(r);
    Vec grad_q = Ld.grad_a(q_k, v);
    Vec grad_v = Ld.grad_b(q_k, v);
    Vec feasibility(r);
    for (int a = 0; a < r; ++a) {
      const ScalarField& constraint = phi[static_cast<std::size_t>(a)];
      grad_q += lambda[a] * constraint.grad_a(q_k, v);
      grad_v += lambda[a] * constraint.grad_b(q_k, v);
      feasibility[a] = constraint(q_k, v);
    }
    Vec out(m + r);
    out.head(m) =
        rho_t * grad_q - extract_R(G, q_k, v, config).transpose() * grad_v + carried;
    out.tail(r) = feasibility;
    return out;
  };

  const Vec v_seed = v_guess ? *v_guess : prev.v;
  const Vec lambda_seed = lambda_guess ? *lambda_guess : Vec(Vec::Zero(r));
  require_chart(G, v_seed, "groupoid_constrained_step (guess)");
  if (lambda_seed.size() != r)
    throw InvalidArgument("groupoid_constrained_step: multiplier guess dimension "
                          "mismatch");
  Vec seed(m + r);
  seed.head(m) = v_seed;
  seed.tail(r) = lambda_seed;

  const Vec z = newton(residual, seed, config, "groupoid_constrained_step");
  return {{q_k, z.head(m)}, z.tail(r)};
}

namespace {

struct OcpShape {
  int N = 0;
  int n = 0;
  int m = 0;
  int controls = 0;
  bool free_terminal = true;
};

OcpShape ocp_shape(const GroupoidModel& G, const ControlField& gamma_d,
                   const ScalarField& Ld, int horizon,
                   const TerminalCondition& terminal, const std::string& who) {
  require_model(G, who);
  if (horizon < 1) throw InvalidArgument(who + ": horizon must be at least 1");
  if (Ld.dim_a() != G.base_dim || Ld.dim_b() != gamma_d.control_dim)
    throw InvalidArgument(who + ": cost must consume (q, u)");
  if (gamma_d.target_dim != G.fiber_dim)
    throw InvalidArgument(who + ": control section must land in the fiber chart");
  if (terminal.fixed_q && terminal.fixed_q->size() != G.base_dim)
    throw InvalidArgument(who + ": terminal point dimension mismatch");
  return {horizon, G.base_dim, G.fiber_dim, gamma_d.control_dim,
          !terminal.fixed_q.has_value()};
}

GroupoidOcpResidual assemble_ocp(const GroupoidModel& G, const ControlField& gamma_d,
                                 const ScalarField& Ld, const std::vector<Vec>& states,
                                 const std::vector<Vec>& costates,
                                 const std::vector<Vec>& controls,
                                 const TerminalCondition& terminal, const OcpShape& shape,
                                 const SolverConfig& config) {
  const int N = shape.N;
  GroupoidOcpResidual out;
  out.stationarity.reserve(static_cast<std::size_t>(N));
  out.dynamics.reserve(static_cast<std::size_t>(N));
  out.junction.reserve(static_cast<std::size_t>(N > 0 ? N - 1 : 0));

  std::vector<Vec> fiber(static_cast<std::size_t>(N));
  for (int k = 0; k < N; ++k) {
    const Vec& q = states[static_cast<std::size_t>(k)];
    const Vec& u = controls[static_cast<std::size_t>(k)];
    const Vec& mu2 = costates[static_cast<std::size_t>(k)];
    fiber[static_cast<std::size_t>(k)] = gamma_d.gamma(q, u);
    out.stationarity.push_back(control_jac_u(gamma_d, q, u, config).transpose() * mu2 -
                               Ld.grad_b(q, u));
    out.dynamics.push_back(states[static_cast<std::size_t>(k) + 1] -
                           G.target_map(q, fiber[static_cast<std::size_t>(k)]));
  }
  for (int k = 1; k <= N - 1; ++k) {
    const Vec& q = states[static_cast<std::size_t>(k)];
    const Vec& u = controls[static_cast<std::size_t>(k)];
    const Vec& mu2 = costates[static_cast<std::size_t>(k)];
    const Vec mu1 =
        Ld.grad_a(q, u) - control_jac_q(gamma_d, q, u, config).transpose() * mu2;
    out.junction.push_back(
        extract_rho(G, q, config).transpose() * mu1 +
        extract_L(G, states[static_cast<std::size_t>(k) - 1],
                  fiber[static_cast<std::size_t>(k) - 1], config)
                .transpose() *
            costates[static_cast<std::size_t>(k) - 1] -
        extract_R(G, q, fiber[static_cast<std::size_t>(k)], config).transpose() * mu2);
  }
  if (shape.free_terminal)
    out.terminal = costates[static_cast<std::size_t>(N) - 1];
  else
    out.terminal = states[static_cast<std::size_t>(N)] - *terminal.fixed_q;
  return out;
}

}  // namespace

GroupoidOcpResidual groupoid_ocp_residual(const GroupoidModel& G,
                                          const ControlField& gamma_d,
                                          const ScalarField& Ld,
                                          const std::vector<Vec>& states,
                                          const std::vector<Vec>& costates,
                                          const std::vector<Vec>& controls,
                                          const TerminalCondition& terminal,
                                          const SolverConfig& config) {
  const int N = static_cast<int>(controls.size());
  const OcpShape shape =
      ocp_shape(G, gamma_d, Ld, N > 0 ? N : 0, terminal, "groupoid_ocp_residual");
  if (states.size() != static_cast<std::size_t>(N) + 1 ||
      costates.size() != static_cast<std::size_t>(N))
    throw InvalidArgument("groupoid_ocp_residual: need N+1 states and N costates for "
                          "N controls");
  for (const Vec& q : states)
    if (q.size() != shape.n)
      throw InvalidArgument("groupoid_ocp_residual: state dimension mismatch");
  for (const Vec& mu : costates)
    if (mu.size() != shape.m)
      throw InvalidArgument("groupoid_ocp_residual: costate dimension mismatch");
  for (const Vec& u : controls)
    if (u.size() != shape.controls)
      throw InvalidArgument("groupoid_ocp_residual: control dimension mismatch");
  return assemble_ocp(G, gamma_d, Ld, states, costates, controls, terminal, shape,
                      config);
}

GroupoidOcpSolution groupoid_ocp_solve(const GroupoidModel& G,
                                       const ControlField& gamma_d,
                                       const ScalarField& Ld, const Vec& q0,
                                       int horizon, const TerminalCondition& terminal,
                                       const SolverConfig& config) {
  const OcpShape shape =
      ocp_shape(G, gamma_d, Ld, horizon, terminal, "groupoid_ocp_solve");
  const int N = shape.N;
  const int n = shape.n;
  const int m = shape.m;
  const int c = shape.controls;
  if (q0.size() != n) throw InvalidArgument("groupoid_ocp_solve: q0 dimension mismatch");
  if (!shape.free_terminal && m != n)
    throw InvalidArgument("groupoid_ocp_solve: a fixed terminal point balances the "
                          "system only when fiber_dim equals base_dim; use a free "
                          "endpoint");

  // Unknown layout: u(0..N−1), μ₂(0..N−1), q(1..N−1), then q_N when free.
  const int mu_base = N * c;
  const int state_base = mu_base + N * m;
  const int unknowns = state_base + (N - 1) * n + (shape.free_terminal ? n : 0);

  const auto unpack = [&](const Vec& z) {
    GroupoidOcpSolution sol;
    sol.controls.reserve(static_cast<std::size_t>(N));
    sol.costates.reserve(static_cast<std::size_t>(N));
    sol.states.reserve(static_cast<std::size_t>(N) + 1);
    for (int k = 0; k < N; ++k) sol.controls.push_back(z.segment(k * c, c));
    for (int k = 0; k < N; ++k) sol.costates.push_back(z.segment(mu_base + k * m, m));
    sol.states.push_back(q0);
    for (int k = 1; k <= N - 1; ++k)
      sol.states.push_back(z.segment(state_base + (k - 1) * n, n));
    if (N >= 1)
      sol.states.push_back(shape.free_terminal
                               ? Vec(z.segment(state_base + (N - 1) * n, n))
                               : *terminal.fixed_q);
    return sol;
  };

  const auto residual = [&](const Vec& z) -> Vec {
    const GroupoidOcpSolution sol = unpack(z);
    const GroupoidOcpResidual blocks = assemble_ocp(
        G, gamma_d, Ld, sol.states, sol.costates, sol.controls, terminal, shape, config);
    Vec out(unknowns);
    int row = 0;
    for (const Vec& block : blocks.stationarity) {
      out.segment(row, block.size()) = block;
      row += static_cast<int>(block.size());
    }
    for (const Vec& block : blocks.dynamics) {
      out.segment(row, block.size()) = block;
      row += static_cast<int>(block.size());
    }
    for (const Vec& block : blocks.junction) {
      out.segment(row, block.size()) = block;
      row += static_cast<int>(block.size());
    }
    if (shape.free_terminal) {
      out.segment(row, blocks.terminal.size()) = blocks.terminal;
      row += static_cast<int>(blocks.terminal.size());
    }
    return out;
  };

  Vec z0 = Vec::Zero(unknowns);
  const int interior = N - 1 + (shape.free_terminal ? 1 : 0);
  for (int k = 1; k <= interior; ++k) {
    Vec q = q0;
    if (!shape.free_terminal)
      q = q0 + (static_cast<double>(k) / N) * (*terminal.fixed_q - q0);
    z0.segment(state_base + (k - 1) * n, n) = q;
  }

  const Vec z = newton(residual, z0, config, "groupoid_ocp_solve");

  // Reject rank-deficient systems that converged trivially (for instance a
  // control section with no u-dependence and a cost that cannot pin u).
  linsolve(fd_jac(residual, z, config), Vec::Zero(unknowns), config,
           "groupoid_ocp_solve (regularity check)");
  return unpack(z);
}

GroupoidModel pair_groupoid(int n) {
  if (n < 1) throw InvalidArgument("pair_groupoid: dimension must be at least 1");
  GroupoidModel G;
  G.base_dim = n;
  G.fiber_dim = n;
  G.target_map = [](const Vec& q, const Vec& v) -> Vec { return q + v; };
  G.product_map = [](const Vec&, const Vec& v, const Vec& vt) -> Vec { return v + vt; };
  G.anchor_override = [n](const Vec&) -> Mat { return Mat::Identity(n, n); };
  G.left_override = [n](const Vec&, const Vec&) -> Mat { return Mat::Identity(n, n); };
  G.right_override = [n](const Vec&, const Vec&) -> Mat { return Mat::Identity(n, n); };
  return G;
}

Mat so3_hat(const Vec& v) {
  if (v.size() != 3) throw InvalidArgument("so3_hat: need a 3-vector");
  Mat K = Mat::Zero(3, 3);
  K(0, 1) = -v[2];
  K(0, 2) = v[1];
  K(1, 0) = v[2];
  K(1, 2) = -v[0];
  K(2, 0) = -v[1];
  K(2, 1) = v[0];
  return K;
}

Mat so3_exp(const Vec& v) {
  const double theta = v.norm();
  const Mat K = so3_hat(v);
  if (theta < 1e-8) return Mat::Identity(3, 3) + K + 0.5 * K * K;
  const double a = std::sin(theta) / theta;
  const double b = (1 - std::cos(theta)) / (theta * theta);
  return Mat::Identity(3, 3) + a * K + b * (K * K);
}

Vec so3_log(const Mat& R) {
  if (R.rows() != 3 || R.cols() != 3)
    throw InvalidArgument("so3_log: need a 3x3 rotation matrix");
  const double cosine = std::clamp((R.trace() - 1.0) / 2.0, -1.0, 1.0);
  const double theta = std::acos(cosine);
  Vec w(3);
  w << R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1);
  if (theta < 1e-7) return 0.5 * (1.0 + theta * theta / 6.0) * w;
  if (theta > M_PI - 1e-6)
    throw ChartError("so3_log: rotation angle at the logarithm branch locus");
  return (theta / (2.0 * std::sin(theta))) * w;
}

LieGroupModel so3_group() {
  const double bound = M_PI - 0.1;
  GroupoidModel G;
  G.base_dim = 0;
  G.fiber_dim = 3;
  G.chart_radius = bound;
  G.target_map = [](const Vec&, const Vec&) -> Vec { return Vec(0); };
  G.product_map = [bound](const Vec&, const Vec& v, const Vec& vt) -> Vec {
    if (!(v.norm() < bound) || !(vt.norm() < bound))
      throw ChartError("so3 product: argument outside the exponential chart");
    const Mat R = so3_exp(v) * so3_exp(vt);
    const double cosine = std::clamp((R.trace() - 1.0) / 2.0, -1.0, 1.0);
    if (!(std::acos(cosine) < bound))
      throw ChartError("so3 product: result outside the exponential chart");
    return so3_log(R);
  };

  LieGroupModel group;
  group.model = G;
  group.coad = [](const Vec& v, const Vec& mu) -> Vec {
    if (v.size() != 3 || mu.size() != 3)
      throw InvalidArgument("so3 coad: need 3-vectors");
    return so3_exp(v).transpose() * mu;
  };
  return group;
}

}  // namespace gvc
