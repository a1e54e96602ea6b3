#include "gvc/continuous.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace gvc {

namespace {

void require_jet(const AlgebroidStructure& structure, const Jet& jet) {
  if (jet.q.size() != structure.base_dim || jet.qdot.size() != structure.base_dim ||
      jet.y.size() != structure.fiber_rank || jet.ydot.size() != structure.fiber_rank)
    throw InvalidArgument("jet: dimensions do not match the structure");
  const Vec defect =
      admissibility_defect(structure, jet.qdot, {Point{jet.q}, jet.y});
  if (structure.base_dim > 0 && defect.cwiseAbs().maxCoeff() > 1e-8)
    throw InvalidArgument("jet: not admissible (q̇ differs from ρ(q)y)");
}

std::string state_text(const Vec& q, const Vec& y) {
  std::string out = "q=(";
  for (Eigen::Index i = 0; i < q.size(); ++i)
    out += (i ? "," : "") + std::to_string(q[i]);
  out += "), y=(";
  for (Eigen::Index i = 0; i < y.size(); ++i)
    out += (i ? "," : "") + std::to_string(y[i]);
  return out + ")";
}

}  // namespace

Vec el_residual(const AlgebroidStructure& structure, const MomentumField& mu_field,
                const Jet& jet, const SolverConfig& config) {
  require_jet(structure, jet);
  const CotangentValue mu = mu_field(jet.q, jet.y);
  if (mu.mu_base.size() != structure.base_dim ||
      mu.mu_fiber.size() != structure.fiber_rank)
    throw InvalidArgument("el_residual: momentum field has wrong dimensions");

  // d/dt μ̃ by the chain rule with FD partials of the fiber momentum.
  const Mat dmu_dq = fd_jac(
      [&](const Vec& z) { return mu_field(z, jet.y).mu_fiber; }, jet.q, config);
  const Mat dmu_dy = fd_jac(
      [&](const Vec& z) { return mu_field(jet.q, z).mu_fiber; }, jet.y, config);
  const Vec mu_fiber_dot = dmu_dq * jet.qdot + dmu_dy * jet.ydot;

  const Mat rho = structure.anchor(jet.q);
  const StructureTensor C = structure.structure(jet.q);
  const Vec residual =
      mu_fiber_dot - rho.transpose() * mu.mu_base + bracket_term(C, jet.y, mu.mu_fiber);
  if (!residual.allFinite()) throw Error("el_residual: non-finite evaluation");
  return residual;
}

Vec hamel_residual(const AlgebroidStructure& structure, const ScalarField& L,
                   const Jet& jet) {
  require_jet(structure, jet);
  if (L.dim_a() != structure.base_dim || L.dim_b() != structure.fiber_rank)
    throw InvalidArgument("hamel_residual: Lagrangian has wrong dimensions");
  const Vec momentum_dot =
      L.hess_ba(jet.q, jet.y) * jet.qdot + L.hess_bb(jet.q, jet.y) * jet.ydot;
  const Mat rho = structure.anchor(jet.q);
  const StructureTensor C = structure.structure(jet.q);
  return momentum_dot - rho.transpose() * L.grad_a(jet.q, jet.y) +
         bracket_term(C, jet.y, L.grad_b(jet.q, jet.y));
}

StateRhs hamel_vector_field(const AlgebroidStructure& structure, const ScalarField& L,
                            const SolverConfig& config) {
  if (L.dim_a() != structure.base_dim || L.dim_b() != structure.fiber_rank)
    throw InvalidArgument("hamel_vector_field: Lagrangian has wrong dimensions");
  return [structure, L, config](double, const Vec& q, const Vec& y) {
    const Mat rho = structure.anchor(q);
    const Vec qdot = rho * y;
    const Vec rhs = rho.transpose() * L.grad_a(q, y) -
                    bracket_term(structure.structure(q), y, L.grad_b(q, y)) -
                    L.hess_ba(q, y) * qdot;
    const Mat mass = L.hess_bb(q, y);
    // A fiber Hessian at the finite-difference noise floor means a degenerate
    // Lagrangian even when the matrix is formally well conditioned (a 1×1
    // noise entry has a perfect condition number).
    if (mass.size() > 0) {
      const double mass_scale = mass.cwiseAbs().maxCoeff();
      const double noise_floor =
          1e-5 * std::max(1.0, L.grad_b(q, y).lpNorm<Eigen::Infinity>());
      if (mass_scale < noise_floor)
        throw SingularMatrixError("hamel_vector_field: degenerate Lagrangian (fiber "
                                  "Hessian at the noise floor) at " +
                                      state_text(q, y),
                                  0.0);
    }
    Vec ydot;
    try {
      ydot = linsolve(mass, rhs, config, "hamel_vector_field").x;
    } catch (const SingularMatrixError& err) {
      throw SingularMatrixError("hamel_vector_field: degenerate Lagrangian (singular "
                                "fiber Hessian) at " + state_text(q, y),
                                err.rcond);
    }
    return std::pair<Vec, Vec>{qdot, ydot};
  };
}

StateRhs hamilton_vector_field(const AlgebroidStructure& structure, const ScalarField& H,
                               const SolverConfig&) {
  if (H.dim_a() != structure.base_dim || H.dim_b() != structure.fiber_rank)
    throw InvalidArgument("hamilton_vector_field: Hamiltonian has wrong dimensions");
  return [structure, H](double, const Vec& q, const Vec& p) {
    const Mat rho = structure.anchor(q);
    const Vec dH_dp = H.grad_b(q, p);
    const Vec qdot = rho * dH_dp;
    const Vec pdot = -(rho.transpose() * H.grad_a(q, p)) -
                     bracket_term(structure.structure(q), dH_dp, p);
    return std::pair<Vec, Vec>{qdot, pdot};
  };
}

ScalarField legendre_transform(const AlgebroidStructure& structure, const ScalarField& L,
                               const SolverConfig& config) {
  if (L.dim_a() != structure.base_dim || L.dim_b() != structure.fiber_rank)
    throw InvalidArgument("legendre_transform: Lagrangian has wrong dimensions");

  // y*(q,p) solving p = ∂L/∂y, seeded at p (exact for unit-mass kinetic terms).
  auto invert = [L, config](const Vec& q, const Vec& p) {
    return newton([&](const Vec& y) -> Vec { return L.grad_b(q, y) - p; }, p, config,
                  "legendre_transform (fiber solve)");
  };

  ScalarField H(L.dim_a(), L.dim_b(), [L, invert](const Vec& q, const Vec& p) {
    const Vec y = invert(q, p);
    return p.dot(y) - L(q, y);
  });
  // Stationarity of y ↦ p·y − L at y* makes these gradients exact.
  H.set_grad_a([L, invert](const Vec& q, const Vec& p) -> Vec {
    return -L.grad_a(q, invert(q, p));
  });
  H.set_grad_b([invert](const Vec& q, const Vec& p) -> Vec { return invert(q, p); });
  return H;
}

VakonomicRhs vakonomic_vector_field(const AlgebroidStructure& structure,
                                    const ScalarField& l, const ConstraintMap& phi,
                                    int constraint_count, const SolverConfig& config) {
  const int n = structure.base_dim;
  const int m = structure.fiber_rank;
  const int r = constraint_count;
  const int s = m - r;  // unconstrained fiber components
  if (r < 0 || r > m)
    throw InvalidArgument("vakonomic_vector_field: need 0 <= r <= fiber rank");
  if (l.dim_a() != n || l.dim_b() != s)
    throw InvalidArgument("vakonomic_vector_field: l must consume (q, y_free)");

  return [structure, l, phi, n, m, r, s, config](double, const VakonomicState& state) {
    if (state.q.size() != n || state.y_free.size() != s || state.mu_con.size() != r)
      throw InvalidArgument("vakonomic state: dimension mismatch");
    const Vec& q = state.q;
    const Vec& yf = state.y_free;
    const Vec& mu = state.mu_con;

    const Vec phi_val = r > 0 ? phi(q, yf) : Vec(0);
    if (phi_val.size() != r)
      throw InvalidArgument("vakonomic_vector_field: phi output must have length r");
    Vec y_full(m);
    y_full.head(s) = yf;
    y_full.tail(r) = phi_val;

    const Mat rho = structure.anchor(q);
    const StructureTensor C = structure.structure(q);
    const Vec qdot = rho * y_full;

    // c_i = ∂l/∂q^i − μ̃_α ∂Φ^α/∂q^i.
    Vec c = l.grad_a(q, yf);
    Mat jphi_q(r, n), jphi_y(r, s);
    if (r > 0) {
      jphi_q = fd_jac([&](const Vec& z) { return phi(z, yf); }, q, config);
      jphi_y = fd_jac([&](const Vec& z) { return phi(q, z); }, yf, config);
      c -= jphi_q.transpose() * mu;
    }

    // Full momentum covector: bracketed momenta on the free slots, multiplier
    // momenta on the constrained ones.
    Vec mu_full(m);
    mu_full.head(s) = l.grad_b(q, yf);
    if (r > 0) {
      mu_full.head(s) -= jphi_y.transpose() * mu;
      mu_full.tail(r) = mu;
    }
    const Vec bracket = bracket_term(C, y_full, mu_full);

    const Vec rhs_free = rho.leftCols(s).transpose() * c - bracket.head(s);
    const Vec mu_dot = r > 0
                           ? Vec(rho.rightCols(r).transpose() * c - bracket.tail(r))
                           : Vec(0);

    // Expand d/dt of the bracketed momentum π(q, y_free; μ̃) by the chain rule
    // and solve the mass-matrix block for ẏ_free.
    Vec target = rhs_free;
    Mat mass(s, s);
    Mat dpi_dq(s, n);
    if (r == 0) {
      mass = l.hess_bb(q, yf);
      dpi_dq = l.hess_ba(q, yf);
    } else {
      const auto pi = [&](const Vec& qq, const Vec& yy) -> Vec {
        const Mat jy = fd_jac([&](const Vec& z) { return phi(qq, z); }, yy, config);
        return l.grad_b(qq, yy) - jy.transpose() * mu;
      };
      if (l.grad_b_is_analytic()) {
        mass = fd_jac([&](const Vec& z) { return pi(q, z); }, yf, config);
        dpi_dq = fd_jac([&](const Vec& z) { return pi(z, yf); }, q, config);
      } else {
        mass = fd_jac_nested([&](const Vec& z) { return pi(q, z); }, yf, config);
        dpi_dq = fd_jac_nested([&](const Vec& z) { return pi(z, yf); }, q, config);
      }
      target += jphi_y.transpose() * mu_dot;
    }
    target -= dpi_dq * qdot;

    Vec yf_dot;
    try {
      yf_dot = linsolve(mass, target, config, "vakonomic_vector_field").x;
    } catch (const SingularMatrixError& err) {
      throw SingularMatrixError(
          "vakonomic_vector_field: singular reduced mass matrix at " +
              state_text(q, yf),
          err.rcond);
    }
    return VakonomicDerivative{qdot, yf_dot, mu_dot};
  };
}

namespace {

// Poisson bracket {f,g} = ∂f/∂q·∂g/∂p − ∂f/∂p·∂g/∂q on the coordinate phase space.
double poisson(const ScalarField& f, const ScalarField& g, const Vec& q, const Vec& p) {
  return f.grad_a(q, p).dot(g.grad_b(q, p)) - f.grad_b(q, p).dot(g.grad_a(q, p));
}

}  // namespace

Vec dirac_secondary_residual(const ScalarField& H, const std::vector<ScalarField>& phi,
                             const Vec& q, const Vec& p, const Vec& lambda) {
  const int r = static_cast<int>(phi.size());
  if (lambda.size() != r)
    throw InvalidArgument("dirac_secondary_residual: one multiplier per constraint");
  Vec residual(r);
  for (int a = 0; a < r; ++a) {
    double value = poisson(phi[static_cast<std::size_t>(a)], H, q, p);
    for (int b = 0; b < r; ++b)
      value += lambda[b] * poisson(phi[static_cast<std::size_t>(a)],
                                   phi[static_cast<std::size_t>(b)], q, p);
    residual[a] = value;
  }
  return residual;
}

Vec dirac_multipliers(const ScalarField& H, const std::vector<ScalarField>& phi,
                      const Vec& q, const Vec& p, const SolverConfig& config) {
  const int r = static_cast<int>(phi.size());
  Mat brackets(r, r);
  Vec rhs(r);
  for (int a = 0; a < r; ++a) {
    rhs[a] = -poisson(phi[static_cast<std::size_t>(a)], H, q, p);
    for (int b = 0; b < r; ++b)
      brackets(a, b) = poisson(phi[static_cast<std::size_t>(a)],
                               phi[static_cast<std::size_t>(b)], q, p);
  }
  return linsolve(brackets, rhs, config, "dirac_multipliers (constraint brackets)").x;
}

double pontryagin_hamiltonian(const ControlField& gamma, const ScalarField& L,
                              const PontryaginState& state) {
  return state.mu_fiber.dot(gamma.gamma(state.q, state.u)) - L(state.q, state.u);
}

PontryaginResidual pontryagin_residual(const AlgebroidStructure& structure,
                                       const ControlField& gamma, const ScalarField& L,
                                       const PontryaginState& state, const Vec& qdot,
                                       const Vec& mu_fiber_dot,
                                       const SolverConfig& config) {
  const Vec& q = state.q;
  const Vec& mu = state.mu_fiber;
  const Vec& u = state.u;
  if (q.size() != structure.base_dim || mu.size() != structure.fiber_rank ||
      u.size() != gamma.control_dim)
    throw InvalidArgument("pontryagin_residual: dimension mismatch");

  const Vec gamma_val = gamma.gamma(q, u);
  const Mat dgamma_du = control_jac_u(gamma, q, u, config);
  const Mat dgamma_dq = control_jac_q(gamma, q, u, config);

  PontryaginResidual out;
  out.stationarity = dgamma_du.transpose() * mu - L.grad_b(q, u);
  const Vec dH_dq = dgamma_dq.transpose() * mu - L.grad_a(q, u);
  const Mat rho = structure.anchor(q);
  out.costate_defect = mu_fiber_dot + rho.transpose() * dH_dq +
                       bracket_term(structure.structure(q), gamma_val, mu);
  out.primal_defect = qdot - rho * gamma_val;
  return out;
}

Trajectory pontryagin_shooting(const AlgebroidStructure& structure,
                               const ControlField& gamma, const ScalarField& L,
                               const Vec& q0, const TerminalCondition& terminal,
                               double T, const SolverConfig& config) {
  if (!(T > 0)) throw InvalidArgument("pontryagin_shooting: horizon must be positive");
  if (q0.size() != structure.base_dim)
    throw InvalidArgument("pontryagin_shooting: q0 has wrong dimension");
  if (terminal.fixed_q && terminal.fixed_q->size() != structure.base_dim)
    throw InvalidArgument("pontryagin_shooting: terminal point has wrong dimension");

  const int n = structure.base_dim;
  const int m = structure.fiber_rank;
  const int k = gamma.control_dim;

  // Controls eliminated pointwise: Newton on ∂H/∂u = 0 given (q, μ̃).
  auto solve_u = [&, gamma, L, config](const Vec& q, const Vec& mu, const Vec& seed) {
    return newton(
        [&](const Vec& u) -> Vec {
          return control_jac_u(gamma, q, u, config).transpose() * mu - L.grad_b(q, u);
        },
        seed, config, "pontryagin_shooting (control solve)");
  };

  auto rhs = [&](double, const Vec& x) -> Vec {
    const Vec q = x.head(n);
    const Vec mu = x.segment(n, m);
    const Vec u = solve_u(q, mu, x.tail(k));
    const Vec gamma_val = gamma.gamma(q, u);
    const Vec dH_dq = control_jac_q(gamma, q, u, config).transpose() * mu - L.grad_a(q, u);
    const Mat rho = structure.anchor(q);
    Vec dx(n + m + k);
    dx.head(n) = rho * gamma_val;
    dx.segment(n, m) = -(rho.transpose() * dH_dq) -
                       bracket_term(structure.structure(q), gamma_val, mu);
    // The trailing control block rides along so samples carry u; its
    // derivative is irrelevant because u is re-solved from (q, μ̃) pointwise.
    dx.tail(k) = Vec::Zero(k);
    return dx;
  };

  auto integrate = [&](const Vec& mu0) {
    Vec x0(n + m + k);
    x0.head(n) = q0;
    x0.segment(n, m) = mu0;
    x0.tail(k) = solve_u(q0, mu0, Vec::Zero(k));
    return rk4(rhs, x0, 0.0, T, config.rk_dt);
  };

  const Vec mu0 = newton(
      [&](const Vec& guess) -> Vec {
        const Vec final_state = integrate(guess).states.back();
        if (terminal.fixed_q) return final_state.head(n) - *terminal.fixed_q;
        return final_state.segment(n, m);
      },
      Vec::Zero(m), config, "pontryagin_shooting (boundary solve)");

  Trajectory flow = integrate(mu0);
  // Refresh the stored controls from (q, μ̃) at every sample.
  for (Vec& x : flow.states)
    x.tail(k) = solve_u(x.head(n), x.segment(n, m), x.tail(k));

  std::vector<std::string> labels;
  for (int i = 1; i <= n; ++i) labels.push_back("q" + std::to_string(i));
  for (int i = 1; i <= m; ++i) labels.push_back("mu" + std::to_string(i));
  for (int i = 1; i <= k; ++i) labels.push_back("u" + std::to_string(i));
  flow.labels = std::move(labels);
  validate(flow);
  return flow;
}

}  // namespace gvc
