#include "gvc/checks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <set>

#include "gvc/catalog.hpp"
#include "gvc/continuous.hpp"
#include "gvc/csv.hpp"
#include "gvc/discrete.hpp"
#include "gvc/expr.hpp"
#include "gvc/groupoid.hpp"
#include "gvc/problem.hpp"

namespace gvc {
namespace {

void require(bool condition, const std::string& what) {
  if (!condition) {
    throw Error(what);
  }
}

void require_le(double value, double bound, const std::string& what) {
  if (!(value <= bound)) {
    char buf[64];
    std::snprintf(buf, sizeof buf, " (%.3e > %.3e)", value, bound);
    throw Error(what + buf);
  }
}

Vec random_vec(std::mt19937_64& rng, int size, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Vec out(size);
  for (int i = 0; i < size; ++i) out(i) = dist(rng);
  return out;
}

double max_abs(const Mat& m) { return m.cwiseAbs().maxCoeff(); }

// Quadratic test Lagrangian with analytic gradients on an (n, m) chart:
// L = ½ yᵀA y + bᵀy + ½ c |q|² + dᵀq with A symmetric positive definite.
ScalarField quadratic_lagrangian(int n, int m, std::mt19937_64& rng) {
  Mat root = Mat::NullaryExpr(m, m, [&rng]() {
    std::uniform_real_distribution<double> dist(-0.3, 0.3);
    return dist(rng);
  });
  Mat A = root * root.transpose() + Mat::Identity(m, m);
  Vec b = random_vec(rng, m, -1, 1);
  double c = std::uniform_real_distribution<double>(0.2, 1.5)(rng);
  Vec d = random_vec(rng, n, -1, 1);
  ScalarField L(n, m, [A, b, c, d](const Vec& q, const Vec& y) {
    return 0.5 * y.dot(A * y) + b.dot(y) + 0.5 * c * q.squaredNorm() + d.dot(q);
  });
  L.set_grad_a([c, d](const Vec& q, const Vec&) { return Vec(c * q + d); });
  L.set_grad_b([A, b](const Vec&, const Vec& y) { return Vec(A * y + b); });
  return L;
}

ScalarField sho_lagrangian() {
  ScalarField L(1, 1, [](const Vec& q, const Vec& y) {
    return 0.5 * y(0) * y(0) - 0.5 * q(0) * q(0);
  });
  L.set_grad_a([](const Vec& q, const Vec&) { return Vec(-q); });
  L.set_grad_b([](const Vec&, const Vec& y) { return Vec(y); });
  return L;
}

// --- numerics ---------------------------------------------------------------

void check_rk4_order() {
  OdeRhs rhs = [](double, const Vec& x) { return x; };
  Vec x0 = Vec::Ones(1);
  auto error_at = [&](double dt) {
    Trajectory t = rk4(rhs, x0, 0, 1, dt);
    return std::abs(t.states.back()(0) - std::exp(1.0));
  };
  double coarse = error_at(0.1);
  double fine = error_at(0.05);
  double ratio = coarse / fine;
  require(ratio >= 12 && ratio <= 20,
          "rk4 halving ratio " + std::to_string(ratio) + " outside [12, 20]");
}

void check_newton_quadratic() {
  // Mirrors the library's Newton step (finite-difference derivative) on
  // f = x² − 2 and inspects the error tail for quadratic contraction.
  SolverConfig config;
  auto f = [](double x) { return x * x - 2; };
  double x = 1;
  std::vector<double> errors = {std::abs(x - std::sqrt(2.0))};
  for (int i = 0; i < 4; ++i) {
    double h = fd_step(x, config.fd_step_scale);
    double slope = (f(x + h) - f(x - h)) / (2 * h);
    x -= f(x) / slope;
    errors.push_back(std::abs(x - std::sqrt(2.0)));
  }
  double prev = errors[errors.size() - 2];
  double last = errors.back();
  require_le(last, prev * prev * 10, "newton tail not quadratic on x^2 - 2");
  // The library solver must reach the same root within tolerance.
  Vec root = newton([](const Vec& v) { return Vec((v.array() * v.array() - 2).matrix()); },
                    Vec::Ones(1), config, "check");
  require_le(std::abs(root(0) - std::sqrt(2.0)), 1e-9, "newton root inaccurate");
}

void check_fd_gradient() {
  auto f = [](const Vec& x) {
    return x(0) * x(0) * x(0) + 2 * x(0) * x(1) * x(1) - 5 * x(1) + 7;
  };
  Vec x(2);
  x << 1.2, -0.7;
  Vec grad = fd_grad(f, x);
  Vec exact(2);
  exact << 3 * x(0) * x(0) + 2 * x(1) * x(1), 4 * x(0) * x(1) - 5;
  require_le((grad - exact).lpNorm<Eigen::Infinity>(), 1e-8,
             "fd_grad disagrees with the analytic polynomial gradient");
}

void check_linsolve_residual() {
  std::mt19937_64 rng(2026);
  for (int trial = 0; trial < 20; ++trial) {
    Mat A = Mat::NullaryExpr(5, 5, [&rng]() {
      std::uniform_real_distribution<double> dist(-1, 1);
      return dist(rng);
    });
    A += 5 * Mat::Identity(5, 5);
    Vec b = random_vec(rng, 5, -2, 2);
    LinearSolution sol = linsolve(A, b, {}, "check");
    require_le((A * sol.x - b).lpNorm<Eigen::Infinity>(), 1e-10,
               "linsolve residual too large");
  }
}

// --- core --------------------------------------------------------------------

void check_bracket_skew() {
  std::mt19937_64 rng(11);
  struct Case {
    AlgebroidStructure structure;
    double tol;
  };
  VectorFieldList frame = {
      [](const Vec&) { return Vec(Vec::Unit(2, 0)); },
      [](const Vec& q) { return Vec((Vec(2) << q(0), 1).finished()); },
  };
  std::vector<Case> cases;
  cases.push_back({coordinate_frame(3), 1e-12});
  cases.push_back({so3_algebra(), 1e-12});
  cases.push_back({martinet_structure(), 1e-12});
  cases.push_back({frame_from_vectorfields(2, frame), 1e-7});
  for (const Case& c : cases) {
    for (int i = 0; i < 100; ++i) {
      Vec q = random_vec(rng, c.structure.base_dim, -1.5, 1.5);
      require_le(skew_defect(c.structure.structure(q)), c.tol,
                 "structure functions not skew in the lower indices");
    }
  }
}

void check_projector_law() {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 40; ++i) {
    Vec q = random_vec(rng, 3, -1, 1);
    Mat D(3, 2);
    D << std::cos(q(2)), 0, std::sin(q(2)), 0, 0, 1;
    Mat g = Mat::Identity(3, 3);
    g(2, 2) = 1 + q(0) * q(0);
    Mat P = orthogonal_projector(D, g);
    require_le(max_abs(P * P - P), 1e-10, "projector not idempotent");
    require_le(max_abs(P.transpose() * g - g * P), 1e-10, "projector not g-self-adjoint");
  }
}

void check_frame_recovery() {
  VectorFieldList basis;
  for (int a = 0; a < 3; ++a) {
    basis.push_back([a](const Vec&) { return Vec(Vec::Unit(3, a)); });
  }
  AlgebroidStructure s = frame_from_vectorfields(3, basis);
  std::mt19937_64 rng(13);
  for (int i = 0; i < 25; ++i) {
    Vec q = random_vec(rng, 3, -2, 2);
    for (const Mat& level : s.structure(q)) {
      require_le(max_abs(level), 1e-9, "coordinate basis produced nonzero brackets");
    }
  }
}

void check_gradient_agreement() {
  std::mt19937_64 rng(14);
  ScalarField L(2, 2, [](const Vec& q, const Vec& y) {
    return 0.5 * (1 + q(0) * q(0)) * y(0) * y(0) + q(0) * y(1) * y(1) - std::cos(q(0)) +
           q(1);
  });
  L.set_grad_a([](const Vec& q, const Vec& y) {
    Vec g(2);
    g << q(0) * y(0) * y(0) + y(1) * y(1) + std::sin(q(0)), 1;
    return g;
  });
  L.set_grad_b([](const Vec& q, const Vec& y) {
    Vec g(2);
    g << (1 + q(0) * q(0)) * y(0), 2 * q(0) * y(1);
    return g;
  });
  for (int i = 0; i < 50; ++i) {
    Vec q = random_vec(rng, 2, -1.2, 1.2);
    Vec y = random_vec(rng, 2, -1.2, 1.2);
    double scale = std::max({1.0, L.grad_a(q, y).lpNorm<Eigen::Infinity>(),
                             L.grad_b(q, y).lpNorm<Eigen::Infinity>()});
    require_le(L.gradient_defect(q, y), 1e-6 * scale,
               "analytic and finite-difference gradients disagree");
  }
}

// --- continuous --------------------------------------------------------------

void check_operator_identity() {
  std::mt19937_64 rng(21);
  std::vector<AlgebroidStructure> structures = {coordinate_frame(2), so3_algebra(),
                                                martinet_structure()};
  for (int draw = 0; draw < 200; ++draw) {
    const AlgebroidStructure& s = structures[static_cast<std::size_t>(draw) % 3];
    ScalarField L = quadratic_lagrangian(s.base_dim, s.fiber_rank, rng);
    MomentumField mu = [&L](const Vec& q, const Vec& y) {
      return CotangentValue{L.grad_a(q, y), L.grad_b(q, y)};
    };
    Jet jet;
    jet.q = random_vec(rng, s.base_dim, -1, 1);
    jet.y = random_vec(rng, s.fiber_rank, -1, 1);
    jet.qdot = s.base_dim > 0 ? Vec(s.anchor(jet.q) * jet.y) : Vec(0);
    jet.ydot = random_vec(rng, s.fiber_rank, -1, 1);
    Vec gap = hamel_residual(s, L, jet) - el_residual(s, mu, jet);
    require_le(gap.lpNorm<Eigen::Infinity>(), 1e-7,
               "hamel_residual deviates from el_residual at mu = dL");
  }
}

void check_frame_invariance() {
  AlgebroidStructure coords = coordinate_frame(1);
  ScalarField L = sho_lagrangian();
  StateRhs field = hamel_vector_field(coords, L);
  OdeRhs rhs = [&field](double t, const Vec& x) {
    auto [qd, yd] = field(t, x.head(1), x.tail(1));
    Vec dx(2);
    dx << qd, yd;
    return dx;
  };
  Vec x0(2);
  x0 << 1, 0;
  Trajectory traj = rk4(rhs, x0, 0, 1, 1e-3);

  // Scaled frame Y = 2 ∂/∂q: components y' = q̇ / 2, Lagrangian re-expressed.
  AlgebroidStructure scaled;
  scaled.base_dim = 1;
  scaled.fiber_rank = 1;
  scaled.anchor = [](const Vec&) { return Mat(2 * Mat::Identity(1, 1)); };
  scaled.structure = [](const Vec&) { return StructureTensor(1, Mat::Zero(1, 1)); };
  ScalarField scaled_L(1, 1, [](const Vec& q, const Vec& w) {
    return 0.5 * (2 * w(0)) * (2 * w(0)) - 0.5 * q(0) * q(0);
  });

  for (std::size_t i = 0; i < traj.times.size(); i += 50) {
    double q = traj.states[i](0);
    double qdot = traj.states[i](1);
    Jet jet;
    jet.t = traj.times[i];
    jet.q = Vec::Constant(1, q);
    jet.y = Vec::Constant(1, qdot / 2);
    jet.qdot = Vec::Constant(1, qdot);
    jet.ydot = Vec::Constant(1, -q / 2);  // q̈ = −q halved
    require_le(hamel_residual(scaled, scaled_L, jet).lpNorm<Eigen::Infinity>(), 1e-5,
               "hamel_residual not frame-invariant at the solution");
  }
}

void check_legendre_equivalence() {
  AlgebroidStructure coords = coordinate_frame(1);
  ScalarField L(1, 1, [](const Vec& q, const Vec& y) {
    return 0.5 * y(0) * y(0) + std::cos(q(0));
  });
  L.set_grad_a([](const Vec& q, const Vec&) { return Vec(Vec::Constant(1, -std::sin(q(0)))); });
  L.set_grad_b([](const Vec&, const Vec& y) { return Vec(y); });
  ScalarField H = legendre_transform(coords, L);

  StateRhs lag = hamel_vector_field(coords, L);
  StateRhs ham = hamilton_vector_field(coords, H);
  auto wrap = [](const StateRhs& f) {
    return OdeRhs([&f](double t, const Vec& x) {
      auto [qd, yd] = f(t, x.head(1), x.tail(1));
      Vec dx(2);
      dx << qd, yd;
      return dx;
    });
  };
  Vec x0(2);
  x0 << 1, 0;  // p0 = ∂L/∂y = y0 = 0
  Trajectory a = rk4(wrap(lag), x0, 0, 1, 1e-3);
  Trajectory b = rk4(wrap(ham), x0, 0, 1, 1e-3);
  double gap = 0;
  for (std::size_t i = 0; i < a.times.size(); ++i) {
    gap = std::max(gap, std::abs(a.states[i](0) - b.states[i](0)));
  }
  require_le(gap, 1e-6, "Lagrangian and Hamiltonian pendulum flows diverge in q");
}

void check_lie_poisson_casimir() {
  AlgebroidStructure so3 = so3_algebra();
  ScalarField H(0, 3, [](const Vec&, const Vec& p) {
    return 0.5 * (p(0) * p(0) + p(1) * p(1) / 2 + p(2) * p(2) / 3);
  });
  H.set_grad_b([](const Vec&, const Vec& p) {
    Vec g(3);
    g << p(0), p(1) / 2, p(2) / 3;
    return g;
  });
  StateRhs field = hamilton_vector_field(so3, H);
  OdeRhs rhs = [&field](double t, const Vec& x) {
    return field(t, Vec(0), x).second;
  };
  Vec p0(3);
  p0 << 1, 2, 3;
  Trajectory traj = rk4(rhs, p0, 0, 1, 1e-3);
  double drift = 0;
  for (const Vec& p : traj.states) {
    drift = std::max(drift, std::abs(p.squaredNorm() - p0.squaredNorm()));
  }
  require_le(drift, 1e-9, "so(3) Casimir |p|^2 drifts along the Lie-Poisson flow");
}

VakonomicRhs martinet_field(const ScalarField& l) {
  ConstraintMap phi = [](const Vec&, const Vec&) { return Vec(Vec::Zero(1)); };
  return vakonomic_vector_field(martinet_structure(), l, phi, 1);
}

ScalarField martinet_lagrangian() {
  ScalarField l(3, 2, [](const Vec&, const Vec& y) { return 0.5 * y.squaredNorm(); });
  l.set_grad_a([](const Vec&, const Vec&) { return Vec(Vec::Zero(3)); });
  l.set_grad_b([](const Vec&, const Vec& y) { return y; });
  return l;
}

void check_martinet_integral() {
  ScalarField l = martinet_lagrangian();
  VakonomicRhs field = martinet_field(l);
  OdeRhs rhs = [&field](double t, const Vec& x) {
    VakonomicState state{x.head(3), x.segment(3, 2), x.tail(1)};
    VakonomicDerivative d = field(t, state);
    Vec dx(6);
    dx.head(3) = d.qdot;
    dx.segment(3, 2) = d.y_free_dot;
    dx.tail(1) = d.mu_con_dot;
    return dx;
  };
  Vec x0(6);
  x0 << 0, 0, 0, 1, 0.5, 1;
  Trajectory traj = rk4(rhs, x0, 0, 1, 1e-3);
  double drift = 0;
  for (const Vec& x : traj.states) {
    drift = std::max(drift, std::abs(x(5) - x0(5)));
  }
  require_le(drift, 1e-9, "Martinet multiplier momentum is not a first integral");
}

void check_vakonomic_reduction() {
  std::mt19937_64 rng(22);
  std::vector<AlgebroidStructure> structures = {coordinate_frame(2), so3_algebra()};
  ConstraintMap none = [](const Vec&, const Vec&) { return Vec(0); };
  for (const AlgebroidStructure& s : structures) {
    ScalarField L = quadratic_lagrangian(s.base_dim, s.fiber_rank, rng);
    VakonomicRhs vak = vakonomic_vector_field(s, L, none, 0);
    StateRhs ham = hamel_vector_field(s, L);
    for (int i = 0; i < 20; ++i) {
      Vec q = random_vec(rng, s.base_dim, -1, 1);
      Vec y = random_vec(rng, s.fiber_rank, -1, 1);
      VakonomicDerivative a = vak(0, {q, y, Vec(0)});
      auto [qd, yd] = ham(0, q, y);
      require_le((a.y_free_dot - yd).lpNorm<Eigen::Infinity>(), 1e-10,
                 "unconstrained vakonomic field deviates from the hamel field");
      require_le((a.qdot - qd).lpNorm<Eigen::Infinity>(), 1e-12,
                 "unconstrained vakonomic base velocity deviates");
    }
  }
}

void check_pontryagin_consistency() {
  AlgebroidStructure coords = coordinate_frame(1);
  ControlField gamma{1, 1, [](const Vec&, const Vec& u) { return u; }};
  ScalarField cost(1, 1, [](const Vec& q, const Vec& u) {
    return 0.5 * (q(0) * q(0) + u(0) * u(0));
  });
  // Eliminating u through ∂H/∂u = 0 gives u* = μ̃ and H*(q,p) = ½p² − ½q².
  ScalarField reduced(1, 1, [](const Vec& q, const Vec& p) {
    return 0.5 * p(0) * p(0) - 0.5 * q(0) * q(0);
  });
  reduced.set_grad_a([](const Vec& q, const Vec&) { return Vec(-q); });
  reduced.set_grad_b([](const Vec&, const Vec& p) { return p; });
  StateRhs ham = hamilton_vector_field(coords, reduced);

  std::mt19937_64 rng(23);
  for (int i = 0; i < 50; ++i) {
    Vec q = random_vec(rng, 1, -2, 2);
    Vec mu = random_vec(rng, 1, -2, 2);
    auto [qdot, mudot] = ham(0, q, mu);
    PontryaginState state{q, mu, mu};  // u* = μ̃
    PontryaginResidual res = pontryagin_residual(coords, gamma, cost, state, qdot, mudot);
    require_le(res.stationarity.lpNorm<Eigen::Infinity>(), 1e-7,
               "stationarity violated at the eliminated control");
    require_le(res.costate_defect.lpNorm<Eigen::Infinity>(), 1e-7,
               "costate equation disagrees with the reduced Hamiltonian flow");
    require_le(res.primal_defect.lpNorm<Eigen::Infinity>(), 1e-7,
               "primal equation disagrees with the reduced Hamiltonian flow");
  }
}

// --- discrete ----------------------------------------------------------------

void check_discrete_noether() {
  const double h = 0.1;
  DiscreteLagrangian Ld(2, [h](const Vec& a, const Vec& b) {
    Vec d = b - a;
    return (d(0) * d(0) + 2 * d(1) * d(1)) / (2 * h) + 0.1 * std::sin(d(0));
  });
  Vec prev(2), curr(2);
  prev << 0, 0;
  curr << 0.01, 0.02;
  Vec p0 = discrete_momentum(Ld, prev, curr);
  double drift = 0;
  for (int k = 0; k < 1000; ++k) {
    Vec next = del_step(Ld, prev, curr);
    prev = curr;
    curr = next;
    drift = std::max(drift,
                     (discrete_momentum(Ld, prev, curr) - p0).lpNorm<Eigen::Infinity>());
  }
  require_le(drift, 1e-9, "discrete momentum drifts for a shift-invariant L_d");
}

double midpoint_sho_error(double h) {
  DiscreteLagrangian Ld(1, [h](const Vec& a, const Vec& b) {
    double v = (b(0) - a(0)) / h;
    double mid = 0.5 * (a(0) + b(0));
    return h * (0.5 * v * v - 0.5 * mid * mid);
  });
  Vec prev = Vec::Constant(1, 1.0);
  Vec curr = Vec::Constant(1, std::cos(h));
  double error = 0;
  int steps = static_cast<int>(std::round(1.0 / h));
  for (int k = 2; k <= steps; ++k) {
    Vec next = del_step(Ld, prev, curr);
    prev = curr;
    curr = next;
    error = std::max(error, std::abs(curr(0) - std::cos(k * h)));
  }
  return error;
}

void check_consistency_order() {
  double coarse = midpoint_sho_error(0.02);
  double fine = midpoint_sho_error(0.01);
  double ratio = coarse / fine;
  require(ratio >= 3.5 && ratio <= 4.5,
          "midpoint error ratio " + std::to_string(ratio) + " outside [3.5, 4.5]");
}

void check_constrained_feasibility() {
  const double h = 0.1;
  DiscreteLagrangian Ld(2, [h](const Vec& a, const Vec& b) {
    return (b - a).squaredNorm() / (2 * h);
  });
  // The constraint must involve both slots so the D1-paired multiplier
  // actually enters the step equations; this one transports the norm.
  std::vector<ScalarField> phi = {ScalarField(
      2, 2, [](const Vec& a, const Vec& b) { return b.squaredNorm() - a.squaredNorm(); })};
  Vec prev(2), curr(2);
  prev << 1, 0;
  curr << std::cos(0.1), std::sin(0.1);
  Vec lambda = Vec::Zero(1);
  double worst = std::abs(phi[0](prev, curr));
  for (int k = 0; k < 50; ++k) {
    ConstrainedStep step = discrete_constrained_step(Ld, phi, prev, curr, lambda);
    prev = curr;
    curr = step.q_next;
    lambda = step.lambda_next;
    worst = std::max(worst, std::abs(phi[0](prev, curr)));
  }
  SolverConfig config;
  require_le(worst, config.newton_tol, "constraint violated along the constrained steps");
}

void check_ocp_optimality() {
  auto dynamics = [](const Vec& q, const Vec& u) { return Vec(q + 0.1 * u); };
  ScalarField cost(1, 1, [](const Vec& q, const Vec& u) {
    return 0.05 * (q(0) * q(0) + u(0) * u(0));
  });
  DiscreteControlSystem sys{dynamics, cost, 1};
  const int N = 10;
  Vec q0 = Vec::Constant(1, 1.0);
  DiscreteOcpSolution sol = discrete_ocp_solve(sys, q0, N, TerminalCondition::free_endpoint());

  auto rollout_cost = [&](const std::vector<Vec>& controls) {
    double total = 0;
    Vec q = q0;
    for (const Vec& u : controls) {
      total += cost(q, u);
      q = dynamics(q, u);
    }
    return total;
  };
  double base = rollout_cost(sol.controls);
  for (std::size_t j = 0; j < sol.controls.size(); ++j) {
    for (double sign : {1.0, -1.0}) {
      std::vector<Vec> perturbed = sol.controls;
      perturbed[j](0) += sign * 1e-4;
      require(rollout_cost(perturbed) >= base - 1e-9,
              "a control perturbation lowered the cost beyond first order");
    }
  }
}

// --- groupoid ----------------------------------------------------------------

void check_identity_block() {
  std::mt19937_64 rng(31);
  std::vector<GroupoidModel> models = {pair_groupoid(2), so3_group().model};
  SolverConfig config;
  for (const GroupoidModel& G : models) {
    for (int i = 0; i < 100; ++i) {
      Vec q = random_vec(rng, G.base_dim, -1, 1);
      Vec v = random_vec(rng, G.fiber_dim, -0.4, 0.4);
      Mat identity = Mat::Identity(G.fiber_dim, G.fiber_dim);

      auto left_slot = [&](const Vec& w) { return G.product_map(q, w, Vec::Zero(G.fiber_dim)); };
      auto right_slot = [&](const Vec& w) { return G.product_map(q, Vec::Zero(G.fiber_dim), w); };
      require_le(max_abs(fd_jac(left_slot, v, config) - identity), 1e-7,
                 "d p/d v at identity second factor is not the identity");
      require_le(max_abs(fd_jac(right_slot, v, config) - identity), 1e-7,
                 "d p/d vt at identity first factor is not the identity");
      for (int comp = 0; comp < G.fiber_dim; ++comp) {
        auto left_comp = [&](const Vec& w) { return left_slot(w)(comp); };
        auto right_comp = [&](const Vec& w) { return right_slot(w)(comp); };
        require_le(max_abs(fd_hess(left_comp, v, config)), 1e-5,
                   "second derivative of p(q, ., 0) does not vanish");
        require_le(max_abs(fd_hess(right_comp, v, config)), 1e-5,
                   "second derivative of p(q, 0, .) does not vanish");
      }
    }
  }
}

void check_pair_equivalence() {
  std::mt19937_64 rng(32);
  const double h = 0.1;
  auto value = [h](const Vec& a, const Vec& b) {
    return (b - a).squaredNorm() / (2 * h) + 0.3 * std::sin(a(0)) * std::cos(b(1)) +
           0.1 * a(1) * b(0);
  };
  DiscreteLagrangian Ld(2, value);
  GroupoidModel pair = pair_groupoid(2);
  ScalarField pair_Ld(2, 2, [value](const Vec& q, const Vec& v) { return value(q, q + v); });
  for (int i = 0; i < 500; ++i) {
    Vec a = random_vec(rng, 2, -1, 1);
    Vec b = random_vec(rng, 2, -1, 1);
    Vec c = random_vec(rng, 2, -1, 1);
    Vec direct = del_residual(Ld, a, b, c);
    Vec lifted = groupoid_del_residual(pair, pair_Ld, {a, b - a}, {b, c - b});
    require_le((direct - lifted).lpNorm<Eigen::Infinity>(), 1e-6,
               "pair-groupoid residual deviates from the two-point residual");
  }
}

void check_casimir_exactness() {
  std::mt19937_64 rng(33);
  LieGroupModel so3 = so3_group();
  for (int i = 0; i < 100; ++i) {
    Vec v = random_vec(rng, 3, -1, 1);
    if (v.norm() >= M_PI - 0.1) v *= 0.5;
    Vec mu = random_vec(rng, 3, -3, 3);
    Vec next = lie_poisson_update(so3, v, mu);
    require_le(std::abs(next.norm() - mu.norm()), 1e-13 * std::max(1.0, mu.norm()),
               "coadjoint update changed the momentum norm");
  }
}

void check_momentum_consistency() {
  LieGroupModel so3 = so3_group();
  ScalarField Ld(0, 3, [](const Vec&, const Vec& v) {
    return 0.5 * (v(0) * v(0) + 2 * v(1) * v(1) + 3 * v(2) * v(2));
  });
  Vec v0(3);
  v0 << 0.1, 0.05, 0.08;
  std::vector<Vec> sequence = discrete_euler_poincare_solve(so3, Ld, v0, 20);
  SolverConfig config;
  double worst = 0;
  Vec mu = euler_poincare_momentum(so3, Ld, sequence[0]);
  for (std::size_t k = 0; k + 1 < sequence.size(); ++k) {
    Vec updated = lie_poisson_update(so3, sequence[k], mu);
    Vec direct = euler_poincare_momentum(so3, Ld, sequence[k + 1]);
    worst = std::max(worst, (direct - updated).lpNorm<Eigen::Infinity>());
    mu = direct;
  }
  require_le(worst, 10 * config.newton_tol,
             "Euler-Poincare momenta do not follow the Lie-Poisson update");
}

// --- cli ---------------------------------------------------------------------

void check_csv_roundtrip() {
  Trajectory original;
  original.labels = {"a", "b", "c"};
  std::mt19937_64 rng(41);
  double t = 0;
  for (int i = 0; i < 25; ++i) {
    t += std::uniform_real_distribution<double>(1e-6, 1.0)(rng);
    original.times.push_back(t);
    Vec row(3);
    row << std::uniform_real_distribution<double>(-1, 1)(rng) / 3.0,
        std::uniform_real_distribution<double>(-1e-17, 1e-17)(rng),
        std::uniform_real_distribution<double>(-1, 1)(rng) * 6.02e23;
    original.states.push_back(row);
  }
  original.states[0](0) = -0.0;
  original.states[1](1) = M_PI;

  auto path = std::filesystem::temp_directory_path() / "gvc_csv_roundtrip_check.csv";
  write_csv(path.string(), original, "t");
  Trajectory copy = read_csv(path.string());
  std::filesystem::remove(path);

  require(copy.labels == original.labels, "csv labels did not survive the round-trip");
  require(copy.times.size() == original.times.size(), "csv row count changed");
  for (std::size_t i = 0; i < original.times.size(); ++i) {
    require(copy.times[i] == original.times[i], "csv time not bit-identical");
    for (int j = 0; j < 3; ++j) {
      require(copy.states[i](j) == original.states[i](j), "csv value not bit-identical");
    }
  }
}

void check_catalog_complete() {
  const std::set<std::string> continuous_kinds = {"lagrangian", "hamiltonian", "vakonomic",
                                                  "pontryagin"};
  require(catalog().size() == 12, "catalog does not hold the twelve named examples");
  for (const CatalogEntry& entry : catalog()) {
    const CatalogEntry* found = find_catalog(entry.name);
    require(found != nullptr, "catalog entry '" + entry.name + "' not findable by name");
    ProblemSpec spec = parse_problem(found->text);
    std::string kind = spec.kind();
    bool continuous = continuous_kinds.count(kind) > 0;
    if ((kind == "euler_poincare" || kind == "lie_poisson") &&
        spec.get("", "structure") == "algebra") {
      continuous = true;
    }
    RunOverrides overrides;
    if (continuous) {
      overrides.t1 = 0.05;
      overrides.dt = 0.01;
    } else {
      overrides.steps = entry.name == "discrete_lie_poisson_so3" ? 50 : 5;
    }
    RunResult result = run_problem(spec, overrides);
    require(!result.trajectory.times.empty(),
            "catalog entry '" + entry.name + "' produced no samples");
    require(result.trajectory.labels.size() ==
                static_cast<std::size_t>(result.trajectory.states.front().size()),
            "catalog entry '" + entry.name + "' labels do not match its states");
  }
}

void check_expr_roundtrip() {
  std::vector<std::string> texts = sample_expressions(200, 42);
  std::mt19937_64 rng(43);
  for (const std::string& text : texts) {
    Expr original = parse_expr(text);
    Expr reparsed = parse_expr(original.print());
    for (int trial = 0; trial < 5; ++trial) {
      EvalContext ctx;
      ctx.q = random_vec(rng, 2, 0.5, 1.5);
      ctx.y = random_vec(rng, 2, 0.5, 1.5);
      ctx.t = std::uniform_real_distribution<double>(0.5, 1.5)(rng);
      double a = original.eval(ctx);
      double b = reparsed.eval(ctx);
      require(std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)),
              "printed expression evaluates differently: " + text + " vs " +
                  original.print());
    }
  }
}

}  // namespace

std::vector<std::string> sample_expressions(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick_atom(0, 6);
  std::uniform_int_distribution<int> pick_form(0, 9);
  std::uniform_int_distribution<int> pick_fun(0, 4);
  std::uniform_int_distribution<int> pick_pow(2, 3);
  std::uniform_real_distribution<double> pick_num(0.25, 4.0);
  const char* functions[] = {"sin", "cos", "exp", "abs", "tan"};

  std::function<std::string(int)> build = [&](int depth) -> std::string {
    if (depth <= 0) {
      switch (pick_atom(rng)) {
        case 0: return "q1";
        case 1: return "q2";
        case 2: return "y1";
        case 3: return "y2";
        case 4: return "t";
        default: {
          char buf[32];
          std::snprintf(buf, sizeof buf, "%.4g", pick_num(rng));
          return buf;
        }
      }
    }
    switch (pick_form(rng)) {
      case 0: return "(" + build(depth - 1) + " + " + build(depth - 1) + ")";
      case 1: return "(" + build(depth - 1) + " - " + build(depth - 1) + ")";
      case 2: return "(" + build(depth - 1) + " * " + build(depth - 1) + ")";
      case 3: return "(" + build(depth - 1) + " / (" + build(depth - 1) + " + 9))";
      case 4: return "(-" + build(depth - 1) + ")";
      case 5: return std::string(functions[pick_fun(rng)]) + "(" + build(depth - 1) + ")";
      case 6: return "(" + build(depth - 1) + ")^" + std::to_string(pick_pow(rng));
      default: return build(depth - 1);
    }
  };

  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    out.push_back(build(3));
  }
  return out;
}

const std::vector<NamedCheck>& invariant_checks() {
  static const std::vector<NamedCheck> checks = {
      {"numerics-rk4-order", "rk4 error ratio lies in [12, 20] when halving dt on x' = x",
       check_rk4_order},
      {"numerics-newton-quadratic", "newton iterates contract quadratically on x^2 - 2",
       check_newton_quadratic},
      {"numerics-fd-gradient", "central differences match analytic polynomial gradients",
       check_fd_gradient},
      {"numerics-linsolve-residual", "dense solves reproduce the right-hand side",
       check_linsolve_residual},
      {"core-bracket-skew", "structure functions are skew in the lower indices",
       check_bracket_skew},
      {"core-projector-law", "the metric projector is idempotent and g-self-adjoint",
       check_projector_law},
      {"core-frame-recovery", "the coordinate basis yields vanishing structure functions",
       check_frame_recovery},
      {"core-gradient-agreement", "analytic ScalarField gradients match differences",
       check_gradient_agreement},
      {"continuous-operator-identity",
       "hamel_residual equals the Euler-Lagrange operator at mu = dL",
       check_operator_identity},
      {"continuous-frame-invariance",
       "a trajectory solves the equations in every frame presentation",
       check_frame_invariance},
      {"continuous-legendre-equivalence",
       "Lagrangian and Hamiltonian flows agree for regular Lagrangians",
       check_legendre_equivalence},
      {"continuous-lie-poisson-casimir", "|p|^2 is conserved by the so(3) momentum flow",
       check_lie_poisson_casimir},
      {"continuous-martinet-integral",
       "the Martinet multiplier momentum is a first integral", check_martinet_integral},
      {"continuous-vakonomic-reduction",
       "the unconstrained vakonomic field reduces to the hamel field",
       check_vakonomic_reduction},
      {"continuous-pontryagin-consistency",
       "control elimination reproduces the reduced Hamiltonian flow",
       check_pontryagin_consistency},
      {"discrete-noether", "shift-invariant discrete Lagrangians transport momentum",
       check_discrete_noether},
      {"discrete-consistency-order", "the midpoint rule is second-order on the oscillator",
       check_consistency_order},
      {"discrete-constrained-feasibility",
       "constrained steps satisfy the constraints to solver tolerance",
       check_constrained_feasibility},
      {"discrete-ocp-optimality", "control perturbations cannot lower the optimal cost",
       check_ocp_optimality},
      {"groupoid-identity-block",
       "product differentials reduce to the identity at the unit section",
       check_identity_block},
      {"groupoid-pair-equivalence",
       "the pair-groupoid residual matches the two-point residual",
       check_pair_equivalence},
      {"groupoid-casimir-exactness", "coadjoint updates preserve the momentum norm",
       check_casimir_exactness},
      {"groupoid-momentum-consistency",
       "Euler-Poincare momenta follow the discrete Lie-Poisson update",
       check_momentum_consistency},
      {"cli-csv-roundtrip", "written trajectories read back bit-identically",
       check_csv_roundtrip},
      {"cli-catalog-complete", "every named example parses and runs",
       check_catalog_complete},
      {"cli-expr-roundtrip", "printed expressions reparse to equivalent programs",
       check_expr_roundtrip},
  };
  return checks;
}

std::vector<CheckResult> run_invariant_checks(const std::string& pattern) {
  std::vector<CheckResult> results;
  for (const NamedCheck& check : invariant_checks()) {
    if (check.name.find(pattern) == std::string::npos) {
      continue;
    }
    CheckResult result;
    result.name = check.name;
    try {
      check.body();
      result.passed = true;
    } catch (const std::exception& error) {
      result.passed = false;
      result.detail = error.what();
    }
    results.push_back(std::move(result));
  }
  return results;
}

}  // namespace gvc
