#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "gvc/core.hpp"
#include "gvc/discrete.hpp"
#include "gvc/types.hpp"

using gvc::Mat;
using gvc::Vec;

namespace {

Vec scalar(double x) {
  Vec v(1);
  v << x;
  return v;
}

gvc::DiscreteLagrangian free_particle(int n, double h) {
  return gvc::DiscreteLagrangian(
      n, [h](const Vec& a, const Vec& b) { return (b - a).squaredNorm() / (2.0 * h); });
}

// Midpoint-rule discretization of the harmonic oscillator.
gvc::DiscreteLagrangian midpoint_sho(double h) {
  return gvc::DiscreteLagrangian(1, [h](const Vec& a, const Vec& b) {
    const double v = (b(0) - a(0)) / h;
    const double mid = 0.5 * (a(0) + b(0));
    return h * (0.5 * v * v - 0.5 * mid * mid);
  });
}

double midpoint_sho_error(double h, double T) {
  gvc::DiscreteLagrangian Ld = midpoint_sho(h);
  Vec prev = scalar(std::cos(0.0));
  Vec curr = scalar(std::cos(h));
  double worst = 0.0;
  const int steps = static_cast<int>(std::round(T / h));
  for (int k = 2; k <= steps; ++k) {
    Vec next = gvc::del_step(Ld, prev, curr);
    prev = curr;
    curr = next;
    worst = std::max(worst, std::abs(curr(0) - std::cos(k * h)));
  }
  return worst;
}

}  // namespace

TEST_CASE("free-particle steps extend the straight line exactly") {
  const double h = 0.1;
  gvc::DiscreteLagrangian Ld = free_particle(2, h);

  Vec q0(2), q1(2);
  q0 << 0.0, 1.0;
  q1 << 0.1, 1.2;
  Vec colinear = 2.0 * q1 - q0;
  CHECK(gvc::del_residual(Ld, q0, q1, colinear).lpNorm<Eigen::Infinity>() < 1e-10);

  Vec prev = q0;
  Vec curr = q1;
  for (int k = 2; k <= 100; ++k) {
    Vec next = gvc::del_step(Ld, prev, curr);
    prev = curr;
    curr = next;
  }
  Vec expect = q0 + 100.0 * (q1 - q0);
  CHECK((curr - expect).lpNorm<Eigen::Infinity>() < 1e-9);

  // A far-off guess still lands on the same solution.
  Vec wild(2);
  wild << 40.0, -13.0;
  CHECK((gvc::del_step(Ld, q0, q1, wild) - colinear).lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("degenerate discrete lagrangians are rejected even at zero residual") {
  gvc::DiscreteLagrangian flat(1, [](const Vec&, const Vec&) { return 1.0; });
  CHECK_THROWS_AS(gvc::del_step(flat, scalar(0.0), scalar(0.1)),
                  gvc::SingularMatrixError);
}

TEST_CASE("discrete momentum is the velocity covector of the free particle") {
  const double h = 0.1;
  gvc::DiscreteLagrangian Ld = free_particle(1, h);
  Vec p = gvc::discrete_momentum(Ld, scalar(0.0), scalar(0.25));
  CHECK(std::abs(p(0) - 2.5) < 1e-9);
}

TEST_CASE("translation-invariant dynamics conserves total discrete momentum") {
  // Two particles on a line with a quadratic interaction; the lagrangian only
  // sees the separation, so the total momentum is a discrete Noether invariant.
  const double h = 0.05;
  gvc::DiscreteLagrangian Ld(2, [h](const Vec& a, const Vec& b) {
    const Vec v = (b - a) / h;
    const Vec mid = 0.5 * (a + b);
    const double sep = mid(0) - mid(1);
    return h * (0.5 * v.squaredNorm() - 0.5 * sep * sep);
  });

  Vec prev(2), curr(2);
  prev << 0.0, 1.0;
  curr << 0.03, 0.98;
  const double total0 = gvc::discrete_momentum(Ld, prev, curr).sum();
  double worst = 0.0;
  for (int k = 2; k <= 200; ++k) {
    Vec next = gvc::del_step(Ld, prev, curr);
    prev = curr;
    curr = next;
    worst = std::max(worst,
                     std::abs(gvc::discrete_momentum(Ld, prev, curr).sum() - total0));
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("midpoint oscillator converges at second order") {
  const double coarse = midpoint_sho_error(0.02, 2.0);
  const double fine = midpoint_sho_error(0.01, 2.0);
  const double ratio = coarse / fine;
  CHECK(ratio > 3.5);
  CHECK(ratio < 4.5);
}

TEST_CASE("derivative overrides are cross-checked against differences") {
  const double h = 0.1;
  gvc::DiscreteLagrangian Ld = free_particle(1, h);
  CHECK(Ld.derivative_defect(scalar(0.2), scalar(0.5)) == 0.0);

  Ld.set_d1([h](const Vec& a, const Vec& b) { return Vec(-(b - a) / h); });
  Ld.set_d2([h](const Vec& a, const Vec& b) { return Vec((b - a) / h); });
  CHECK(Ld.derivative_defect(scalar(0.2), scalar(0.5)) < 1e-8);

  Ld.set_d1([](const Vec&, const Vec&) { return Vec(Vec::Ones(1) * 7.0); });
  CHECK(Ld.derivative_defect(scalar(0.2), scalar(0.5)) > 1.0);
}

TEST_CASE("constrained steps reduce to plain steps without constraints") {
  const double h = 0.1;
  gvc::DiscreteLagrangian Ld = free_particle(2, h);
  Vec q0(2), q1(2);
  q0 << 0.3, -0.1;
  q1 << 0.35, 0.0;
  gvc::ConstrainedStep step =
      gvc::discrete_constrained_step(Ld, {}, q0, q1, Vec(0));
  CHECK((step.q_next - gvc::del_step(Ld, q0, q1)).lpNorm<Eigen::Infinity>() < 1e-12);
  CHECK(step.lambda_next.size() == 0);
}

TEST_CASE("constrained steps reject more constraints than coordinates") {
  gvc::DiscreteLagrangian Ld = free_particle(1, 0.1);
  std::vector<gvc::ScalarField> phi(
      2, gvc::ScalarField(1, 1, [](const Vec& a, const Vec& b) { return b(0) - a(0); }));
  CHECK_THROWS_AS(
      gvc::discrete_constrained_step(Ld, phi, scalar(0.0), scalar(0.1), Vec::Zero(2)),
      gvc::InvalidArgument);
}

TEST_CASE("norm-transport constraint matches its quadratic closed form") {
  const double h = 0.1;
  gvc::DiscreteLagrangian Ld = free_particle(2, h);
  std::vector<gvc::ScalarField> phi = {gvc::ScalarField(
      2, 2, [](const Vec& a, const Vec& b) { return b.squaredNorm() - a.squaredNorm(); })};

  Vec q0(2), q1(2);
  q0 << 1.0, 0.0;
  q1 << std::cos(0.12), std::sin(0.12);
  gvc::ConstrainedStep step =
      gvc::discrete_constrained_step(Ld, phi, q0, q1, Vec::Zero(1));

  CHECK(std::abs(step.q_next.norm() - 1.0) < 1e-10);

  // Eliminating the multiplier gives sigma2 = v - c sigma1 with v = 2 sigma1 -
  // sigma0 and c = 2 h lambda, where c solves
  //   c^2 - 2 (sigma1 . v) c + |v|^2 - 1 = 0.
  const Vec v = 2.0 * q1 - q0;
  const double sv = q1.dot(v);
  const double disc = std::sqrt(sv * sv - v.squaredNorm() + 1.0);
  double best = 1e9;
  for (double c : {sv - disc, sv + disc}) {
    Vec candidate = v - c * q1;
    const double gap = (candidate - step.q_next).lpNorm<Eigen::Infinity>() +
                       std::abs(c / (2.0 * h) - step.lambda_next(0));
    best = std::min(best, gap);
  }
  CHECK(best < 1e-8);
}

TEST_CASE("discrete optimal control matches the riccati recursion") {
  const double b = 0.1;
  auto dynamics = [b](const Vec& q, const Vec& u) { return Vec(q + b * u); };
  gvc::ScalarField cost(1, 1, [](const Vec& q, const Vec& u) {
    return 0.05 * (q(0) * q(0) + u(0) * u(0));
  });
  gvc::DiscreteControlSystem sys{dynamics, cost, 1};

  const int N = 20;
  gvc::DiscreteOcpSolution sol = gvc::discrete_ocp_solve(
      sys, scalar(1.0), N, gvc::TerminalCondition::free_endpoint());
  REQUIRE(static_cast<int>(sol.path.configs.size()) == N + 1);
  REQUIRE(static_cast<int>(sol.controls.size()) == N);
  REQUIRE(static_cast<int>(sol.costates.size()) == N);

  // Backward Riccati sweep for J = sum 0.5 (Qh q^2 + Rh u^2), a = 1.
  const double Qh = 0.1;
  const double Rh = 0.1;
  std::vector<double> P(N + 1, 0.0);
  std::vector<double> K(N, 0.0);
  for (int k = N - 1; k >= 0; --k) {
    K[k] = b * P[k + 1] / (Rh + b * P[k + 1] * b);
    P[k] = Qh + P[k + 1] * (1.0 - b * K[k]);
  }
  double q = 1.0;
  for (int k = 0; k < N; ++k) {
    const double u = -K[k] * q;
    CHECK(std::abs(sol.controls[k](0) - u) < 1e-8);
    CHECK(std::abs(sol.path.configs[k](0) - q) < 1e-8);
    q += b * u;
    CHECK(std::abs(sol.costates[k](0) - P[k + 1] * q) < 1e-8);
  }
  CHECK(std::abs(sol.costates.back()(0)) < 1e-10);
}

TEST_CASE("one-step fixed-endpoint control is determined by the dynamics") {
  const double b = 0.1;
  auto dynamics = [b](const Vec& q, const Vec& u) { return Vec(q + b * u); };
  gvc::ScalarField cost(1, 1, [](const Vec& q, const Vec& u) {
    return 0.05 * (q(0) * q(0) + u(0) * u(0));
  });
  gvc::DiscreteControlSystem sys{dynamics, cost, 1};

  const double qT = 0.7;
  gvc::DiscreteOcpSolution sol = gvc::discrete_ocp_solve(
      sys, scalar(1.0), 1, gvc::TerminalCondition::fixed(scalar(qT)));
  const double u_expected = (qT - 1.0) / b;
  CHECK(std::abs(sol.controls[0](0) - u_expected) < 1e-9);
  CHECK(std::abs(sol.path.configs[1](0) - qT) < 1e-12);
  // Stationarity: b mu + Rh u = 0.
  CHECK(std::abs(sol.costates[0](0) + 0.1 * u_expected / b) < 1e-8);
}

TEST_CASE("optimal control rejects empty horizons and flat stationarity") {
  auto dynamics = [](const Vec& q, const Vec& u) { return Vec(q + 0.1 * u); };
  gvc::ScalarField cost(1, 1, [](const Vec& q, const Vec& u) {
    return 0.05 * (q(0) * q(0) + u(0) * u(0));
  });
  gvc::DiscreteControlSystem sys{dynamics, cost, 1};
  CHECK_THROWS_AS(gvc::discrete_ocp_solve(sys, scalar(1.0), 0,
                                          gvc::TerminalCondition::free_endpoint()),
                  gvc::InvalidArgument);

  gvc::ScalarField control_blind(
      1, 1, [](const Vec& q, const Vec&) { return 0.05 * q(0) * q(0); });
  gvc::DiscreteControlSystem degenerate{dynamics, control_blind, 1};
  CHECK_THROWS_AS(gvc::discrete_ocp_solve(degenerate, scalar(1.0), 5,
                                          gvc::TerminalCondition::free_endpoint()),
                  gvc::SingularMatrixError);
}

TEST_CASE("perturbing the optimal controls never lowers the cost") {
  auto dynamics = [](const Vec& q, const Vec& u) { return Vec(q + 0.1 * u); };
  gvc::ScalarField cost(1, 1, [](const Vec& q, const Vec& u) {
    return 0.05 * (q(0) * q(0) + u(0) * u(0));
  });
  gvc::DiscreteControlSystem sys{dynamics, cost, 1};
  const int N = 6;
  gvc::DiscreteOcpSolution sol = gvc::discrete_ocp_solve(
      sys, scalar(1.0), N, gvc::TerminalCondition::free_endpoint());

  auto total_cost = [&](const std::vector<Vec>& controls) {
    Vec q = scalar(1.0);
    double J = 0.0;
    for (const Vec& u : controls) {
      J += cost(q, u);
      q = dynamics(q, u);
    }
    return J;
  };

  const double J_star = total_cost(sol.controls);
  std::mt19937 rng(17);
  std::normal_distribution<double> noise(0.0, 1e-3);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Vec> bumped = sol.controls;
    for (Vec& u : bumped) {
      u(0) += noise(rng);
    }
    CHECK(total_cost(bumped) >= J_star - 1e-12);
  }
}

TEST_CASE("discrete path validation enforces pairing invariants") {
  gvc::DiscretePath path;
  path.configs = {scalar(0.0), scalar(0.1), scalar(0.2)};
  CHECK_NOTHROW(gvc::validate(path));

  path.multipliers = {Vec::Zero(1)};
  CHECK_THROWS_AS(gvc::validate(path), gvc::InvalidArgument);
  path.multipliers = {Vec::Zero(1), Vec::Zero(1)};
  CHECK_NOTHROW(gvc::validate(path));

  gvc::DiscretePath ragged;
  ragged.configs = {scalar(0.0), Vec::Zero(2)};
  CHECK_THROWS_AS(gvc::validate(ragged), gvc::InvalidArgument);
}
