#include <cmath>
#include <random>
#include <utility>

#include "doctest.h"
#include "gvc/catalog.hpp"
#include "gvc/continuous.hpp"
#include "gvc/core.hpp"
#include "gvc/numerics.hpp"
#include "gvc/types.hpp"

using gvc::Mat;
using gvc::Vec;

namespace {

Vec vec3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

Vec scalar(double x) {
  Vec v(1);
  v << x;
  return v;
}

// Stack a (q, y) flow into a single ODE state for rk4.
gvc::OdeRhs pack_rhs(gvc::StateRhs rhs, int n) {
  return [rhs = std::move(rhs), n](double t, const Vec& x) {
    auto [qdot, ydot] = rhs(t, x.head(n), x.tail(x.size() - n));
    Vec out(x.size());
    out.head(n) = qdot;
    out.tail(x.size() - n) = ydot;
    return out;
  };
}

gvc::ScalarField sho_lagrangian() {
  return gvc::ScalarField(1, 1, [](const Vec& q, const Vec& y) {
    return 0.5 * (y(0) * y(0) - q(0) * q(0));
  });
}

gvc::ScalarField rigid_body_lagrangian() {
  return gvc::ScalarField(0, 3, [](const Vec&, const Vec& y) {
    return 0.5 * (y(0) * y(0) + 2.0 * y(1) * y(1) + 3.0 * y(2) * y(2));
  });
}

}  // namespace

TEST_CASE("hamel field reproduces the rigid-body Euler equations") {
  gvc::AlgebroidStructure so3 = gvc::so3_algebra();
  gvc::StateRhs field = gvc::hamel_vector_field(so3, rigid_body_lagrangian());
  auto [qdot, ydot] = field(0.0, Vec(0), vec3(1.0, 1.0, 1.0));
  CHECK(qdot.size() == 0);
  // I xi' = (I xi) x xi with I = diag(1,2,3) at xi = (1,1,1).
  CHECK((ydot - vec3(-1.0, 1.0, -1.0 / 3.0)).lpNorm<Eigen::Infinity>() < 1e-6);
}

TEST_CASE("hamel field integrates the coordinate-frame oscillator") {
  gvc::AlgebroidStructure frame = gvc::coordinate_frame(1);
  gvc::StateRhs field = gvc::hamel_vector_field(frame, sho_lagrangian());

  auto [qdot, ydot] = field(0.0, scalar(0.4), scalar(-0.2));
  CHECK(qdot(0) == doctest::Approx(-0.2));
  CHECK(std::abs(ydot(0) + 0.4) < 1e-6);

  Vec x0(2);
  x0 << 1.0, 0.0;
  gvc::Trajectory out = gvc::rk4(pack_rhs(field, 1), x0, 0.0, 2.0, 1e-3);
  double worst = 0.0;
  for (std::size_t i = 0; i < out.times.size(); ++i) {
    worst = std::max(worst, std::abs(out.states[i](0) - std::cos(out.times[i])));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("hamel residual vanishes along the flow and only there") {
  gvc::AlgebroidStructure frame = gvc::coordinate_frame(1);
  gvc::ScalarField L = sho_lagrangian();
  gvc::StateRhs field = gvc::hamel_vector_field(frame, L);

  Vec q = scalar(0.8);
  Vec y = scalar(-0.3);
  auto [qdot, ydot] = field(0.0, q, y);
  gvc::Jet on_shell{0.0, q, y, qdot, ydot};
  CHECK(gvc::hamel_residual(frame, L, on_shell).lpNorm<Eigen::Infinity>() < 1e-5);

  gvc::Jet off_shell{0.0, q, y, qdot, scalar(ydot(0) + 1.0)};
  CHECK(gvc::hamel_residual(frame, L, off_shell).lpNorm<Eigen::Infinity>() > 0.5);
}

TEST_CASE("the operator residual with mu = dL matches the hamel residual") {
  gvc::AlgebroidStructure so3 = gvc::so3_algebra();
  gvc::ScalarField L = rigid_body_lagrangian();
  gvc::MomentumField mu = [&L](const Vec& q, const Vec& y) {
    return gvc::CotangentValue{L.grad_a(q, y), L.grad_b(q, y)};
  };

  std::mt19937 rng(3);
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    gvc::Jet jet{0.0, Vec(0), vec3(coord(rng), coord(rng), coord(rng)), Vec(0),
                 vec3(coord(rng), coord(rng), coord(rng))};
    Vec a = gvc::el_residual(so3, mu, jet);
    Vec b = gvc::hamel_residual(so3, L, jet);
    // Both routes difference the momentum field, so the agreement floor is the
    // nested finite-difference noise, not machine precision.
    CHECK((a - b).lpNorm<Eigen::Infinity>() < 1e-5);
  }
}

TEST_CASE("the operator rejects inadmissible jets") {
  gvc::AlgebroidStructure frame = gvc::coordinate_frame(1);
  gvc::ScalarField L = sho_lagrangian();
  gvc::MomentumField mu = [&L](const Vec& q, const Vec& y) {
    return gvc::CotangentValue{L.grad_a(q, y), L.grad_b(q, y)};
  };
  gvc::Jet jet{0.0, scalar(0.5), scalar(1.0), scalar(0.2), scalar(0.0)};
  CHECK_THROWS_AS(gvc::el_residual(frame, mu, jet), gvc::InvalidArgument);
}

TEST_CASE("a degenerate lagrangian is rejected with a singular mass matrix") {
  gvc::AlgebroidStructure frame = gvc::coordinate_frame(1);
  gvc::ScalarField linear(1, 1, [](const Vec&, const Vec& y) { return y(0); });
  gvc::StateRhs field = gvc::hamel_vector_field(frame, linear);
  CHECK_THROWS_AS(field(0.0, scalar(0.0), scalar(1.0)), gvc::SingularMatrixError);
}

TEST_CASE("legendre transform matches closed forms and keeps exact gradients") {
  gvc::AlgebroidStructure frame = gvc::coordinate_frame(1);

  gvc::ScalarField quartic(1, 1,
                           [](const Vec&, const Vec& y) { return 0.25 * std::pow(y(0), 4); });
  gvc::ScalarField H = gvc::legendre_transform(frame, quartic);
  // p = y^3, so H(p) = (3/4) p^(4/3); at p = 8 that is 12 with y* = 2.
  CHECK(std::abs(H(scalar(0.1), scalar(8.0)) - 12.0) < 1e-8);
  CHECK(H.grad_b_is_analytic());
  CHECK(std::abs(H.grad_b(scalar(0.1), scalar(8.0))(0) - 2.0) < 1e-9);
  CHECK(std::abs(H.grad_a(scalar(0.1), scalar(8.0))(0)) < 1e-9);

  gvc::ScalarField pendulum(
      1, 1, [](const Vec& q, const Vec& y) { return 0.5 * y(0) * y(0) + std::cos(q(0)); });
  gvc::ScalarField Hp = gvc::legendre_transform(frame, pendulum);
  CHECK(std::abs(Hp(scalar(0.7), scalar(0.3)) -
                 (0.5 * 0.09 - std::cos(0.7))) < 1e-9);
}

TEST_CASE("lagrangian and hamiltonian pendulum flows agree") {
  gvc::AlgebroidStructure frame = gvc::coordinate_frame(1);
  gvc::ScalarField L(
      1, 1, [](const Vec& q, const Vec& y) { return 0.5 * y(0) * y(0) + std::cos(q(0)); });
  gvc::ScalarField H = gvc::legendre_transform(frame, L);

  Vec x0(2);
  x0 << 1.0, 0.0;  // p0 = dL/dy = y0 = 0 as well
  gvc::Trajectory lag = gvc::rk4(pack_rhs(gvc::hamel_vector_field(frame, L), 1), x0, 0.0,
                                 2.0, 1e-3);
  gvc::Trajectory ham = gvc::rk4(pack_rhs(gvc::hamilton_vector_field(frame, H), 1), x0,
                                 0.0, 2.0, 1e-3);
  REQUIRE(lag.times.size() == ham.times.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < lag.times.size(); ++i) {
    worst = std::max(worst, std::abs(lag.states[i](0) - ham.states[i](0)));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("hamilton field on so(3)* is the lie-poisson equation") {
  gvc::AlgebroidStructure so3 = gvc::so3_algebra();
  gvc::ScalarField H(0, 3, [](const Vec&, const Vec& p) {
    return 0.5 * (p(0) * p(0) + p(1) * p(1) / 2.0 + p(2) * p(2) / 3.0);
  });
  gvc::StateRhs field = gvc::hamilton_vector_field(so3, H);

  Vec p = vec3(1.0, 2.0, 3.0);
  auto [qdot, pdot] = field(0.0, Vec(0), p);
  CHECK(qdot.size() == 0);
  // p' = p x (Iinv p) with Iinv p = (1,1,1): p x (1,1,1) = (-1, 2, -1).
  CHECK((pdot - vec3(-1.0, 2.0, -1.0)).lpNorm<Eigen::Infinity>() < 1e-7);

  gvc::Trajectory flow = gvc::rk4(pack_rhs(field, 0), p, 0.0, 1.0, 1e-3);
  double drift = 0.0;
  for (const Vec& state : flow.states) {
    drift = std::max(drift, std::abs(state.norm() - p.norm()));
  }
  CHECK(drift < 1e-8);
}

TEST_CASE("euler-poincare and lie-poisson flows are legendre-related") {
  gvc::AlgebroidStructure so3 = gvc::so3_algebra();
  Vec inertia = vec3(1.0, 2.0, 3.0);
  gvc::ScalarField L = rigid_body_lagrangian();
  gvc::ScalarField H(0, 3, [&inertia](const Vec&, const Vec& p) {
    return 0.5 * (p.array().square() / inertia.array()).sum();
  });

  Vec xi0 = vec3(1.0, 1.0, 1.0);
  Vec p0 = xi0.cwiseProduct(inertia);
  gvc::Trajectory ep = gvc::rk4(pack_rhs(gvc::hamel_vector_field(so3, L), 0), xi0, 0.0,
                                1.0, 1e-3);
  gvc::Trajectory lp = gvc::rk4(pack_rhs(gvc::hamilton_vector_field(so3, H), 0), p0, 0.0,
                                1.0, 1e-3);
  REQUIRE(ep.times.size() == lp.times.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < ep.times.size(); ++i) {
    Vec mu = ep.states[i].cwiseProduct(inertia);
    worst = std::max(worst, (mu - lp.states[i]).lpNorm<Eigen::Infinity>());
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("a flipped bracket sign is caught by the reduction cross-check") {
  // Deliberate fixture: negate the so(3) constants (still skew) and verify the
  // Euler-Poincare/Lie-Poisson agreement test would fail loudly.
  gvc::StructureTensor flipped = gvc::so3_constants();
  for (Mat& level : flipped) {
    level = -level;
  }
  gvc::AlgebroidStructure wrong = gvc::lie_algebra(3, flipped);
  gvc::AlgebroidStructure right = gvc::so3_algebra();

  Vec inertia = vec3(1.0, 2.0, 3.0);
  gvc::ScalarField L = rigid_body_lagrangian();
  gvc::ScalarField H(0, 3, [&inertia](const Vec&, const Vec& p) {
    return 0.5 * (p.array().square() / inertia.array()).sum();
  });

  Vec xi0 = vec3(1.0, 1.0, 1.0);
  gvc::Trajectory ep = gvc::rk4(pack_rhs(gvc::hamel_vector_field(wrong, L), 0), xi0, 0.0,
                                1.0, 1e-2);
  gvc::Trajectory lp = gvc::rk4(pack_rhs(gvc::hamilton_vector_field(right, H), 0),
                                Vec(xi0.cwiseProduct(inertia)), 0.0, 1.0, 1e-2);
  double worst = 0.0;
  for (std::size_t i = 0; i < ep.times.size(); ++i) {
    Vec mu = ep.states[i].cwiseProduct(inertia);
    worst = std::max(worst, (mu - lp.states[i]).lpNorm<Eigen::Infinity>());
  }
  CHECK(worst > 1e-3);
}

TEST_CASE("vakonomic flow with no constraints collapses to the hamel flow") {
  gvc::VectorFieldList fields = {
      [](const Vec&) { return Vec(Vec::Unit(2, 0)); },
      [](const Vec& q) {
        Vec out = Vec::Zero(2);
        out(1) = 1.0 + 0.5 * q(0) * q(0);
        return out;
      }};
  gvc::AlgebroidStructure frame = gvc::frame_from_vectorfields(2, fields);
  gvc::ScalarField L(2, 2, [](const Vec& q, const Vec& y) {
    return 0.5 * y.squaredNorm() - q(0) * q(0) - 0.3 * q(1);
  });
  gvc::ConstraintMap none = [](const Vec&, const Vec&) { return Vec(0); };
  gvc::VakonomicRhs vak = gvc::vakonomic_vector_field(frame, L, none, 0);
  gvc::StateRhs hamel = gvc::hamel_vector_field(frame, L);

  std::mt19937 rng(5);
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Vec q(2), y(2);
    q << coord(rng), coord(rng);
    y << coord(rng), coord(rng);
    gvc::VakonomicDerivative dv = vak(0.0, {q, y, Vec(0)});
    auto [qdot, ydot] = hamel(0.0, q, y);
    CHECK((dv.qdot - qdot).lpNorm<Eigen::Infinity>() < 1e-10);
    CHECK((dv.y_free_dot - ydot).lpNorm<Eigen::Infinity>() < 1e-10);
    CHECK(dv.mu_con_dot.size() == 0);
  }
}

TEST_CASE("the martinet flow satisfies its six equations of motion") {
  gvc::AlgebroidStructure martinet = gvc::martinet_structure();
  gvc::ScalarField l(3, 2, [](const Vec&, const Vec& y_free) {
    return 0.5 * y_free.squaredNorm();
  });
  // Analytic first derivatives keep the assembled second derivatives at the
  // single-difference noise level, which the 1e-8 checks below rely on.
  l.set_grad_a([](const Vec&, const Vec&) { return Vec(Vec::Zero(3)); });
  l.set_grad_b([](const Vec&, const Vec& y_free) { return y_free; });
  gvc::ConstraintMap flat = [](const Vec&, const Vec&) { return Vec(Vec::Zero(1)); };
  gvc::VakonomicRhs field = gvc::vakonomic_vector_field(martinet, l, flat, 1);

  std::mt19937 rng(9);
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    Vec q = vec3(coord(rng), coord(rng), coord(rng));
    Vec y(2);
    y << coord(rng), coord(rng);
    Vec mu = scalar(coord(rng));
    gvc::VakonomicDerivative d = field(0.0, {q, y, mu});

    CHECK(std::abs(d.qdot(0) - y(1)) < 1e-8);
    CHECK(std::abs(d.qdot(1) - y(0)) < 1e-8);
    CHECK(std::abs(d.qdot(2) - 0.5 * q(1) * q(1) * y(1)) < 1e-8);
    CHECK(std::abs(d.y_free_dot(0) + mu(0) * q(1) * y(1)) < 1e-8);
    CHECK(std::abs(d.y_free_dot(1) - mu(0) * q(1) * y(0)) < 1e-8);
    CHECK(std::abs(d.mu_con_dot(0)) < 1e-8);
  }
}

TEST_CASE("dirac analysis reproduces the textbook constraint residuals") {
  gvc::ScalarField H(2, 2, [](const Vec& q, const Vec& p) {
    return 0.5 * p.squaredNorm() + q(0);
  });
  std::vector<gvc::ScalarField> phi = {
      gvc::ScalarField(2, 2, [](const Vec& q, const Vec&) { return q(1); })};

  std::mt19937 rng(13);
  std::uniform_real_distribution<double> coord(-2.0, 2.0);
  for (int trial = 0; trial < 10; ++trial) {
    Vec q(2), p(2);
    q << coord(rng), coord(rng);
    p << coord(rng), coord(rng);
    Vec residual = gvc::dirac_secondary_residual(H, phi, q, p, Vec::Zero(1));
    REQUIRE(residual.size() == 1);
    CHECK(std::abs(residual(0) - p(1)) < 1e-10);
  }

  // A first-class constraint has a singular bracket matrix.
  CHECK_THROWS_AS(gvc::dirac_multipliers(H, phi, Vec::Zero(2), Vec::Ones(2)),
                  gvc::SingularMatrixError);
}

TEST_CASE("dirac multipliers solve the second-class system") {
  gvc::ScalarField H(2, 2,
                     [](const Vec&, const Vec& p) { return 0.5 * p.squaredNorm(); });
  std::vector<gvc::ScalarField> phi = {
      gvc::ScalarField(2, 2, [](const Vec& q, const Vec&) { return q(0); }),
      gvc::ScalarField(2, 2, [](const Vec&, const Vec& p) { return p(0); })};
  Vec q(2), p(2);
  q << 0.3, -0.2;
  p << 0.8, 1.1;

  Vec lambda = gvc::dirac_multipliers(H, phi, q, p);
  REQUIRE(lambda.size() == 2);
  CHECK(std::abs(lambda(0)) < 1e-8);
  CHECK(std::abs(lambda(1) + 0.8) < 1e-8);
  CHECK(gvc::dirac_secondary_residual(H, phi, q, p, lambda).lpNorm<Eigen::Infinity>() <
        1e-8);
}

TEST_CASE("pontryagin pieces agree with the scalar LQ closed form") {
  gvc::AlgebroidStructure frame = gvc::coordinate_frame(1);
  gvc::ControlField gamma{1, 1, [](const Vec&, const Vec& u) { return u; }};
  gvc::ScalarField cost(1, 1, [](const Vec& q, const Vec& u) {
    return 0.5 * (q(0) * q(0) + u(0) * u(0));
  });

  gvc::PontryaginState probe{scalar(2.0), scalar(3.0), scalar(1.0)};
  CHECK(gvc::pontryagin_hamiltonian(gamma, cost, probe) == doctest::Approx(0.5));

  const double T = 1.0;
  auto q_star = [&](double t) { return std::cosh(T - t) / std::cosh(T); };
  auto u_star = [&](double t) { return -std::sinh(T - t) / std::cosh(T); };

  for (double t : {0.0, 0.3, 0.9}) {
    gvc::PontryaginState state{scalar(q_star(t)), scalar(u_star(t)), scalar(u_star(t))};
    gvc::PontryaginResidual r = gvc::pontryagin_residual(
        frame, gamma, cost, state, scalar(u_star(t)), scalar(q_star(t)));
    CHECK(r.stationarity.lpNorm<Eigen::Infinity>() < 1e-8);
    CHECK(r.costate_defect.lpNorm<Eigen::Infinity>() < 1e-8);
    CHECK(r.primal_defect.lpNorm<Eigen::Infinity>() < 1e-8);
  }

  gvc::Trajectory shot = gvc::pontryagin_shooting(
      frame, gamma, cost, scalar(1.0), gvc::TerminalCondition::free_endpoint(), T);
  REQUIRE(shot.labels.size() == 3);  // q, costate, control
  double worst_q = 0.0;
  double worst_u = 0.0;
  for (std::size_t i = 0; i < shot.times.size(); ++i) {
    worst_q = std::max(worst_q, std::abs(shot.states[i](0) - q_star(shot.times[i])));
    // For this problem the stationarity condition gives u = costate exactly.
    worst_u = std::max(worst_u, std::abs(shot.states[i](2) - shot.states[i](1)));
  }
  CHECK(worst_q < 1e-5);
  CHECK(worst_u < 1e-9);
}

TEST_CASE("pontryagin shooting hits a fixed endpoint") {
  gvc::AlgebroidStructure frame = gvc::coordinate_frame(1);
  gvc::ControlField gamma{1, 1, [](const Vec&, const Vec& u) { return u; }};
  gvc::ScalarField cost(1, 1, [](const Vec& q, const Vec& u) {
    return 0.5 * (q(0) * q(0) + u(0) * u(0));
  });
  gvc::Trajectory shot = gvc::pontryagin_shooting(
      frame, gamma, cost, scalar(1.0), gvc::TerminalCondition::fixed(scalar(0.5)), 1.0);
  CHECK(std::abs(shot.states.back()(0) - 0.5) < 1e-8);

  // Fixed-endpoint LQ has the explicit extremal A e^t + B e^{-t}.
  const double e = std::exp(1.0);
  const double B = (e - 0.5) / (e - 1.0 / e);
  const double A = 1.0 - B;
  double worst = 0.0;
  for (std::size_t i = 0; i < shot.times.size(); ++i) {
    const double t = shot.times[i];
    worst = std::max(worst,
                     std::abs(shot.states[i](0) - (A * std::exp(t) + B * std::exp(-t))));
  }
  CHECK(worst < 1e-5);
}
