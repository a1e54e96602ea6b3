#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "gvc/core.hpp"
#include "gvc/discrete.hpp"
#include "gvc/groupoid.hpp"
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

// Closed-form right Jacobian of the rotation-vector chart.
Mat right_jacobian(const Vec& v) {
  const double theta = v.norm();
  const Mat hat = gvc::so3_hat(v);
  const Mat hat2 = hat * hat;
  if (theta < 1e-6) {
    return Mat::Identity(3, 3) - 0.5 * hat + hat2 / 6.0;
  }
  return Mat::Identity(3, 3) - ((1.0 - std::cos(theta)) / (theta * theta)) * hat +
         ((theta - std::sin(theta)) / (theta * theta * theta)) * hat2;
}

Vec random_rotation_vector(std::mt19937& rng, double max_angle) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> radius(0.05, max_angle);
  Vec axis = vec3(gauss(rng), gauss(rng), gauss(rng));
  axis.normalize();
  return Vec(radius(rng) * axis);
}

}  // namespace

TEST_CASE("pair groupoid differentials are exact identities") {
  gvc::GroupoidModel pair = gvc::pair_groupoid(2);
  Vec q(2), v(2);
  q << 0.4, -1.0;
  v << 0.3, 0.7;

  CHECK((pair.target_map(q, v) - (q + v)).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((gvc::extract_rho(pair, q) - Mat::Identity(2, 2)).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((gvc::extract_L(pair, q, v) - Mat::Identity(2, 2)).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((gvc::extract_R(pair, q, v) - Mat::Identity(2, 2)).lpNorm<Eigen::Infinity>() == 0.0);

  // Strip the analytic overrides; the finite-difference extraction must agree.
  gvc::GroupoidModel bare = pair;
  bare.anchor_override = nullptr;
  bare.left_override = nullptr;
  bare.right_override = nullptr;
  CHECK((gvc::extract_rho(bare, q) - Mat::Identity(2, 2)).lpNorm<Eigen::Infinity>() < 1e-7);
  CHECK((gvc::extract_L(bare, q, v) - Mat::Identity(2, 2)).lpNorm<Eigen::Infinity>() < 1e-7);
  CHECK((gvc::extract_R(bare, q, v) - Mat::Identity(2, 2)).lpNorm<Eigen::Infinity>() < 1e-7);
}

TEST_CASE("rotation-vector chart round-trips away from the branch locus") {
  CHECK((gvc::so3_hat(vec3(1, 2, 3)) * vec3(0, 1, 0) - vec3(-3, 0, 1))
            .lpNorm<Eigen::Infinity>() == 0.0);

  std::mt19937 rng(23);
  for (int trial = 0; trial < 30; ++trial) {
    Vec v = random_rotation_vector(rng, M_PI - 0.2);
    Mat R = gvc::so3_exp(v);
    CHECK((R * R.transpose() - Mat::Identity(3, 3)).lpNorm<Eigen::Infinity>() < 1e-13);
    CHECK((gvc::so3_log(R) - v).lpNorm<Eigen::Infinity>() < 1e-10);
  }

  // Tiny angles use the series branch on both sides.
  Vec tiny = vec3(1e-9, -2e-9, 0.5e-9);
  CHECK((gvc::so3_log(gvc::so3_exp(tiny)) - tiny).lpNorm<Eigen::Infinity>() < 1e-15);

  // A half-turn sits on the branch locus of the logarithm.
  Mat flip = Mat::Identity(3, 3);
  flip(1, 1) = -1.0;
  flip(2, 2) = -1.0;
  CHECK_THROWS_AS(gvc::so3_log(flip), gvc::ChartError);
  CHECK_THROWS_AS(gvc::so3_log(gvc::so3_exp(vec3(M_PI - 1e-7, 0, 0))), gvc::ChartError);
}

TEST_CASE("so3 products respect the chart bound") {
  gvc::LieGroupModel so3 = gvc::so3_group();
  CHECK(so3.model.chart_radius == doctest::Approx(M_PI - 0.1));

  Vec a = vec3(0.3, -0.2, 0.5);
  Vec b = vec3(-0.1, 0.4, 0.2);
  Vec ab = so3.model.product_map(Vec(0), a, b);
  CHECK((gvc::so3_exp(ab) - gvc::so3_exp(a) * gvc::so3_exp(b)).lpNorm<Eigen::Infinity>() <
        1e-12);

  CHECK_THROWS_AS(so3.model.product_map(Vec(0), vec3(1.6, 0, 0), vec3(1.6, 0, 0)),
                  gvc::ChartError);
  CHECK_THROWS_AS(so3.model.product_map(Vec(0), vec3(3.1, 0, 0), vec3(0.1, 0, 0)),
                  gvc::ChartError);
}

TEST_CASE("translation differentials match the closed-form jacobians") {
  gvc::LieGroupModel so3 = gvc::so3_group();
  std::mt19937 rng(29);
  for (int trial = 0; trial < 10; ++trial) {
    Vec v = random_rotation_vector(rng, 1.5);
    Mat L = gvc::extract_L(so3.model, Vec(0), v);
    Mat R = gvc::extract_R(so3.model, Vec(0), v);
    CHECK((L - right_jacobian(v).inverse()).lpNorm<Eigen::Infinity>() < 1e-6);
    CHECK((R - right_jacobian(Vec(-v)).inverse()).lpNorm<Eigen::Infinity>() < 1e-6);
  }
}

TEST_CASE("groupoid inverses are chart negatives for both builtins") {
  gvc::GroupoidModel pair = gvc::pair_groupoid(2);
  Vec q(2), v(2);
  q << 1.0, -0.5;
  v << 0.2, 0.9;
  gvc::GroupoidElement inv = gvc::groupoid_inverse(pair, {q, v});
  CHECK((inv.q - (q + v)).lpNorm<Eigen::Infinity>() < 1e-12);
  CHECK((inv.v + v).lpNorm<Eigen::Infinity>() < 1e-10);

  gvc::LieGroupModel so3 = gvc::so3_group();
  Vec w = vec3(0.7, -0.3, 0.4);
  gvc::GroupoidElement winv = gvc::groupoid_inverse(so3.model, {Vec(0), w});
  CHECK((winv.v + w).lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("the groupoid residual refuses non-composable pairs") {
  gvc::GroupoidModel pair = gvc::pair_groupoid(1);
  gvc::ScalarField Ld(1, 1, [](const Vec&, const Vec& v) { return v(0) * v(0); });
  gvc::GroupoidElement g{scalar(0.0), scalar(0.5)};
  gvc::GroupoidElement bad{scalar(0.7), scalar(0.5)};  // target is 0.5, not 0.7
  CHECK_THROWS_AS(gvc::groupoid_del_residual(pair, Ld, g, bad), gvc::InvalidArgument);
}

TEST_CASE("pair-groupoid residual equals the two-point residual") {
  const double h = 0.1;
  auto two_point = [h](const Vec& a, const Vec& b) {
    const Vec mid = 0.5 * (a + b);
    return (b - a).squaredNorm() / (2.0 * h) - h * 0.5 * mid.squaredNorm();
  };
  gvc::DiscreteLagrangian F(2, two_point);
  gvc::GroupoidModel pair = gvc::pair_groupoid(2);
  gvc::ScalarField lifted(2, 2, [two_point](const Vec& q, const Vec& v) {
    return two_point(q, Vec(q + v));
  });

  std::mt19937 rng(31);
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Vec a(2), v(2), vt(2);
    a << coord(rng), coord(rng);
    v << coord(rng), coord(rng);
    vt << coord(rng), coord(rng);
    const Vec b = a + v;
    const Vec c = b + vt;
    Vec lhs = gvc::groupoid_del_residual(pair, lifted, {a, v}, {b, vt});
    Vec rhs = gvc::del_residual(F, a, b, c);
    CHECK((lhs - rhs).lpNorm<Eigen::Infinity>() < 1e-6);
  }
}

TEST_CASE("pair-groupoid steps transport the free velocity") {
  const double h = 0.1;
  gvc::GroupoidModel pair = gvc::pair_groupoid(1);
  gvc::ScalarField Ld(1, 1,
                      [h](const Vec&, const Vec& v) { return v.squaredNorm() / (2.0 * h); });
  gvc::GroupoidElement g{scalar(0.0), scalar(0.25)};
  for (int k = 0; k < 20; ++k) {
    g = gvc::groupoid_del_step(pair, Ld, g);
    CHECK(std::abs(g.v(0) - 0.25) < 1e-9);
  }
  CHECK(std::abs(g.q(0) - 20 * 0.25) < 1e-8);
}

TEST_CASE("coadjoint updates rotate momenta and preserve the casimir") {
  gvc::LieGroupModel so3 = gvc::so3_group();

  Vec mu = vec3(0.0, 1.0, 0.0);
  Vec quarter_x = vec3(M_PI / 2.0, 0.0, 0.0);
  CHECK((so3.coad(quarter_x, mu) - vec3(0.0, 0.0, -1.0)).lpNorm<Eigen::Infinity>() <
        1e-12);
  CHECK((so3.coad(Vec(Vec::Zero(3)), mu) - mu).lpNorm<Eigen::Infinity>() == 0.0);

  Vec v = vec3(0.02, 0.01, 0.015);
  Vec p = vec3(1.0, 0.0, 0.0);
  double drift = 0.0;
  for (int k = 0; k < 1000; ++k) {
    p = gvc::lie_poisson_update(so3, v, p);
    drift = std::max(drift, std::abs(p.norm() - 1.0));
  }
  CHECK(drift < 1e-12);
}

TEST_CASE("discrete euler-poincare momenta follow the lie-poisson update") {
  gvc::LieGroupModel so3 = gvc::so3_group();
  gvc::ScalarField Ld(0, 3, [](const Vec&, const Vec& v) {
    return 0.5 * (v(0) * v(0) + 2.0 * v(1) * v(1) + 3.0 * v(2) * v(2));
  });

  CHECK(gvc::discrete_euler_poincare_solve(so3, Ld, vec3(0.02, 0.01, 0.015), 0).empty());

  const int N = 20;
  std::vector<Vec> vs =
      gvc::discrete_euler_poincare_solve(so3, Ld, vec3(0.02, 0.01, 0.015), N);
  REQUIRE(static_cast<int>(vs.size()) == N + 1);

  double worst = 0.0;
  for (int k = 0; k < N; ++k) {
    Vec mu_k = gvc::euler_poincare_momentum(so3, Ld, vs[k]);
    Vec mu_next = gvc::euler_poincare_momentum(so3, Ld, vs[k + 1]);
    worst = std::max(
        worst, (mu_next - gvc::lie_poisson_update(so3, vs[k], mu_k)).lpNorm<Eigen::Infinity>());
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("constrained groupoid steps freeze the constrained fiber direction") {
  const double h = 0.1;
  gvc::GroupoidModel pair = gvc::pair_groupoid(2);
  gvc::ScalarField Ld(2, 2,
                      [h](const Vec&, const Vec& v) { return v.squaredNorm() / (2.0 * h); });
  std::vector<gvc::ScalarField> phi = {
      gvc::ScalarField(2, 2, [](const Vec&, const Vec& v) { return v(0); })};

  Vec q(2), v(2);
  q << 0.0, 0.0;
  v << 0.0, 0.3;
  gvc::GroupoidConstrainedStep step =
      gvc::groupoid_constrained_step(pair, Ld, phi, {q, v}, Vec::Zero(1));
  CHECK(std::abs(step.next.v(0)) < 1e-10);
  CHECK(std::abs(step.next.v(1) - 0.3) < 1e-10);
  CHECK(std::abs(step.lambda_next(0)) < 1e-9);

  // An infeasible previous velocity is absorbed by the multiplier: the first
  // equation gives v1 = v_prev1 - h lambda_next, so lambda_next = v_prev1 / h.
  Vec skew_v(2);
  skew_v << 0.2, 0.3;
  gvc::GroupoidConstrainedStep fixed =
      gvc::groupoid_constrained_step(pair, Ld, phi, {q, skew_v}, Vec::Zero(1));
  CHECK(std::abs(fixed.next.v(0)) < 1e-10);
  CHECK(std::abs(fixed.next.v(1) - 0.3) < 1e-9);
  CHECK(std::abs(fixed.lambda_next(0) - 0.2 / h) < 1e-7);

  // No constraints reduces to the plain step.
  gvc::GroupoidConstrainedStep plain =
      gvc::groupoid_constrained_step(pair, Ld, {}, {q, v}, Vec(0));
  gvc::GroupoidElement expect = gvc::groupoid_del_step(pair, Ld, {q, v});
  CHECK((plain.next.v - expect.v).lpNorm<Eigen::Infinity>() < 1e-12);

  std::vector<gvc::ScalarField> too_many(
      3, gvc::ScalarField(2, 2, [](const Vec&, const Vec& v_) { return v_(0); }));
  CHECK_THROWS_AS(
      gvc::groupoid_constrained_step(pair, Ld, too_many, {q, v}, Vec::Zero(3)),
      gvc::InvalidArgument);
}

TEST_CASE("groupoid optimal control reduces to the two-point solver") {
  const int N = 8;
  gvc::GroupoidModel pair = gvc::pair_groupoid(1);
  gvc::ControlField gamma_d{
      1, 1, [](const Vec& q, const Vec& u) { return Vec(0.1 * u - 0.02 * q); }};
  gvc::ScalarField cost(1, 1, [](const Vec& q, const Vec& u) {
    return 0.05 * (q(0) * q(0) + u(0) * u(0));
  });

  gvc::GroupoidOcpSolution gpd = gvc::groupoid_ocp_solve(
      pair, gamma_d, cost, scalar(1.0), N, gvc::TerminalCondition::free_endpoint());

  auto dynamics = [&gamma_d](const Vec& q, const Vec& u) {
    return Vec(q + gamma_d.gamma(q, u));
  };
  gvc::DiscreteControlSystem sys{dynamics, cost, 1};
  gvc::DiscreteOcpSolution disc = gvc::discrete_ocp_solve(
      sys, scalar(1.0), N, gvc::TerminalCondition::free_endpoint());

  REQUIRE(gpd.states.size() == disc.path.configs.size());
  for (int k = 0; k <= N; ++k) {
    CHECK((gpd.states[k] - disc.path.configs[k]).lpNorm<Eigen::Infinity>() < 1e-8);
  }
  for (int k = 0; k < N; ++k) {
    CHECK((gpd.controls[k] - disc.controls[k]).lpNorm<Eigen::Infinity>() < 1e-8);
    // Fiber costates map to the two-point costates with a sign flip.
    CHECK((gpd.costates[k] + disc.costates[k]).lpNorm<Eigen::Infinity>() < 1e-8);
  }

  gvc::GroupoidOcpResidual res = gvc::groupoid_ocp_residual(
      pair, gamma_d, cost, gpd.states, gpd.costates, gpd.controls,
      gvc::TerminalCondition::free_endpoint());
  for (const Vec& block : res.stationarity) {
    CHECK(block.lpNorm<Eigen::Infinity>() < 1e-8);
  }
  for (const Vec& block : res.dynamics) {
    CHECK(block.lpNorm<Eigen::Infinity>() < 1e-10);
  }
  for (const Vec& block : res.junction) {
    CHECK(block.lpNorm<Eigen::Infinity>() < 1e-7);
  }
  CHECK(res.terminal.lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("groupoid optimal control endpoint handling") {
  gvc::GroupoidModel pair = gvc::pair_groupoid(1);
  gvc::ControlField gamma_d{1, 1, [](const Vec&, const Vec& u) { return Vec(0.1 * u); }};
  gvc::ScalarField cost(1, 1, [](const Vec& q, const Vec& u) {
    return 0.05 * (q(0) * q(0) + u(0) * u(0));
  });
  gvc::GroupoidOcpSolution sol = gvc::groupoid_ocp_solve(
      pair, gamma_d, cost, scalar(1.0), 6, gvc::TerminalCondition::fixed(scalar(0.4)));
  CHECK(std::abs(sol.states.back()(0) - 0.4) < 1e-9);

  // A fixed endpoint needs fiber_dim == base_dim; the group case cannot do it.
  gvc::LieGroupModel so3 = gvc::so3_group();
  gvc::ControlField gamma3{1, 3, [](const Vec&, const Vec& u) {
                             return Vec(vec3(0.1 * u(0), 0.0, 0.0));
                           }};
  gvc::ScalarField cost3(0, 1, [](const Vec&, const Vec& u) { return u.squaredNorm(); });
  CHECK_THROWS_AS(
      gvc::groupoid_ocp_solve(so3.model, gamma3, cost3, Vec(0), 3,
                              gvc::TerminalCondition::fixed(Vec(0))),
      gvc::InvalidArgument);
}
