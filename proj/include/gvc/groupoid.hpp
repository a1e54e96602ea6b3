#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "gvc/core.hpp"

namespace gvc {

// Local model of a Lie groupoid in one symmetric-neighborhood chart: elements
// carry coordinates (q, v) with q on the base and v the fiber coordinate, the
// identities sit at v = 0, the target map b gives the arrowhead b(q, v)
// (b(q,0) = q), and composable products multiply as
// (q,v)·(b(q,v),ṽ) = (q, p(q,v,ṽ)). Chart validity is |v| < chart_radius.
// The differential data ρ, L, R default to finite differences of b and p;
// models may install analytic overrides.
struct GroupoidModel {
  int base_dim = 0;   // n
  int fiber_dim = 0;  // m
  std::function<Vec(const Vec& q, const Vec& v)> target_map;
  std::function<Vec(const Vec& q, const Vec& v, const Vec& vt)> product_map;
  double chart_radius = std::numeric_limits<double>::infinity();

  std::function<Mat(const Vec& q)> anchor_override;
  std::function<Mat(const Vec& q, const Vec& v)> left_override;
  std::function<Mat(const Vec& q, const Vec& vt)> right_override;
};

// A Lie group seen as a groupoid over a single point (base_dim = 0), plus its
// coadjoint action in chart coordinates: coad(v, μ) = Ad*_g μ for g the
// element with chart coordinate v. coad(0, ·) is the identity and coad is
// linear in μ.
struct LieGroupModel {
  GroupoidModel model;
  std::function<Vec(const Vec& v, const Vec& mu)> coad;
};

// Chart coordinates of one groupoid element.
struct GroupoidElement {
  Vec q;
  Vec v;
};

// Anchor ρ^i_A(q) = ∂b^i/∂v^A(q, 0); empty (0×m) for a Lie group.
Mat extract_rho(const GroupoidModel& G, const Vec& q, const SolverConfig& config = {});

// Left-translation differential L^A_B(q,v) = ∂p^A/∂ṽ^B(q, v, 0).
Mat extract_L(const GroupoidModel& G, const Vec& q, const Vec& v,
              const SolverConfig& config = {});

// Right-translation differential R^A_B(q,ṽ) = ∂p^A/∂v^B(q, 0, ṽ).
Mat extract_R(const GroupoidModel& G, const Vec& q, const Vec& vt,
              const SolverConfig& config = {});

// Inverse arrow of g = (q, v): base point b(q, v) and fiber coordinate w
// Newton-solved from p(q, v, w) = 0 (the symmetric neighborhood guarantees a
// local solution; the seed is −v).
GroupoidElement groupoid_inverse(const GroupoidModel& G, const GroupoidElement& g,
                                 const SolverConfig& config = {});

// Discrete Euler-Lagrange residual of L_d(q, v) at the composable pair
// (g, h) = ((q,v), (q̃,ṽ)) with q̃ = b(q,v):
//   residual_A = ∂L_d/∂q^i(q̃,ṽ) ρ^i_A(q̃) + ∂L_d/∂v^B(q,v) L^B_A(q,v)
//                − ∂L_d/∂v^B(q̃,ṽ) R^B_A(q̃,ṽ).
// Throws InvalidArgument when ‖h.q − b(g.q, g.v)‖∞ > 1e−10 (non-composable).
Vec groupoid_del_residual(const GroupoidModel& G, const ScalarField& Ld,
                          const GroupoidElement& g, const GroupoidElement& h,
                          const SolverConfig& config = {});

// Newton solve of the residual above for the next element h = (b(q,v), ṽ);
// the guess defaults to ṽ = v.
GroupoidElement groupoid_del_step(const GroupoidModel& G, const ScalarField& Ld,
                                  const GroupoidElement& g,
                                  const std::optional<Vec>& guess = std::nullopt,
                                  const SolverConfig& config = {});

// Discrete Lie-Poisson momentum update μ_{k+1} = Ad*_{γ(k)} μ_k = coad(v_k, μ_k).
Vec lie_poisson_update(const LieGroupModel& group, const Vec& v, const Vec& mu);

// Discrete Euler-Poincaré equations on a Lie group: the base-point
// specialization of the groupoid discrete Euler-Lagrange equation, stepped N
// times from v_0. L_d consumes the chart coordinate only (a ScalarField with
// dim_a = 0). Returns the chart sequence v_0..v_N; by convention a horizon of
// zero yields an empty sequence.
std::vector<Vec> discrete_euler_poincare_solve(const LieGroupModel& group,
                                               const ScalarField& Ld, const Vec& v0,
                                               int horizon,
                                               const SolverConfig& config = {});

// Momentum μ_k = (r*_{γ(k)} dL_d)(e) = R(v_k)ᵀ ∂L_d/∂v(v_k); along the
// Euler-Poincaré sequence it obeys the discrete Lie-Poisson update.
Vec euler_poincare_momentum(const LieGroupModel& group, const ScalarField& Ld,
                            const Vec& v, const SolverConfig& config = {});

struct GroupoidConstrainedStep {
  GroupoidElement next;
  Vec lambda_next;
};

// One step of the discrete constrained system on the groupoid: with
// γ(k−1) = prev and q_k = b(prev), solve for (v_k, λ^{k+1}) in
//   0 = ∂(L_d+λ^{k+1}Φ)/∂q(q_k,v_k) ρ(q_k) + ∂(L_d+λ^kΦ)/∂v(γ(k−1)) L(γ(k−1))
//       − ∂(L_d+λ^{k+1}Φ)/∂v(q_k,v_k) R(q_k,v_k)
//   0 = Φ(q_k, v_k).
// Guesses default to v_k = prev.v and λ = 0; rejects r > m. With no
// constraints this is exactly groupoid_del_step.
GroupoidConstrainedStep groupoid_constrained_step(
    const GroupoidModel& G, const ScalarField& Ld, const std::vector<ScalarField>& phi,
    const GroupoidElement& prev, const Vec& lambda_prev,
    const std::optional<Vec>& v_guess = std::nullopt,
    const std::optional<Vec>& lambda_guess = std::nullopt,
    const SolverConfig& config = {});

// Residual blocks of the discrete optimal-control system on the groupoid,
// with elements γ(k) = (q_k, Γ_d(q_k, u_k)) and covectors μ(k) = (μ₁, μ₂)(k)
// at γ(k). The base components are eliminated algebraically through
// μ₁(k) = ∂L_d/∂q(q_k,u_k) − (∂Γ_d/∂q)ᵀ μ₂(k), so `costates` passes the fiber
// components μ₂(0..N−1) only.
//   stationarity[k] = (∂Γ_d/∂u)ᵀ μ₂(k) − ∂L_d/∂u(q_k,u_k)      0 ≤ k ≤ N−1
//   dynamics[k]     = q_{k+1} − b(q_k, Γ_d(q_k,u_k))            0 ≤ k ≤ N−1
//   junction[k−1]   = ρ(q_k)ᵀ μ₁(k) + L(γ(k−1))ᵀ μ₂(k−1)
//                     − R(γ(k))ᵀ μ₂(k)                          1 ≤ k ≤ N−1
//   terminal        = μ₂(N−1) (free endpoint) or q_N − qT (fixed).
struct GroupoidOcpResidual {
  std::vector<Vec> stationarity;
  std::vector<Vec> dynamics;
  std::vector<Vec> junction;
  Vec terminal;
};

GroupoidOcpResidual groupoid_ocp_residual(const GroupoidModel& G,
                                          const ControlField& gamma_d,
                                          const ScalarField& Ld,
                                          const std::vector<Vec>& states,
                                          const std::vector<Vec>& costates,
                                          const std::vector<Vec>& controls,
                                          const TerminalCondition& terminal,
                                          const SolverConfig& config = {});

struct GroupoidOcpSolution {
  std::vector<Vec> states;    // q_0..q_N
  std::vector<Vec> controls;  // u_0..u_{N−1}
  std::vector<Vec> costates;  // μ₂(0..N−1)
};

// Stacked Newton solve of the residual blocks above. A fixed terminal point
// balances the equation count only when fiber_dim = base_dim; other models
// must use the free endpoint. Degenerate problems (singular control Hessian)
// are rejected through a condition check of the system Jacobian.
GroupoidOcpSolution groupoid_ocp_solve(const GroupoidModel& G,
                                       const ControlField& gamma_d,
                                       const ScalarField& Ld, const Vec& q0,
                                       int horizon, const TerminalCondition& terminal,
                                       const SolverConfig& config = {});

// Pair groupoid on ℝⁿ: b(q,v) = q + v, p(q,v,ṽ) = v + ṽ, with exact
// differential overrides (identity matrices).
GroupoidModel pair_groupoid(int n);

// Rotation-vector utilities for the SO(3) chart.
Mat so3_hat(const Vec& v);
Mat so3_exp(const Vec& v);
Vec so3_log(const Mat& R);

// SO(3) in exponential (rotation-vector) coordinates: the product is
// composition-then-logarithm of rotation matrices, the chart is bounded by
// |v| < π − 0.1 to stay clear of the logarithm branch locus, and the
// coadjoint action in the vector identification is coad(v, μ) = exp(v̂)ᵀ μ.
LieGroupModel so3_group();

}  // namespace gvc
