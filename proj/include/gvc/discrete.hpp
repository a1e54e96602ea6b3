#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "gvc/core.hpp"

namespace gvc {

// Discrete Lagrangian L_d(q, q̃) on pairs of configurations. Slot derivatives
// D1 (first argument) and D2 (second argument) default to central finite
// differences; analytic overrides are accelerators and must agree with the
// differences (see derivative_defect).
class DiscreteLagrangian {
 public:
  using Value = std::function<double(const Vec&, const Vec&)>;
  using SlotDerivative = std::function<Vec(const Vec&, const Vec&)>;

  DiscreteLagrangian() = default;
  DiscreteLagrangian(int n, Value value) : field_(n, n, std::move(value)) {}

  int n() const { return field_.dim_a(); }
  double operator()(const Vec& q, const Vec& q_next) const { return field_(q, q_next); }

  void set_d1(SlotDerivative d) { field_.set_grad_a(std::move(d)); }
  void set_d2(SlotDerivative d) { field_.set_grad_b(std::move(d)); }

  Vec d1(const Vec& q, const Vec& q_next) const { return field_.grad_a(q, q_next); }
  Vec d2(const Vec& q, const Vec& q_next) const { return field_.grad_b(q, q_next); }

  // Largest componentwise gap between attached analytic slot derivatives and
  // their finite-difference counterparts at (q, q̃); zero when none attached.
  double derivative_defect(const Vec& q, const Vec& q_next) const {
    return field_.gradient_defect(q, q_next);
  }

  const ScalarField& field() const { return field_; }

 private:
  ScalarField field_;
};

// Discrete curve σ(0..N), optionally with one multiplier vector per pair:
// multipliers[j] is the λ attached to the pair (configs[j], configs[j+1]).
struct DiscretePath {
  std::vector<Vec> configs;
  std::vector<Vec> multipliers;
};

// Throws InvalidArgument unless configurations have uniform dimension and, if
// multipliers are present, there is exactly one per consecutive pair and all
// have uniform dimension.
void validate(const DiscretePath& path);

// Discrete control system: next configuration Γ̃_d(q, u) and running cost
// L(q, u); the configuration dimension is cost.dim_a() and the control
// dimension cost.dim_b().
struct DiscreteControlSystem {
  std::function<Vec(const Vec& q, const Vec& u)> gamma_d;
  ScalarField cost;
  int control_dim = 0;
};

// Discrete Euler-Lagrange residual at an interior point:
//   D1 L_d(q, q_next) + D2 L_d(q_prev, q).
Vec del_residual(const DiscreteLagrangian& Ld, const Vec& q_prev, const Vec& q,
                 const Vec& q_next);

// Newton solve of del_residual = 0 for q_next; the default guess is the free
// extrapolation 2q − q_prev. After solving, the local invertibility of
// D1 L_d(q, ·) required by the method is verified through the condition
// estimate of the residual Jacobian; degenerate discrete Lagrangians are
// rejected with SingularMatrixError even when the residual happens to vanish.
Vec del_step(const DiscreteLagrangian& Ld, const Vec& q_prev, const Vec& q,
             const std::optional<Vec>& guess = std::nullopt,
             const SolverConfig& config = {});

struct ConstrainedStep {
  Vec q_next;
  Vec lambda_next;
};

// One step of the discrete constrained system
//   D1(L_d + λ^{k+1}_α Φ^α)(σ(k), σ(k+1)) + D2(L_d + λ^k_α Φ^α)(σ(k−1), σ(k)) = 0
//   Φ^α(σ(k), σ(k+1)) = 0,
// solved by Newton in the pair (q_next, λ_next). Multiplier indexing pairs
// λ^{k+1} with the D1 slot and λ^k with the D2 slot. Guesses default to
// 2q − q_prev and zero. Rejects r > n (over-constrained). With no constraints
// this is exactly del_step.
ConstrainedStep discrete_constrained_step(const DiscreteLagrangian& Ld,
                                          const std::vector<ScalarField>& phi,
                                          const Vec& q_prev, const Vec& q,
                                          const Vec& lambda_prev,
                                          const std::optional<Vec>& q_guess = std::nullopt,
                                          const std::optional<Vec>& lambda_guess = std::nullopt,
                                          const SolverConfig& config = {});

struct DiscreteOcpSolution {
  DiscretePath path;           // σ(0..N)
  std::vector<Vec> controls;   // u(0..N−1)
  std::vector<Vec> costates;   // μ₁(1..N)
};

// Discrete optimal control over horizon N with H(q, μ₁, u) = μ₁·Γ̃_d(q,u) + L(q,u):
//   μ₁(k)   = ∂H/∂q(σ(k), μ₁(k+1), u(k))   for 1 ≤ k ≤ N−1
//   0       = ∂H/∂u(σ(k), μ₁(k+1), u(k))   for 0 ≤ k ≤ N−1
//   σ(k+1)  = Γ̃_d(σ(k), u(k))              for 0 ≤ k ≤ N−1
// plus either σ(N) fixed or the transversality condition μ₁(N) = 0. Solved as
// one stacked Newton system over (controls, costates, interior states);
// endpoints are data, never unknowns. Throws InvalidArgument for N < 1 and
// SingularMatrixError for degenerate stationarity blocks (singular ∂²H/∂u²).
DiscreteOcpSolution discrete_ocp_solve(const DiscreteControlSystem& sys, const Vec& q0,
                                       int horizon, const TerminalCondition& terminal,
                                       const SolverConfig& config = {});

// Discrete momentum p_k = D2 L_d(q_prev, q); constant along del_step
// trajectories of translation-invariant discrete Lagrangians.
Vec discrete_momentum(const DiscreteLagrangian& Ld, const Vec& q_prev, const Vec& q);

}  // namespace gvc
