#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "gvc/core.hpp"

namespace gvc {

// Second-order data of an admissible curve at one instant.
struct Jet {
  double t = 0;
  Vec q;
  Vec y;
  Vec qdot;
  Vec ydot;
};

// State of the constrained variational (vakonomic) flow: base point, the
// unconstrained fiber velocities y^a, and the multiplier-momenta μ̃_α attached
// to the solved constraints. Convention: the constrained components are the
// last r of the m fiber coordinates, y = (y_free, Φ(q, y_free)).
struct VakonomicState {
  Vec q;
  Vec y_free;
  Vec mu_con;
};

struct VakonomicDerivative {
  Vec qdot;
  Vec y_free_dot;
  Vec mu_con_dot;
};

// Optimal-control state: base point, fiber costate μ̃, controls u.
struct PontryaginState {
  Vec q;
  Vec mu_fiber;
  Vec u;
};

struct PontryaginResidual {
  Vec stationarity;    // ∂H/∂u, length k
  Vec costate_defect;  // length m
  Vec primal_defect;   // length n
};

// Momentum covector field μ(q,y) feeding the Euler-Lagrange operator.
using MomentumField = std::function<CotangentValue(const Vec& q, const Vec& y)>;

// Residual of the generalized Euler-Lagrange operator at an admissible jet:
//   residual_A = d/dt μ̃_A − ρ^j_A μ_j + C^C_AB y^B μ̃_C,
// with the total derivative expanded by the chain rule through finite-
// difference partials of the momentum field (never by differencing along a
// trajectory): d/dt μ̃ = (∂μ̃/∂q) q̇ + (∂μ̃/∂y) ẏ.
Vec el_residual(const AlgebroidStructure& structure, const MomentumField& mu_field,
                const Jet& jet, const SolverConfig& config = {});

// Same residual with μ = dL:
//   residual_A = d/dt(∂L/∂y^A) − ρ^i_A ∂L/∂q^i + C^C_AB y^B ∂L/∂y^C.
// Equality with el_residual under μ = dL is itself a library test.
Vec hamel_residual(const AlgebroidStructure& structure, const ScalarField& L,
                   const Jet& jet);

using StateRhs = std::function<std::pair<Vec, Vec>(double t, const Vec& q, const Vec& y)>;

// Explicit form of the frame equations of motion: q̇ = ρ(q) y and
//   M_AB ẏ^B = ρ^i_A ∂L/∂q^i − C^C_AB y^B ∂L/∂y^C − (∂²L/∂y^A∂q^i) q̇^i
// with M the fiber Hessian of L. Throws SingularMatrixError naming the state
// when M is ill-conditioned (degenerate Lagrangian).
StateRhs hamel_vector_field(const AlgebroidStructure& structure, const ScalarField& L,
                            const SolverConfig& config = {});

// Hamilton equations on the dual: q̇ = ρ(q) ∂H/∂p and
//   ṗ_A = −ρ^j_A ∂H/∂q^j − C^C_AB (∂H/∂p_B) p_C.
// With n = 0 these are the classical Lie-Poisson equations.
StateRhs hamilton_vector_field(const AlgebroidStructure& structure, const ScalarField& H,
                               const SolverConfig& config = {});

// H(q,p) = p·y* − L(q,y*) with y* the Newton solution of p = ∂L/∂y (seeded at
// p). The returned field carries the stationarity-exact analytic gradients
// ∂H/∂q = −∂L/∂q(q,y*) and ∂H/∂p = y*.
ScalarField legendre_transform(const AlgebroidStructure& structure, const ScalarField& L,
                               const SolverConfig& config = {});

using ConstraintMap = std::function<Vec(const Vec& q, const Vec& y_free)>;
using VakonomicRhs =
    std::function<VakonomicDerivative(double t, const VakonomicState& state)>;

// Vakonomic flow for constraints in solved form y^α = Φ^α(q, y^a) (α ranging
// over the trailing r fiber indices). Implements the quasi-coordinate system
//   d/dt(∂l/∂y^a − μ̃_α ∂Φ^α/∂y^a) = (∂l/∂q^i − μ̃_α ∂Φ^α/∂q^i) ρ^i_a − μ̃_k C^k_{aj} y^j
//   d/dt μ̃_α                        = (∂l/∂q^i − μ̃_β ∂Φ^β/∂q^i) ρ^i_α − μ̃_k C^k_{αj} y^j
//   q̇^i = ρ^i_a y^a + ρ^i_α Φ^α,
// where the index k runs over all m fiber components with μ̃_a the bracketed
// momenta and y^α = Φ^α substituted. l consumes (q, y_free).
VakonomicRhs vakonomic_vector_field(const AlgebroidStructure& structure,
                                    const ScalarField& l, const ConstraintMap& phi,
                                    int constraint_count,
                                    const SolverConfig& config = {});

// One-step Dirac constraint analysis on a coordinate phase space: residual of
// the secondary-constraint condition
//   residual^α = ∂Φ^α/∂q·(∂H/∂p + λ_β ∂Φ^β/∂p) − ∂Φ^α/∂p·(∂H/∂q + λ_β ∂Φ^β/∂q),
// i.e. {Φ^α, H} + λ_β {Φ^α, Φ^β}.
Vec dirac_secondary_residual(const ScalarField& H, const std::vector<ScalarField>& phi,
                             const Vec& q, const Vec& p, const Vec& lambda);

// Solves {Φ^α,Φ^β} λ_β = −{Φ^α,H} for the multipliers; throws
// SingularMatrixError when the bracket matrix is singular (genuinely secondary
// constraints; iterating further is out of scope).
Vec dirac_multipliers(const ScalarField& H, const std::vector<ScalarField>& phi,
                      const Vec& q, const Vec& p, const SolverConfig& config = {});

// Pontryagin data: H(q,μ̃,u) = μ̃·Γ(q,u) − L(q,u).
double pontryagin_hamiltonian(const ControlField& gamma, const ScalarField& L,
                              const PontryaginState& state);

// Extremality residuals at a state with supplied derivatives (q̇, μ̃̇):
//   stationarity  = ∂H/∂u
//   costate defect = μ̃̇_A + ρ^j_A ∂H/∂q^j + C^C_AB Γ^B μ̃_C
//   primal defect  = q̇ − ρ(q) Γ(q,u).
PontryaginResidual pontryagin_residual(const AlgebroidStructure& structure,
                                       const ControlField& gamma, const ScalarField& L,
                                       const PontryaginState& state, const Vec& qdot,
                                       const Vec& mu_fiber_dot,
                                       const SolverConfig& config = {});

// Single shooting on the Pontryagin boundary-value problem over [0, T]:
// controls eliminated pointwise by Newton on ∂H/∂u = 0, the (q, μ̃) flow
// integrated by RK4 with step config.rk_dt, and the unknown initial costate
// solved by Newton against the terminal condition. The returned trajectory
// stacks [q, μ̃, u] per sample.
Trajectory pontryagin_shooting(const AlgebroidStructure& structure,
                               const ControlField& gamma, const ScalarField& L,
                               const Vec& q0, const TerminalCondition& terminal,
                               double T, const SolverConfig& config = {});

}  // namespace gvc
