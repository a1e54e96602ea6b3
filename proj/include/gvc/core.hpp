#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gvc/numerics.hpp"
#include "gvc/types.hpp"

namespace gvc {

// Structure functions evaluated at a point: entry [C] is the m×m matrix of
// lower indices, so C[Cidx](A,B) = C^C_AB.
using StructureTensor = std::vector<Mat>;

// The bracket correction term shared by every equation of motion here:
// out_A = Σ_{C,B} C^C_AB y^B w_C.
Vec bracket_term(const StructureTensor& C, const Vec& y, const Vec& w);

// Max over entries of |C^C_AB + C^C_BA|.
double skew_defect(const StructureTensor& C);

// A skew-symmetric algebroid in one chart: base dimension n, fiber rank m,
// anchor ρ(q) mapping fiber velocities to base velocities, and structure
// functions C(q) skew in the lower indices. The degenerate corners are the
// coordinate frame of a tangent bundle (ρ = I, C = 0) and a Lie algebra
// (n = 0, constant C).
struct AlgebroidStructure {
  int base_dim = 0;
  int fiber_rank = 0;
  std::function<Mat(const Vec& q)> anchor;
  std::function<StructureTensor(const Vec& q)> structure;
};

// Chart point on the base manifold.
struct Point {
  Vec q;
};

// Fiber velocity attached to a base point (components y^A in the frame).
struct FiberVelocity {
  Point point;
  Vec y;
};

// Momentum covector split along the chart: μ_i dq^i + μ̃_A dy^A.
struct CotangentValue {
  Vec mu_base;
  Vec mu_fiber;
};

// Tangent bundle of ℝⁿ in its coordinate frame: ρ = identity, C = 0.
// Rejects n = 0; a zero-dimensional base is the lie_algebra case.
AlgebroidStructure coordinate_frame(int n);

// Lie algebra as an algebroid over a point: n = 0, constant structure
// constants. Rejects tensors that are not skew in the lower indices.
AlgebroidStructure lie_algebra(int m, StructureTensor constants);

using VectorFieldList = std::vector<std::function<Vec(const Vec&)>>;

// Moving frame {Y_1..Y_n} on ℝⁿ: anchor(q) is the frame matrix with columns
// Y_A(q); structure functions solve [Y_A,Y_B] = C^C_AB Y_C, with the brackets
// computed by central differences. Evaluation throws SingularMatrixError at
// points where the frame matrix is ill-conditioned.
AlgebroidStructure frame_from_vectorfields(int n, VectorFieldList fields,
                                           SolverConfig config = {});

// g-orthogonal projector onto the span of the columns of D: P = D(DᵀgD)⁻¹Dᵀg.
Mat orthogonal_projector(const Mat& D, const Mat& g);

// Rank-m distribution D = span{Y_1..Y_m} on ℝⁿ with an SPD metric g: anchor is
// the distribution matrix, and the bracket is the g-orthogonal projection of
// the ordinary bracket back onto D, expressed in the distribution basis.
AlgebroidStructure nonholonomic_structure(int n, VectorFieldList distribution,
                                          std::function<Mat(const Vec& q)> metric,
                                          SolverConfig config = {});

// Admissibility defect q̇ − ρ(q)y; zero exactly when the sampled curve is
// ρ-admissible at this instant.
Vec admissibility_defect(const AlgebroidStructure& structure, const Vec& qdot,
                         const FiberVelocity& velocity);

// Scalar function of two vector blocks, the shape of every scalar datum in
// the library: L(q,y), H(q,p), l(q,y_free), cost L(q,u), constraints Φ(q,p),
// discrete Lagrangians L_d(q,q̃) and L_d(q,v). Analytic gradients per block
// are optional accelerators; absent ones fall back to central differences.
// Second derivatives are central differences of the per-block gradient, with
// the nested (eps^(1/4)) step rule when that gradient is itself a finite
// difference.
class ScalarField {
 public:
  using Value = std::function<double(const Vec&, const Vec&)>;
  using Gradient = std::function<Vec(const Vec&, const Vec&)>;

  ScalarField() = default;
  ScalarField(int dim_a, int dim_b, Value value);

  int dim_a() const { return dim_a_; }
  int dim_b() const { return dim_b_; }

  double operator()(const Vec& a, const Vec& b) const;

  void set_grad_a(Gradient grad);
  void set_grad_b(Gradient grad);
  bool grad_a_is_analytic() const { return static_cast<bool>(grad_a_); }
  bool grad_b_is_analytic() const { return static_cast<bool>(grad_b_); }

  Vec grad_a(const Vec& a, const Vec& b) const;
  Vec grad_b(const Vec& a, const Vec& b) const;

  // ∂²/∂b∂b and ∂²(∂b)/∂a; the mass-matrix blocks of the equations of motion.
  Mat hess_bb(const Vec& a, const Vec& b) const;
  Mat hess_ba(const Vec& a, const Vec& b) const;

  // Largest componentwise gap between analytic and FD gradients at (a,b);
  // zero when no analytic gradient is attached.
  double gradient_defect(const Vec& a, const Vec& b) const;

  const SolverConfig& config() const { return config_; }

 private:
  void require_sized(const Vec& a, const Vec& b) const;

  int dim_a_ = 0;
  int dim_b_ = 0;
  Value value_;
  Gradient grad_a_;
  Gradient grad_b_;
  SolverConfig config_{};
};

// Terminal condition for optimal-control boundary-value problems, continuous
// or discrete: either a fixed terminal configuration or a zero terminal
// costate (free endpoint).
struct TerminalCondition {
  std::optional<Vec> fixed_q;
  static TerminalCondition fixed(Vec qT) { return {std::move(qT)}; }
  static TerminalCondition free_endpoint() { return {std::nullopt}; }
};

// Control-dependent fiber section Γ(q,u) with k controls; the target length
// is m for algebroid problems and n for tangent-bundle ones.
struct ControlField {
  int control_dim = 0;
  int target_dim = 0;
  std::function<Vec(const Vec& q, const Vec& u)> gamma;
};

Mat control_jac_q(const ControlField& field, const Vec& q, const Vec& u,
                  const SolverConfig& config = {});
Mat control_jac_u(const ControlField& field, const Vec& q, const Vec& u,
                  const SolverConfig& config = {});

}  // namespace gvc
