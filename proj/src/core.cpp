#include "gvc/core.hpp"

#include <cmath>
#include <utility>

namespace gvc {

Vec bracket_term(const StructureTensor& C, const Vec& y, const Vec& w) {
  const Eigen::Index m = y.size();
  Vec out = Vec::Zero(m);
  for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(C.size()); ++c)
    out += w[c] * (C[static_cast<std::size_t>(c)] * y);
  return out;
}

double skew_defect(const StructureTensor& C) {
  double worst = 0;
  for (const Mat& comp : C)
    worst = std::max(worst, (comp + comp.transpose()).cwiseAbs().maxCoeff());
  return worst;
}

namespace {

StructureTensor zero_tensor(int m) {
  return StructureTensor(static_cast<std::size_t>(m), Mat::Zero(m, m));
}

// Ordinary bracket of two vector fields on ℝⁿ by central differences:
// [X,Y] = (∂Y)X − (∂X)Y.
Vec fd_bracket(const std::function<Vec(const Vec&)>& X,
               const std::function<Vec(const Vec&)>& Y, const Vec& q,
               const SolverConfig& config) {
  const Mat jx = fd_jac(X, q, config);
  const Mat jy = fd_jac(Y, q, config);
  return jy * X(q) - jx * Y(q);
}

// Cholesky factor of an SPD matrix; throws InvalidArgument when the matrix is
// not symmetric positive definite. Used for metric checks and Gram solves.
Mat cholesky(const Mat& A, const std::string& context) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n) throw InvalidArgument(context + ": matrix must be square");
  if ((A - A.transpose()).cwiseAbs().maxCoeff() >
      1e-10 * std::max(1.0, A.cwiseAbs().maxCoeff()))
    throw InvalidArgument(context + ": matrix is not symmetric");
  Mat L = Mat::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double diag = A(j, j) - L.row(j).head(j).squaredNorm();
    if (!(diag > 0)) throw InvalidArgument(context + ": matrix is not positive definite");
    L(j, j) = std::sqrt(diag);
    for (Eigen::Index i = j + 1; i < n; ++i)
      L(i, j) = (A(i, j) - L.row(i).head(j).dot(L.row(j).head(j))) / L(j, j);
  }
  return L;
}

Vec cholesky_solve(const Mat& L, Vec b) {
  const Eigen::Index n = L.rows();
  for (Eigen::Index i = 0; i < n; ++i)
    b[i] = (b[i] - L.row(i).head(i).dot(b.head(i))) / L(i, i);
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    for (Eigen::Index k = i + 1; k < n; ++k) b[i] -= L(k, i) * b[k];
    b[i] /= L(i, i);
  }
  return b;
}

}  // namespace

AlgebroidStructure coordinate_frame(int n) {
  if (n < 1)
    throw InvalidArgument(
        "coordinate_frame: base dimension must be at least 1 (a zero-dimensional "
        "base is the lie_algebra case)");
  AlgebroidStructure s;
  s.base_dim = n;
  s.fiber_rank = n;
  s.anchor = [n](const Vec&) { return Mat::Identity(n, n); };
  s.structure = [n](const Vec&) { return zero_tensor(n); };
  return s;
}

AlgebroidStructure lie_algebra(int m, StructureTensor constants) {
  if (m < 1) throw InvalidArgument("lie_algebra: fiber rank must be at least 1");
  if (static_cast<int>(constants.size()) != m)
    throw InvalidArgument("lie_algebra: tensor must have m upper components");
  for (const Mat& comp : constants)
    if (comp.rows() != m || comp.cols() != m)
      throw InvalidArgument("lie_algebra: each tensor component must be m×m");
  if (skew_defect(constants) > 1e-12)
    throw InvalidArgument("lie_algebra: constants must be skew in the lower indices");
  AlgebroidStructure s;
  s.base_dim = 0;
  s.fiber_rank = m;
  s.anchor = [m](const Vec&) { return Mat::Zero(0, m); };
  s.structure = [constants = std::move(constants)](const Vec&) { return constants; };
  return s;
}

AlgebroidStructure frame_from_vectorfields(int n, VectorFieldList fields,
                                           SolverConfig config) {
  if (n < 1) throw InvalidArgument("frame_from_vectorfields: need n >= 1");
  if (static_cast<int>(fields.size()) != n)
    throw InvalidArgument("frame_from_vectorfields: a frame needs exactly n fields");

  auto frame_matrix = [n, fields](const Vec& q) {
    Mat rho(n, n);
    for (int a = 0; a < n; ++a) {
      const Vec column = fields[static_cast<std::size_t>(a)](q);
      if (column.size() != n)
        throw InvalidArgument("frame_from_vectorfields: field output must have length n");
      rho.col(a) = column;
    }
    return rho;
  };

  AlgebroidStructure s;
  s.base_dim = n;
  s.fiber_rank = n;
  s.anchor = frame_matrix;
  s.structure = [n, fields, frame_matrix, config](const Vec& q) {
    const Mat rho = frame_matrix(q);
    StructureTensor C = zero_tensor(n);
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b) {
        const Vec bracket = fd_bracket(fields[static_cast<std::size_t>(a)],
                                       fields[static_cast<std::size_t>(b)], q, config);
        const Vec coeff =
            linsolve(rho, bracket, config, "frame_from_vectorfields (frame solve)").x;
        for (int c = 0; c < n; ++c) {
          C[static_cast<std::size_t>(c)](a, b) = coeff[c];
          C[static_cast<std::size_t>(c)](b, a) = -coeff[c];
        }
      }
    return C;
  };
  return s;
}

Mat orthogonal_projector(const Mat& D, const Mat& g) {
  const Mat gram = D.transpose() * g * D;
  const Mat L = cholesky(gram, "orthogonal_projector (distribution Gram matrix)");
  Mat coeffs(D.cols(), D.rows());
  const Mat rhs = D.transpose() * g;
  for (Eigen::Index j = 0; j < rhs.cols(); ++j)
    coeffs.col(j) = cholesky_solve(L, rhs.col(j));
  return D * coeffs;
}

AlgebroidStructure nonholonomic_structure(int n, VectorFieldList distribution,
                                          std::function<Mat(const Vec& q)> metric,
                                          SolverConfig config) {
  if (n < 1) throw InvalidArgument("nonholonomic_structure: need n >= 1");
  const int m = static_cast<int>(distribution.size());
  if (m < 1 || m > n)
    throw InvalidArgument("nonholonomic_structure: need 1 <= rank <= n fields");

  auto distribution_matrix = [n, m, distribution](const Vec& q) {
    Mat D(n, m);
    for (int a = 0; a < m; ++a) {
      const Vec column = distribution[static_cast<std::size_t>(a)](q);
      if (column.size() != n)
        throw InvalidArgument("nonholonomic_structure: field output must have length n");
      D.col(a) = column;
    }
    return D;
  };

  AlgebroidStructure s;
  s.base_dim = n;
  s.fiber_rank = m;
  s.anchor = distribution_matrix;
  s.structure = [m, distribution, distribution_matrix, metric, config](const Vec& q) {
    const Mat D = distribution_matrix(q);
    const Mat g = metric(q);
    const Mat gram = D.transpose() * g * D;
    const Mat L = cholesky(gram, "nonholonomic_structure (distribution Gram matrix)");
    StructureTensor C = zero_tensor(m);
    for (int a = 0; a < m; ++a)
      for (int b = a + 1; b < m; ++b) {
        const Vec bracket = fd_bracket(distribution[static_cast<std::size_t>(a)],
                                       distribution[static_cast<std::size_t>(b)], q,
                                       config);
        // Coefficients of the projected bracket in the distribution basis:
        // P[X,Y] = D (DᵀgD)⁻¹ Dᵀ g [X,Y].
        const Vec coeff = cholesky_solve(L, D.transpose() * (g * bracket));
        for (int c = 0; c < m; ++c) {
          C[static_cast<std::size_t>(c)](a, b) = coeff[c];
          C[static_cast<std::size_t>(c)](b, a) = -coeff[c];
        }
      }
    return C;
  };
  return s;
}

Vec admissibility_defect(const AlgebroidStructure& structure, const Vec& qdot,
                         const FiberVelocity& velocity) {
  if (velocity.point.q.size() != structure.base_dim ||
      velocity.y.size() != structure.fiber_rank || qdot.size() != structure.base_dim)
    throw InvalidArgument("admissibility_defect: dimension mismatch");
  return qdot - structure.anchor(velocity.point.q) * velocity.y;
}

ScalarField::ScalarField(int dim_a, int dim_b, Value value)
    : dim_a_(dim_a), dim_b_(dim_b), value_(std::move(value)) {
  if (dim_a_ < 0 || dim_b_ < 0 || !value_)
    throw InvalidArgument("scalar field: need nonnegative dims and an evaluator");
}

void ScalarField::require_sized(const Vec& a, const Vec& b) const {
  if (!value_) throw InvalidArgument("scalar field: empty");
  if (a.size() != dim_a_ || b.size() != dim_b_)
    throw InvalidArgument("scalar field: argument dimensions do not match");
}

double ScalarField::operator()(const Vec& a, const Vec& b) const {
  require_sized(a, b);
  return value_(a, b);
}

void ScalarField::set_grad_a(Gradient grad) { grad_a_ = std::move(grad); }
void ScalarField::set_grad_b(Gradient grad) { grad_b_ = std::move(grad); }

Vec ScalarField::grad_a(const Vec& a, const Vec& b) const {
  require_sized(a, b);
  if (grad_a_) return grad_a_(a, b);
  return fd_grad([&](const Vec& z) { return value_(z, b); }, a, config_);
}

Vec ScalarField::grad_b(const Vec& a, const Vec& b) const {
  require_sized(a, b);
  if (grad_b_) return grad_b_(a, b);
  return fd_grad([&](const Vec& z) { return value_(a, z); }, b, config_);
}

Mat ScalarField::hess_bb(const Vec& a, const Vec& b) const {
  require_sized(a, b);
  const auto grad = [&](const Vec& z) { return grad_b(a, z); };
  if (grad_b_) return fd_jac(grad, b, config_);
  const Mat raw = fd_jac_nested(grad, b, config_);
  return (raw + raw.transpose()) / 2;
}

Mat ScalarField::hess_ba(const Vec& a, const Vec& b) const {
  require_sized(a, b);
  const auto grad = [&](const Vec& z) { return grad_b(z, b); };
  if (grad_b_) return fd_jac(grad, a, config_);
  return fd_jac_nested(grad, a, config_);
}

double ScalarField::gradient_defect(const Vec& a, const Vec& b) const {
  require_sized(a, b);
  double worst = 0;
  if (grad_a_) {
    const Vec fd = fd_grad([&](const Vec& z) { return value_(z, b); }, a, config_);
    if (dim_a_ > 0) worst = std::max(worst, (grad_a_(a, b) - fd).cwiseAbs().maxCoeff());
  }
  if (grad_b_) {
    const Vec fd = fd_grad([&](const Vec& z) { return value_(a, z); }, b, config_);
    if (dim_b_ > 0) worst = std::max(worst, (grad_b_(a, b) - fd).cwiseAbs().maxCoeff());
  }
  return worst;
}

Mat control_jac_q(const ControlField& field, const Vec& q, const Vec& u,
                  const SolverConfig& config) {
  return fd_jac([&](const Vec& z) { return field.gamma(z, u); }, q, config);
}

Mat control_jac_u(const ControlField& field, const Vec& q, const Vec& u,
                  const SolverConfig& config) {
  return fd_jac([&](const Vec& z) { return field.gamma(q, z); }, u, config);
}

}  // namespace gvc
