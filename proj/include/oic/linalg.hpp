#pragma once

#include <Eigen/Dense>

#include <functional>

namespace oic {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Inverse of a symmetric matrix through its eigendecomposition.
struct SymmetricInverse {
  Matrix inverse;
  double condition = 0.0;  ///< |λ|max / |λ|min, +inf when singular
  bool ok = false;         ///< condition below the cap and all |λ| > 0
};

SymmetricInverse symmetric_inverse(const Matrix& a, double condition_cap);

/// Pseudo-inverse of a symmetric matrix; eigenvalues with
/// |λ| <= rel_floor * |λ|max are dropped.
Matrix symmetric_pinv(const Matrix& a, double rel_floor = 1e-12);

/// Condition number from singular values (general square matrix).
double condition_number(const Matrix& a);

/// Numerical rank from singular values: count of σ > rel_tol * σmax.
Index numerical_rank(const Matrix& a, double rel_tol);

Matrix symmetrize(const Matrix& a);

/// Central finite differences. Step per coordinate is rel_step * (1 + |θ_k|).
Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& theta,
                   double rel_step = 1e-5);
Matrix fd_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& theta,
                   double rel_step = 1e-5);
Matrix fd_hessian(const std::function<double(const Vector&)>& f, const Vector& theta,
                  double rel_step = 1e-4);

} // namespace oic
