#pragma once

#include "oic/core.hpp"

namespace oic {

enum class InfluenceSource { MEstimator, E2E, Constrained, MeanVariance, OLS, Custom };

struct InfluenceEstimate {
  Matrix per_sample;  ///< n x D_theta, row i is IF(xi_i)
  Matrix psi_hat;     ///< (1/n) sum IF IF^T
  InfluenceSource source = InfluenceSource::Custom;
  double conditioning = 1.0;

  static InfluenceEstimate from_rows(Matrix rows, InfluenceSource source, double conditioning = 1.0);
};

struct InfluenceSettings {
  double condition_cap = 1e10;
  /// Gradient-norm guard: ||mean grad|| <= optimality_tol * max(1, mean ||grad_i||).
  double optimality_tol = 1e-7;
  bool check_optimality = true;
  double active_tol = 1e-8;
  double licq_tol = 1e-10;
  double multiplier_tol = 1e-8;
  double pinv_floor = 1e-12;
};

using PsiFn = std::function<Vector(const Vector& theta, const Vector& xi, const Vector& z)>;
using GradPsiFn = std::function<Matrix(const Vector& theta, const Vector& xi, const Vector& z)>;

/// IF_i = -(mean grad psi)^-1 psi(theta; xi_i). Throws SingularJacobian.
InfluenceEstimate if_m_estimator(const PsiFn& psi, const GradPsiFn& grad_psi, const Vector& theta_hat,
                                 const Dataset& data, const InfluenceSettings& s = {});

/// Mean and variance of each listed column: per column j the pair
/// (xi_j - mu_j, (xi_j - mu_j)^2 - var_j), laid out as [means..., variances...].
/// var_divisor_offset 0 gives the 1/n variance, 1 the 1/(n-1) variance.
InfluenceEstimate if_mean_variance(const Dataset& data, const std::vector<Index>& columns,
                                   int var_divisor_offset = 0);

/// IF of the sample mean of each listed column.
InfluenceEstimate if_mean(const Dataset& data, const std::vector<Index>& columns);

/// Mean per-sample Hessian and the gradient matrix (rows grad_i) at theta.
struct EmpiricalDerivatives {
  Matrix hessian;    ///< (1/n) sum hess_i
  Matrix gradients;  ///< n x D_theta
};
EmpiricalDerivatives empirical_derivatives(const CostModel& cost, const Vector& theta, const Dataset& data);

/// Throws NotAtOptimum unless the mean gradient passes the guard.
void check_stationary(const Matrix& gradients, const InfluenceSettings& s);

/// IF_i = -I_h^-1 grad h_i. Throws SingularHessian, NotAtOptimum.
InfluenceEstimate if_e2e(const CostModel& cost, const Vector& theta_hat, const Dataset& data,
                         const InfluenceSettings& s = {});

/// Constraint g(theta) <= 0 expressed in theta (already composed with the rule).
struct Constraint {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> grad;
  std::function<Matrix(const Vector&)> hess;  ///< may be empty for linear constraints

  static Constraint linear(const Vector& a, double b);  ///< a^T theta - b <= 0
};

/// Active-set pieces shared by the constrained influence and criterion.
struct ActiveSetProjection {
  std::vector<Index> active;
  Matrix c;          ///< active constraint gradients as rows
  Matrix projector;  ///< I - C^T (C C^T)^+ C
  Matrix hessian;    ///< (1/n) sum hess h_i + sum_active alpha_j hess g_j
  Matrix gradients;  ///< n x D_theta
};
ActiveSetProjection active_set_projection(const CostModel& cost, const std::vector<Constraint>& g,
                                          const Vector& theta_hat, const Vector& multipliers,
                                          const Dataset& data, const InfluenceSettings& s = {});

/// IF_i = -P (I_{h,alpha})^+ P grad h_i. Throws LICQViolation, NegativeMultiplier.
InfluenceEstimate if_constrained(const CostModel& cost, const std::vector<Constraint>& g,
                                 const Vector& theta_hat, const Vector& multipliers,
                                 const Dataset& data, const InfluenceSettings& s = {});

/// Least-squares IF: IF_i = (Sigma + L)^-1 ((v_i - theta^T u_i) u_i - L theta), with
/// Sigma = (1/n) sum u u^T and L = diag(penalty). Zero penalty gives the plain
/// OLS form. Throws SingularDesign.
InfluenceEstimate if_ols(const Matrix& u, const Vector& v, const Vector& theta_hat,
                         const Vector& penalty = Vector(), const InfluenceSettings& s = {});

/// Dataset form: label column is v, the other sample columns are u.
InfluenceEstimate if_ols(const Dataset& data, const Vector& theta_hat, double ridge = 0.0,
                         const InfluenceSettings& s = {});

Matrix sandwich_covariance(const InfluenceEstimate& est);

} // namespace oic
