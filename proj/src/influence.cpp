#include "oic/influence.hpp"

#include <cmath>

namespace oic {

InfluenceEstimate InfluenceEstimate::from_rows(Matrix rows, InfluenceSource source, double conditioning) {
  InfluenceEstimate e;
  e.per_sample = std::move(rows);
  e.source = source;
  e.conditioning = conditioning;
  e.psi_hat = sandwich_covariance(e);
  return e;
}

Matrix sandwich_covariance(const InfluenceEstimate& est) {
  const double n = static_cast<double>(est.per_sample.rows());
  if (n == 0) return Matrix::Zero(est.per_sample.cols(), est.per_sample.cols());
  return symmetrize(est.per_sample.transpose() * est.per_sample / n);
}

InfluenceEstimate if_m_estimator(const PsiFn& psi, const GradPsiFn& grad_psi, const Vector& theta_hat,
                                 const Dataset& data, const InfluenceSettings& s) {
  const Index n = data.n(), d = theta_hat.size();
  Matrix jac = Matrix::Zero(d, d);
  Matrix rows(n, d);
  for (Index i = 0; i < n; ++i) {
    const Vector xi = data.xi(i), z = data.z(i);
    jac += grad_psi(theta_hat, xi, z);
    rows.row(i) = psi(theta_hat, xi, z).transpose();
  }
  jac /= static_cast<double>(n);
  const double cond = condition_number(jac);
  if (!std::isfinite(cond) || cond > s.condition_cap)
    throw SingularJacobian("condition number " + std::to_string(cond));
  const Eigen::PartialPivLU<Matrix> lu(jac);
  Matrix out = -lu.solve(rows.transpose()).transpose();
  return InfluenceEstimate::from_rows(std::move(out), InfluenceSource::MEstimator, cond);
}

InfluenceEstimate if_mean_variance(const Dataset& data, const std::vector<Index>& columns,
                                   int var_divisor_offset) {
  const Index n = data.n(), k = static_cast<Index>(columns.size());
  Matrix rows(n, 2 * k);
  for (Index j = 0; j < k; ++j) {
    const Vector col = data.samples().col(columns[static_cast<std::size_t>(j)]);
    const double mu = col.mean();
    const double var = (col.array() - mu).square().sum() / static_cast<double>(n - var_divisor_offset);
    rows.col(j) = col.array() - mu;
    rows.col(k + j) = (col.array() - mu).square() - var;
  }
  return InfluenceEstimate::from_rows(std::move(rows), InfluenceSource::MeanVariance);
}

InfluenceEstimate if_mean(const Dataset& data, const std::vector<Index>& columns) {
  const Index n = data.n(), k = static_cast<Index>(columns.size());
  Matrix rows(n, k);
  for (Index j = 0; j < k; ++j) {
    const Vector col = data.samples().col(columns[static_cast<std::size_t>(j)]);
    rows.col(j) = col.array() - col.mean();
  }
  return InfluenceEstimate::from_rows(std::move(rows), InfluenceSource::MeanVariance);
}

EmpiricalDerivatives empirical_derivatives(const CostModel& cost, const Vector& theta, const Dataset& data) {
  const Index n = data.n(), d = theta.size();
  EmpiricalDerivatives out;
  out.hessian = Matrix::Zero(d, d);
  out.gradients.resize(n, d);
  for (Index i = 0; i < n; ++i) {
    const Vector xi = data.xi(i), z = data.z(i);
    const Vector g = cost.grad_theta(theta, xi, z);
    if (!g.allFinite()) throw NonFiniteGradient("row " + std::to_string(i));
    out.gradients.row(i) = g.transpose();
    out.hessian += cost.hess_theta(theta, xi, z);
  }
  out.hessian = symmetrize(out.hessian / static_cast<double>(n));
  return out;
}

void check_stationary(const Matrix& gradients, const InfluenceSettings& s) {
  if (!s.check_optimality) return;
  const double mean_norm = gradients.rowwise().norm().mean();
  const double g = gradients.colwise().mean().norm();
  if (g > s.optimality_tol * std::max(1.0, mean_norm))
    throw NotAtOptimum("mean gradient norm " + std::to_string(g));
}

InfluenceEstimate if_e2e(const CostModel& cost, const Vector& theta_hat, const Dataset& data,
                         const InfluenceSettings& s) {
  const auto d = empirical_derivatives(cost, theta_hat, data);
  check_stationary(d.gradients, s);
  const auto inv = symmetric_inverse(d.hessian, s.condition_cap);
  if (!inv.ok) throw SingularHessian("condition number " + std::to_string(inv.condition));
  Matrix rows = -d.gradients * inv.inverse;  // inverse is symmetric
  return InfluenceEstimate::from_rows(std::move(rows), InfluenceSource::E2E, inv.condition);
}

Constraint Constraint::linear(const Vector& a, double b) {
  Constraint c;
  c.value = [a, b](const Vector& t) { return a.dot(t) - b; };
  c.grad = [a](const Vector&) { return a; };
  return c;
}

ActiveSetProjection active_set_projection(const CostModel& cost, const std::vector<Constraint>& g,
                                          const Vector& theta_hat, const Vector& multipliers,
                                          const Dataset& data, const InfluenceSettings& s) {
  if (multipliers.size() != static_cast<Index>(g.size()))
    throw InvalidArgument("one multiplier per constraint required");
  const Index d = theta_hat.size();
  ActiveSetProjection out;
  for (std::size_t j = 0; j < g.size(); ++j) {
    if (std::abs(g[j].value(theta_hat)) <= s.active_tol) {
      if (multipliers(static_cast<Index>(j)) < -s.multiplier_tol)
        throw NegativeMultiplier("constraint " + std::to_string(j));
      out.active.push_back(static_cast<Index>(j));
    }
  }
  const Index k = static_cast<Index>(out.active.size());
  out.c.resize(k, d);
  for (Index r = 0; r < k; ++r) out.c.row(r) = g[static_cast<std::size_t>(out.active[static_cast<std::size_t>(r)])].grad(theta_hat).transpose();
  if (k > 0 && numerical_rank(out.c, s.licq_tol) < k)
    throw LICQViolation("active constraint gradients are dependent");
  out.projector = Matrix::Identity(d, d);
  if (k > 0) out.projector -= out.c.transpose() * symmetric_pinv(out.c * out.c.transpose(), s.pinv_floor) * out.c;
  out.projector = symmetrize(out.projector);
  const auto der = empirical_derivatives(cost, theta_hat, data);
  out.gradients = der.gradients;
  out.hessian = der.hessian;
  for (Index j : out.active) {
    const auto& cj = g[static_cast<std::size_t>(j)];
    if (cj.hess) out.hessian += multipliers(j) * cj.hess(theta_hat);
  }
  out.hessian = symmetrize(out.hessian);
  return out;
}

InfluenceEstimate if_constrained(const CostModel& cost, const std::vector<Constraint>& g,
                                 const Vector& theta_hat, const Vector& multipliers,
                                 const Dataset& data, const InfluenceSettings& s) {
  const auto a = active_set_projection(cost, g, theta_hat, multipliers, data, s);
  const Matrix m = a.projector * symmetric_pinv(a.hessian, s.pinv_floor) * a.projector;
  Matrix rows = -a.gradients * m.transpose();
  const double cond = condition_number(a.hessian);
  return InfluenceEstimate::from_rows(std::move(rows), InfluenceSource::Constrained, cond);
}

InfluenceEstimate if_ols(const Matrix& u, const Vector& v, const Vector& theta_hat,
                         const Vector& penalty, const InfluenceSettings& s) {
  const Index n = u.rows(), d = u.cols();
  if (v.size() != n) throw RowMismatch("response length differs from design rows");
  if (theta_hat.size() != d) throw InvalidArgument("theta dimension differs from design columns");
  Matrix sigma = u.transpose() * u / static_cast<double>(n);
  Vector lth = Vector::Zero(d);
  if (penalty.size() == d) {
    sigma.diagonal() += penalty;
    lth = penalty.cwiseProduct(theta_hat);
  }
  const auto inv = symmetric_inverse(sigma, s.condition_cap);
  if (!inv.ok) throw SingularDesign("condition number " + std::to_string(inv.condition));
  const Vector resid = v - u * theta_hat;
  Matrix score = u.array().colwise() * resid.array();
  score.rowwise() -= lth.transpose();
  Matrix rows = score * inv.inverse;
  return InfluenceEstimate::from_rows(std::move(rows), InfluenceSource::OLS, inv.condition);
}

InfluenceEstimate if_ols(const Dataset& data, const Vector& theta_hat, double ridge,
                         const InfluenceSettings& s) {
  if (!data.label()) throw InvalidArgument("dataset has no label column");
  const Index lab = *data.label();
  const Index d = data.dim_xi() - 1;
  Matrix u(data.n(), d);
  Index c = 0;
  for (Index j = 0; j < data.dim_xi(); ++j)
    if (j != lab) u.col(c++) = data.samples().col(j);
  const Vector v = data.samples().col(lab);
  Vector pen;
  if (ridge != 0.0) pen = Vector::Constant(d, ridge);
  return if_ols(u, v, theta_hat, pen, s);
}

} // namespace oic
