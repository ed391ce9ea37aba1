#include "oic/criteria.hpp"

#include <cmath>

namespace oic {

namespace {

Matrix gradient_rows(const FittedPolicy& policy, const CostModel& cost, const Dataset& data) {
  Matrix g(data.n(), policy.theta_hat.size());
  for (Index i = 0; i < data.n(); ++i) {
    const Vector gi = cost.grad_theta(policy.theta_hat, data.xi(i), data.z(i));
    if (!gi.allFinite()) throw NonFiniteGradient("row " + std::to_string(i));
    g.row(i) = gi.transpose();
  }
  return g;
}

double rms_norm(const Matrix& rows) {
  return std::sqrt(rows.rowwise().squaredNorm().mean());
}

EvaluationReport trace_report(const FittedPolicy& policy, const CostModel& cost, const Dataset& data,
                              const InfluenceSettings& s, const std::string& method) {
  const auto der = empirical_derivatives(cost, policy.theta_hat, data);
  check_stationary(der.gradients, s);
  const auto inv = symmetric_inverse(der.hessian, s.condition_cap);
  if (!inv.ok) throw SingularHessian("condition number " + std::to_string(inv.condition));
  const double n = static_cast<double>(data.n());
  const Matrix j = der.gradients.transpose() * der.gradients / n;
  const double tr = (inv.inverse * j).trace();
  auto r = EvaluationReport::make(evaluate_empirical(policy, cost, data), tr / n, method, data.n());
  r.extras["trace"] = tr;
  r.extras["condition"] = inv.condition;
  return r;
}

} // namespace

EvaluationReport oic(const FittedPolicy& policy, const CostModel& cost, const InfluenceEstimate& influence,
                     const Dataset& data) {
  if (influence.per_sample.rows() != data.n())
    throw RowMismatch("influence rows " + std::to_string(influence.per_sample.rows()) + " vs data rows " +
                      std::to_string(data.n()));
  if (influence.per_sample.cols() != policy.theta_hat.size())
    throw RowMismatch("influence columns differ from theta dimension");
  const Matrix g = gradient_rows(policy, cost, data);
  const double n = static_cast<double>(data.n());
  const double inner = (g.array() * influence.per_sample.array()).sum();
  auto r = EvaluationReport::make(evaluate_empirical(policy, cost, data), -inner / (n * n), "oic", data.n());
  r.extras["cs_bound"] = rms_norm(g) * rms_norm(influence.per_sample) / n;
  return r;
}

EvaluationReport oic_trace(const FittedPolicy& policy, const CostModel& cost, const Dataset& data,
                           const InfluenceSettings& s) {
  return trace_report(policy, cost, data, s, "oic_trace");
}

EvaluationReport oic_regularized(const FittedPolicy& policy, const CostModel& cost, const Regularizer& reg,
                                 double lambda, const Dataset& data, const InfluenceSettings& s) {
  CostModel tilde = cost;
  tilde.value = nullptr;
  tilde.grad_theta = [cost, reg, lambda](const Vector& t, const Vector& xi, const Vector& z) {
    return (cost.grad_theta(t, xi, z) + lambda * reg.grad(t)).eval();
  };
  tilde.hess_theta = [cost, reg, lambda](const Vector& t, const Vector& xi, const Vector& z) {
    return (cost.hess_theta(t, xi, z) + lambda * reg.hess(t)).eval();
  };
  const auto der = empirical_derivatives(tilde, policy.theta_hat, data);
  check_stationary(der.gradients, s);
  const auto inv = symmetric_inverse(der.hessian, s.condition_cap);
  if (!inv.ok) throw SingularHessian("condition number " + std::to_string(inv.condition));
  const double n = static_cast<double>(data.n());
  const double tr = (inv.inverse * (der.gradients.transpose() * der.gradients / n)).trace();
  const double a_o = evaluate_empirical(policy, cost, data);
  const double penalty = lambda * reg.value(policy.theta_hat);
  auto r = EvaluationReport::make(a_o, tr / n, "oic_regularized", data.n());
  r.extras["trace"] = tr;
  r.extras["penalty"] = penalty;
  r.extras["a_hat_tilde"] = a_o + penalty + tr / n;
  return r;
}

EvaluationReport oic_constrained(const FittedPolicy& policy, const CostModel& cost,
                                 const std::vector<Constraint>& g, const Vector& multipliers,
                                 const Dataset& data, const InfluenceSettings& s) {
  const auto a = active_set_projection(cost, g, policy.theta_hat, multipliers, data, s);
  const double n = static_cast<double>(data.n());
  const Matrix j = a.gradients.transpose() * a.gradients / n;
  const double tr = (a.projector * symmetric_pinv(a.hessian, s.pinv_floor) * a.projector * j).trace();
  auto r = EvaluationReport::make(evaluate_empirical(policy, cost, data), tr / n, "oic_constrained", data.n());
  r.extras["trace"] = tr;
  r.extras["active"] = static_cast<double>(a.active.size());
  return r;
}

Matrix model_hessian(const ParametricModel& model, const Vector& theta_hat) {
  if (model.hess_expected_cost) return symmetrize(model.hess_expected_cost(theta_hat));
  return symmetrize(fd_hessian([&](const Vector& t) { return model.expected_cost(theta_hat, t); }, theta_hat, 1e-4));
}

PoicResult poic(const ParametricModel& model, const Vector& theta_hat, const InfluenceEstimate& influence) {
  PoicResult out;
  out.expected = model.expected_cost(theta_hat, theta_hat);
  if (!std::isfinite(out.expected)) throw ModelEvalFailure("expected cost is not finite");
  out.i_h = model_hessian(model, theta_hat);
  if (!out.i_h.allFinite()) throw ModelEvalFailure("model Hessian is not finite");
  const double n = static_cast<double>(influence.per_sample.rows());
  out.trace_term = (out.i_h * influence.psi_hat).trace() / (2.0 * n);
  out.a_p = out.expected + out.trace_term;
  return out;
}

double misspecification_error(const EvaluationReport& oic_report, double a_p) { return oic_report.a_hat - a_p; }

EvaluationReport context_oic(const FittedPolicy& policy, const CostModel& cost,
                             const InfluenceEstimate& influence, const Dataset& data) {
  if (!data.has_covariates()) throw MissingCovariates("context_oic needs covariates");
  auto r = oic(policy, cost, influence, data);
  r.method = "context_oic";
  return r;
}

EvaluationReport context_oic_trace(const FittedPolicy& policy, const CostModel& cost, const Dataset& data,
                                   const InfluenceSettings& s) {
  if (!data.has_covariates()) throw MissingCovariates("context_oic_trace needs covariates");
  return trace_report(policy, cost, data, s, "context_oic_trace");
}

double context_misspecification(const ContextualParametricModel& model, const FittedPolicy& policy,
                                const CostModel& cost, const InfluenceEstimate& influence,
                                const Dataset& data, const EvaluationReport& context_report) {
  if (!data.has_covariates()) throw MissingCovariates("context_misspecification needs covariates");
  const Vector& th = policy.theta_hat;
  const double n = static_cast<double>(data.n());
  double expected = 0.0;
  Matrix ih = Matrix::Zero(th.size(), th.size());
  for (Index i = 0; i < data.n(); ++i) {
    const Vector z = data.z(i);
    const double e = model.expected_cost(th, th, z);
    if (!std::isfinite(e)) throw ModelEvalFailure("expected cost at row " + std::to_string(i));
    expected += e;
    if (model.hess_expected_cost) ih += model.hess_expected_cost(th, z);
  }
  expected /= n;
  if (model.hess_expected_cost) ih /= n;
  else ih = empirical_derivatives(cost, th, data).hessian;
  const double trace_term = (ih * influence.psi_hat).trace() / (2.0 * n);
  return context_report.a_hat - (expected + trace_term);
}

double alo_estimate(const FittedPolicy& policy, const CostModel& cost, const InfluenceEstimate& influence,
                    const Dataset& data) {
  if (influence.per_sample.rows() != data.n()) throw RowMismatch("influence rows differ from data rows");
  const double n = static_cast<double>(data.n());
  double s = 0.0;
  for (Index i = 0; i < data.n(); ++i) {
    const Vector t = policy.theta_hat - influence.per_sample.row(i).transpose() / n;
    const double h = cost.value(policy.rule.decide(t, data.z(i)), data.xi(i));
    if (!std::isfinite(h)) throw NonFiniteCost("row " + std::to_string(i));
    s += h;
  }
  return s / n;
}

} // namespace oic
