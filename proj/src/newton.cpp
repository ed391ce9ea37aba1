#include "oic/solvers.hpp"

#include <cmath>

namespace oic {

Objective empirical_objective(const CostModel& cost, const DecisionRule& rule, const Dataset& data) {
  Objective o;
  o.value = [cost, rule, data](const Vector& t) {
    const auto h = per_sample_costs_at(t, rule, cost, data);
    double s = 0.0;
    for (double v : h) s += v;
    return s / static_cast<double>(h.size());
  };
  o.grad = [cost, data](const Vector& t) {
    Vector g = Vector::Zero(t.size());
    for (Index i = 0; i < data.n(); ++i) g += cost.grad_theta(t, data.xi(i), data.z(i));
    return (g / static_cast<double>(data.n())).eval();
  };
  o.hess = [cost, data](const Vector& t) {
    Matrix h = Matrix::Zero(t.size(), t.size());
    for (Index i = 0; i < data.n(); ++i) h += cost.hess_theta(t, data.xi(i), data.z(i));
    return symmetrize(h / static_cast<double>(data.n()));
  };
  return o;
}

namespace {

Matrix floored(const Matrix& h, double floor) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(h));
  Vector lam = es.eigenvalues().cwiseAbs().cwiseMax(floor);
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

} // namespace

FittedPolicy newton_minimize(const Objective& obj, const Vector& theta0, const SolverSettings& s,
                             const DecisionRule& rule) {
  Vector theta = theta0;
  double f = obj.value(theta);
  if (!std::isfinite(f)) throw NonFiniteCost("objective at start");
  Vector g = obj.grad(theta);
  int it = 0;
  while (g.norm() > s.tol) {
    if (it >= s.max_iter) throw MaxIterExceeded("gradient norm " + std::to_string(g.norm()));
    ++it;
    const Matrix h = floored(obj.hess(theta), s.hessian_floor);
    const Vector dir = -h.ldlt().solve(g);
    const double slope = g.dot(dir);
    double t = 1.0;
    bool accepted = false;
    for (int b = 0; b <= s.max_backtracks; ++b, t *= s.shrink) {
      const Vector cand = theta + t * dir;
      const double fc = obj.value(cand);
      // A full step whose change is at rounding level is accepted: close to the
      // optimum the Armijo decrease falls below the resolution of f.
      const bool noise = b == 0 && fc - f <= 8.0 * 2.2e-16 * std::abs(f);
      if (std::isfinite(fc) && (fc <= f + s.sufficient_decrease * t * slope || noise)) {
        theta = cand;
        f = fc;
        accepted = true;
        break;
      }
    }
    if (!accepted) throw AscentDetected("line search failed at iteration " + std::to_string(it));
    g = obj.grad(theta);
  }
  FittedPolicy p;
  p.theta_hat = theta;
  p.rule = rule.decide ? rule : DecisionRule::identity(theta.size());
  p.fit_method = FitMethod::E2E;
  p.diagnostics.iterations = it;
  p.diagnostics.grad_norm = g.norm();
  p.diagnostics.objective = f;
  return p;
}

} // namespace oic
