#include "oic/solvers.hpp"

#include <algorithm>
#include <cmath>

namespace oic {

namespace {

Matrix floored(const Matrix& h, double floor) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(h));
  Vector lam = es.eigenvalues().cwiseAbs().cwiseMax(floor);
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

// Largest t in [0, 1] keeping g(theta + t d) <= 0, given g(theta) <= 0 < g(theta + d).
double boundary_step(const Constraint& g, const Vector& theta, const Vector& d) {
  double lo = 0.0, hi = 1.0;
  for (int k = 0; k < 200 && hi - lo > 1e-17; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (g.value(theta + mid * d) > 0.0) hi = mid;
    else lo = mid;
  }
  return lo;
}

} // namespace

FittedPolicy fit_constrained(const Objective& obj, const std::vector<Constraint>& g, const Vector& theta0,
                             const SolverSettings& s, const DecisionRule& rule) {
  const Index m = static_cast<Index>(g.size());
  const Index d = theta0.size();
  for (Index j = 0; j < m; ++j)
    if (!(g[static_cast<std::size_t>(j)].value(theta0) < 0.0))
      throw InfeasibleStart("constraint " + std::to_string(j) + " not strictly satisfied");

  Vector theta = theta0;
  Vector alpha = Vector::Zero(m);
  std::vector<Index> work;
  Index just_dropped = -1;
  int it = 0;
  double kkt = 0.0;
  const int max_iter = s.max_iter * 2;
  for (;; ++it) {
    if (it >= max_iter) throw KKTFailure("no KKT point after " + std::to_string(it) + " iterations");
    const Vector grad = obj.grad(theta);
    Matrix h = obj.hess(theta);
    for (Index j : work) {
      const auto& cj = g[static_cast<std::size_t>(j)];
      if (cj.hess) h += alpha(j) * cj.hess(theta);
    }
    h = floored(h, s.hessian_floor);
    const Index k = static_cast<Index>(work.size());
    Matrix c(k, d);
    Vector r(k);
    for (Index a = 0; a < k; ++a) {
      const auto& cj = g[static_cast<std::size_t>(work[static_cast<std::size_t>(a)])];
      c.row(a) = cj.grad(theta).transpose();
      r(a) = cj.value(theta);
    }
    Matrix kkt_m = Matrix::Zero(d + k, d + k);
    kkt_m.topLeftCorner(d, d) = h;
    kkt_m.topRightCorner(d, k) = c.transpose();
    kkt_m.bottomLeftCorner(k, d) = c;
    Vector rhs(d + k);
    rhs.head(d) = -grad;
    rhs.tail(k) = -r;
    const Vector sol = kkt_m.fullPivLu().solve(rhs);
    const Vector step = sol.head(d);
    Vector lam = Vector::Zero(k);
    if (k > 0) lam = c.transpose().colPivHouseholderQr().solve(-grad);
    kkt = (grad + c.transpose() * lam).norm();
    const double feas = k > 0 ? r.cwiseAbs().maxCoeff() : 0.0;

    if (kkt <= s.tol && feas <= s.tol) {
      Index worst = -1;
      double most = -1e-8;
      for (Index a = 0; a < k; ++a)
        if (lam(a) < most) {
          most = lam(a);
          worst = a;
        }
      alpha.setZero();
      for (Index a = 0; a < k; ++a) alpha(work[static_cast<std::size_t>(a)]) = lam(a);
      if (worst < 0) break;
      just_dropped = work[static_cast<std::size_t>(worst)];
      work.erase(work.begin() + worst);
      alpha(just_dropped) = 0.0;
      continue;
    }
    for (Index a = 0; a < k; ++a) alpha(work[static_cast<std::size_t>(a)]) = sol(d + a);

    // Blocking constraints among the inactive ones.
    double t_block = 1.0;
    Index blocker = -1;
    for (Index j = 0; j < m; ++j) {
      if (std::find(work.begin(), work.end(), j) != work.end()) continue;
      const auto& cj = g[static_cast<std::size_t>(j)];
      if (j == just_dropped && cj.grad(theta).dot(step) <= 0.0) continue;
      if (cj.value(theta + step) > 0.0) {
        const double tj = boundary_step(cj, theta, step);
        if (tj < t_block) {
          t_block = tj;
          blocker = j;
        }
      }
    }
    just_dropped = -1;
    const double nu = 1.0 + (k > 0 ? sol.tail(k).cwiseAbs().maxCoeff() : 0.0);
    auto merit = [&](const Vector& t) {
      double v = obj.value(t);
      for (Index j : work) v += nu * std::abs(g[static_cast<std::size_t>(j)].value(t));
      return v;
    };
    const double m0 = merit(theta);
    const double slope = grad.dot(step) - nu * r.cwiseAbs().sum();
    double t = t_block;
    bool accepted = false;
    for (int b = 0; b <= s.max_backtracks; ++b, t *= s.shrink) {
      const Vector cand = theta + t * step;
      const double mc = merit(cand);
      const bool noise = b == 0 && mc - m0 <= 8.0 * 2.2e-16 * std::abs(m0);
      if (std::isfinite(mc) && (mc <= m0 + s.sufficient_decrease * t * std::min(slope, 0.0) || noise)) {
        theta = cand;
        accepted = true;
        break;
      }
    }
    if (!accepted && blocker < 0) throw KKTFailure("line search failed at iteration " + std::to_string(it));
    if (blocker >= 0 && (!accepted || t == t_block)) {
      if (!accepted) theta += t_block * step;
      work.push_back(blocker);
      alpha(blocker) = 0.0;
    }
  }

  FittedPolicy p;
  p.theta_hat = theta;
  p.rule = rule.decide ? rule : DecisionRule::identity(d);
  p.fit_method = FitMethod::Constrained;
  p.diagnostics.iterations = it;
  p.diagnostics.kkt_residual = kkt;
  p.diagnostics.multipliers = alpha;
  p.diagnostics.objective = obj.value(theta);
  Vector gl = obj.grad(theta);
  for (Index j = 0; j < m; ++j) {
    const auto& cj = g[static_cast<std::size_t>(j)];
    if (std::abs(cj.value(theta)) <= 1e-8) p.diagnostics.active_set.push_back(j);
    if (alpha(j) != 0.0) gl += alpha(j) * cj.grad(theta);
    if (std::abs(alpha(j) * cj.value(theta)) > s.tol) throw KKTFailure("complementary slackness");
  }
  p.diagnostics.grad_norm = gl.norm();
  return p;
}

FittedPolicy fit_constrained(const CostModel& cost, const DecisionRule& rule,
                             const std::vector<Constraint>& g, const Dataset& data, const Vector& theta0,
                             const SolverSettings& s) {
  return fit_constrained(empirical_objective(cost, rule, data), g, theta0, s, rule);
}

} // namespace oic
