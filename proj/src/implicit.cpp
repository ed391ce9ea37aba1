#include "oic/solvers.hpp"

#include <cmath>

namespace oic {

Vector solve_inner(const InnerProblem& p, const Vector& theta, const SolverSettings& s) {
  Vector x = p.x0.size() == p.dim_x ? p.x0 : Vector::Zero(p.dim_x);
  for (int it = 0; it < s.max_iter; ++it) {
    const Vector f = p.grad_x(theta, x);
    if (f.norm() <= 1e-13 * (1.0 + x.norm())) return x;
    const Matrix fx = p.hess_xx(theta, x);
    const Eigen::LDLT<Matrix> ldlt(symmetrize(fx));
    Vector step = -ldlt.solve(f);
    if (!step.allFinite() || ldlt.info() != Eigen::Success) throw SingularInnerHessian("inner Newton");
    // Damp steps on the first-order residual norm.
    double t = 1.0;
    for (int b = 0; b < 60; ++b, t *= 0.5) {
      if (p.grad_x(theta, x + t * step).norm() < f.norm()) break;
    }
    x += t * step;
  }
  const Vector f = p.grad_x(theta, x);
  if (f.norm() > 1e-8 * (1.0 + x.norm())) throw MaxIterExceeded("inner problem did not converge");
  return x;
}

Matrix implicit_decision_jacobian(const InnerProblem& p, const Vector& theta, const Vector& x) {
  const Matrix fx = p.hess_xx(theta, x);
  const double cond = condition_number(fx);
  if (!std::isfinite(cond) || cond > 1e10) throw SingularInnerHessian("condition number " + std::to_string(cond));
  Matrix ft;
  if (p.cross) {
    ft = p.cross(theta, x);
  } else {
    ft = fd_jacobian([&](const Vector& t) { return p.grad_x(t, x); }, theta, 1e-6);
  }
  return -fx.partialPivLu().solve(ft);
}

DecisionRule implicit_rule(const InnerProblem& p, const SolverSettings& s) {
  DecisionRule r;
  r.dim_theta = p.dim_theta;
  r.dim_x = p.dim_x;
  r.decide = [p, s](const Vector& t, const Vector&) { return solve_inner(p, t, s); };
  r.jacobian = [p, s](const Vector& t, const Vector&) {
    return implicit_decision_jacobian(p, t, solve_inner(p, t, s));
  };
  r.second_derivatives = [p, s](const Vector& t, const Vector&) {
    std::vector<Matrix> out(static_cast<std::size_t>(p.dim_x), Matrix::Zero(p.dim_theta, p.dim_theta));
    for (Index a = 0; a < p.dim_theta; ++a) {
      const double h = 1e-4 * (1.0 + std::abs(t(a)));
      Vector tp = t, tm = t;
      tp(a) += h;
      tm(a) -= h;
      const Matrix jp = implicit_decision_jacobian(p, tp, solve_inner(p, tp, s));
      const Matrix jm = implicit_decision_jacobian(p, tm, solve_inner(p, tm, s));
      const Matrix dj = (jp - jm) / (2.0 * h);  // column b: d/dtheta_a of dx/dtheta_b
      for (Index k = 0; k < p.dim_x; ++k) out[static_cast<std::size_t>(k)].row(a) = dj.row(k);
    }
    for (auto& m : out) m = symmetrize(m);
    return out;
  };
  return r;
}

} // namespace oic
