#include "oic/solvers.hpp"

#include <cmath>
#include <limits>

namespace oic {

namespace {

struct DualTerms {
  double s = 0.0;   // mean (h - beta)_+^2
  double r = 0.0;   // mean (h - beta)_+
  double on = 0.0;  // mean 1{h > beta}
};

DualTerms terms(const Vector& h, double beta) {
  DualTerms t;
  for (Index i = 0; i < h.size(); ++i) {
    const double d = h(i) - beta;
    if (d > 0.0) {
      t.s += d * d;
      t.r += d;
      t.on += 1.0;
    }
  }
  const double n = static_cast<double>(h.size());
  t.s /= n;
  t.r /= n;
  t.on /= n;
  return t;
}

double phi(const Vector& h, double beta, double c) { return beta + c * std::sqrt(terms(h, beta).s); }

} // namespace

DroDual chi2_dual(const Vector& h, double eps, double inner_tol) {
  if (eps < 0.0) throw InvalidArgument("negative ambiguity radius");
  const double n = static_cast<double>(h.size());
  const double mean = h.mean();
  DroDual out;
  if (eps == 0.0) {
    out.value = mean;
    out.alpha = std::numeric_limits<double>::infinity();
    out.beta = -std::numeric_limits<double>::infinity();
    out.weights = Vector::Ones(h.size());
    return out;
  }
  const double c = std::sqrt(1.0 + eps);
  const double var = (h.array() - mean).square().sum() / n;
  const double hmin = h.minCoeff(), hmax = h.maxCoeff();
  double beta;
  const double interior = mean - std::sqrt(var / eps);
  if (var > 0.0 && interior <= hmin) {
    beta = interior;  // all weights positive: closed form
  } else {
    double lo = std::min(interior, hmin) - 1.0 - std::abs(hmax - hmin);
    double hi = hmax;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = phi(h, x1, c), f2 = phi(h, x2, c);
    const double tol = inner_tol * std::max(1.0, hmax - hmin);
    while (hi - lo > tol) {
      if (f1 <= f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - g * (hi - lo);
        f1 = phi(h, x1, c);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + g * (hi - lo);
        f2 = phi(h, x2, c);
      }
    }
    beta = 0.5 * (lo + hi);
    // Newton polish on the stationarity condition in beta.
    for (int k = 0; k < 20; ++k) {
      const auto t = terms(h, beta);
      if (t.s <= 0.0) break;
      const double rs = std::sqrt(t.s);
      const double d1 = 1.0 - c * t.r / rs;
      const double d2 = c * (t.on / rs - t.r * t.r / (t.s * rs));
      if (!(d2 > 0.0) || std::abs(d1) <= 1e-15) break;
      const double nb = beta - d1 / d2;
      if (!(nb > lo - 10 * tol && nb < hi + 10 * tol)) break;
      beta = nb;
    }
  }
  const auto t = terms(h, beta);
  out.beta = beta;
  out.alpha = std::sqrt(t.s / (4.0 * (1.0 + eps)));
  if (!(out.alpha > 1e-12 * (1.0 + std::abs(hmax))))
    throw DualDegenerate("alpha collapsed to " + std::to_string(out.alpha));
  out.value = beta + c * std::sqrt(t.s);
  out.kkt_residual = std::abs(1.0 - c * t.r / std::sqrt(t.s));
  out.weights = ((h.array() - beta).max(0.0) / (2.0 * out.alpha)).matrix();
  return out;
}

Objective chi2_dro_objective(const CostModel& cost, const DecisionRule& rule, const Dataset& data,
                             double eps, double inner_tol) {
  if (eps == 0.0) return empirical_objective(cost, rule, data);
  auto hvec = [cost, rule, data](const Vector& t) {
    const auto v = per_sample_costs_at(t, rule, cost, data);
    return Vector(Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size())));
  };
  Objective o;
  o.value = [hvec, eps, inner_tol](const Vector& t) { return chi2_dual(hvec(t), eps, inner_tol).value; };
  o.grad = [hvec, eps, inner_tol, cost, data](const Vector& t) {
    const auto dual = chi2_dual(hvec(t), eps, inner_tol);
    Vector g = Vector::Zero(t.size());
    for (Index i = 0; i < data.n(); ++i)
      if (dual.weights(i) > 0.0) g += dual.weights(i) * cost.grad_theta(t, data.xi(i), data.z(i));
    return (g / static_cast<double>(data.n())).eval();
  };
  o.hess = [hvec, eps, inner_tol, cost, data](const Vector& t) {
    const Vector h = hvec(t);
    const auto dual = chi2_dual(h, eps, inner_tol);
    const double n = static_cast<double>(data.n());
    const double c = std::sqrt(1.0 + eps);
    const Index d = t.size();
    Matrix m1 = Matrix::Zero(d, d);  // mean 1 grad grad^T + r hess
    Vector a = Vector::Zero(d);      // mean r grad
    Vector b = Vector::Zero(d);      // mean 1 grad
    double s = 0.0, r = 0.0, on = 0.0;
    for (Index i = 0; i < data.n(); ++i) {
      const double ri = h(i) - dual.beta;
      if (ri <= 0.0) continue;
      const Vector xi = data.xi(i), z = data.z(i);
      const Vector gi = cost.grad_theta(t, xi, z);
      m1 += gi * gi.transpose() + ri * cost.hess_theta(t, xi, z);
      a += ri * gi;
      b += gi;
      s += ri * ri;
      r += ri;
      on += 1.0;
    }
    m1 /= n;
    a /= n;
    b /= n;
    s /= n;
    r /= n;
    on /= n;
    const double rs = std::sqrt(s);
    Matrix ptt = c * (m1 / rs - a * a.transpose() / (s * rs));
    const double pbb = c * (on / rs - r * r / (s * rs));
    const Vector ptb = c * (-b / rs + a * r / (s * rs));
    if (pbb > 1e-14 * (1.0 + std::abs(on / rs))) ptt -= ptb * ptb.transpose() / pbb;
    return symmetrize(ptt);
  };
  return o;
}

FittedPolicy fit_chi2_dro(const CostModel& cost, const DecisionRule& rule, const Dataset& data,
                          const DroSettings& dro, const Vector& theta0, const SolverSettings& s) {
  if (dro.rho < 0.0) throw InvalidArgument("rho must be non-negative");
  const double eps = dro.rho / static_cast<double>(data.n());
  const Objective obj = chi2_dro_objective(cost, rule, data, eps, dro.inner_tol);
  FittedPolicy p = newton_minimize(obj, theta0, s, rule);
  p.fit_method = eps > 0.0 ? FitMethod::DRE2E : FitMethod::E2E;
  if (eps > 0.0) {
    const auto v = per_sample_costs(p, cost, data);
    const auto dual = chi2_dual(Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size())), eps,
                                dro.inner_tol);
    p.diagnostics.multipliers = Vector(2);
    p.diagnostics.multipliers << dual.alpha, dual.beta;
    p.diagnostics.kkt_residual = dual.kkt_residual;
  }
  return p;
}

} // namespace oic
