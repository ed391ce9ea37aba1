#include "oic/problems.hpp"

#include <cmath>
#include <numbers>

namespace oic {

namespace {

double norm_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }
double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

DecisionRule eto_rule(Index dz, double zq) {
  DecisionRule r;
  r.dim_theta = dz + 1;
  r.dim_x = 1;
  r.decide = [dz, zq](const Vector& t, const Vector& z) {
    return Vector::Constant(1, t.head(dz).dot(z) + std::sqrt(t(dz)) * zq).eval();
  };
  r.jacobian = [dz, zq](const Vector& t, const Vector& z) {
    Matrix j(1, dz + 1);
    j.leftCols(dz) = z.transpose();
    j(0, dz) = zq / (2.0 * std::sqrt(t(dz)));
    return j;
  };
  r.second_derivatives = [dz, zq](const Vector& t, const Vector&) {
    Matrix h = Matrix::Zero(dz + 1, dz + 1);
    h(dz, dz) = -zq / (4.0 * std::pow(t(dz), 1.5));
    return std::vector<Matrix>{h};
  };
  return r;
}

DecisionRule linear_in_z(Index dz) {
  DecisionRule r;
  r.dim_theta = dz;
  r.dim_x = 1;
  r.decide = [](const Vector& t, const Vector& z) { return Vector::Constant(1, t.dot(z)).eval(); };
  r.jacobian = [](const Vector&, const Vector& z) { return Matrix(z.transpose()); };
  return r;
}

Vector ols(const Dataset& d) {
  const Matrix& z = d.covariates();
  const Eigen::LDLT<Matrix> ldlt(z.transpose() * z);
  if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-14) throw SingularDesign("covariate design");
  return ldlt.solve(z.transpose() * d.samples().col(0));
}

} // namespace

ContextualParametricModel contextual_normal_model(const ContextualParams& cp) {
  const Index dz = cp.beta.size();
  const double c = cp.c, p = cp.p;
  const DecisionRule rule = eto_rule(dz, normal_quantile(1.0 - c / p));
  ContextualParametricModel m;
  m.expected_cost = [rule, dz, c, p](const Vector& td, const Vector& tdec, const Vector& z) {
    const double x = rule.decide(tdec, z)(0);
    const double mean = td.head(dz).dot(z), s = std::sqrt(td(dz));
    const double d = (x - mean) / s;
    return c * x - p * (x - ((x - mean) * norm_cdf(d) + s * norm_pdf(d)));
  };
  const auto ec = m.expected_cost;
  m.hess_expected_cost = [ec](const Vector& t, const Vector& z) {
    return fd_hessian([&](const Vector& tdec) { return ec(t, tdec, z); }, t);
  };
  return m;
}

ProblemInstance build_contextual_newsvendor(const ContextualParams& cp, std::uint64_t) {
  if (!(cp.p > cp.c && cp.c > 0.0)) throw InvalidArgument("need p > c > 0");
  const Index dz = cp.beta.size();
  if (dz < 1) throw InvalidArgument("need at least one covariate");
  if (!(cp.noise_sd > 0.0) || !(cp.smoothing_width > 0.0))
    throw InvalidArgument("noise_sd and smoothing_width must be positive");
  const double c = cp.c, p = cp.p;

  ProblemInstance inst;
  inst.name = "contextual_newsvendor";
  inst.dim_xi = 1;
  inst.params = {{"c", c},
                 {"p", p},
                 {"d_z", static_cast<double>(dz)},
                 {"noise_sd", cp.noise_sd},
                 {"curvature", cp.curvature},
                 {"smoothing_width", cp.smoothing_width}};
  inst.dgp = [cp, dz](RngStream& rng, Index m) {
    Matrix z(m, dz), s(m, 1);
    for (Index i = 0; i < m; ++i) {
      z(i, 0) = 1.0;
      for (Index k = 1; k < dz; ++k) z(i, k) = rng.uniform();
      double demand = z.row(i).dot(cp.beta.transpose()) + rng.normal(0.0, cp.noise_sd);
      if (dz > 1) demand += cp.curvature * 100.0 * (z(i, 1) * z(i, 1) - 1.0 / 3.0);
      s(i, 0) = demand;
    }
    return Dataset(std::move(s), std::move(z));
  };
  inst.oracle = monte_carlo_oracle(inst.dgp);

  const Cost cost = newsvendor_cost(c, p);
  {
    const DecisionRule rule = eto_rule(dz, normal_quantile(1.0 - c / p));
    ProblemPipeline e;
    e.pipeline.label = "ETO-Normal";
    e.pipeline.cost = compose(cost, rule);
    e.pipeline.fit = [rule, dz](const Dataset& d) {
      if (d.n() <= dz) throw DegenerateSample("need more rows than covariates");
      const Vector b = ols(d);
      const Vector r = d.samples().col(0) - d.covariates() * b;
      const double v = r.squaredNorm() / static_cast<double>(d.n() - dz);
      if (!(v > 0.0)) throw DegenerateSample("zero residual variance");
      FittedPolicy f;
      f.theta_hat = Vector(dz + 1);
      f.theta_hat << b, v;
      f.rule = rule;
      f.fit_method = FitMethod::ETO;
      return f;
    };
    e.influence = [dz](const FittedPolicy& f, const Dataset& d) {
      const Vector b = f.theta_hat.head(dz);
      const Vector y = d.samples().col(0);
      const auto est = if_ols(d.covariates(), y, b);
      Matrix rows(d.n(), dz + 1);
      rows.leftCols(dz) = est.per_sample;
      const Vector r = y - d.covariates() * b;
      rows.col(dz) = r.array().square() - f.theta_hat(dz);
      return InfluenceEstimate::from_rows(std::move(rows), InfluenceSource::MeanVariance, est.conditioning);
    };
    inst.pipelines.push_back(std::move(e));
  }
  {
    const DecisionRule rule = linear_in_z(dz);
    InnerMap g;
    g.value = [](const Vector& x, const Vector& xi) { return x(0) - xi(0); };
    g.grad_x = [](const Vector&, const Vector&) { return Vector::Ones(1).eval(); };
    Cost smooth = smooth_cost(newsvendor_link(c, p), epanechnikov(), 1.0, g, cp.smoothing_width);
    // h = (c - p) xi + f(x - xi); the xi term is constant in theta.
    const auto base = smooth.value;
    smooth.value = [base, c, p](const Vector& x, const Vector& xi) { return (c - p) * xi(0) + base(x, xi); };
    const CostModel model = compose(smooth, rule);
    ProblemPipeline e;
    e.pipeline.label = "E2E-Smoothed";
    e.pipeline.cost = model;
    e.pipeline.fit = [model, rule](const Dataset& d) {
      SolverSettings s;
      s.tol = 1e-9;
      return newton_minimize(empirical_objective(model, rule, d), ols(d), s, rule);
    };
    e.influence = [model](const FittedPolicy& f, const Dataset& d) { return if_e2e(model, f.theta_hat, d); };
    inst.pipelines.push_back(std::move(e));
  }
  return inst;
}

} // namespace oic
