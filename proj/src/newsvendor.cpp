#include "oic/problems.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace oic {

namespace {

double norm_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }
double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// E[min(N(m, s^2), a)]
double normal_expected_min(double m, double s, double a) {
  const double d = (a - m) / s;
  return a - ((a - m) * norm_cdf(d) + s * norm_pdf(d));
}

// E[min(Exp(mean), a)]
double exp_expected_min(double mean, double a) {
  return a <= 0.0 ? a : mean * (1.0 - std::exp(-a / mean));
}

double simpson(const std::function<double(double)>& f, double a, double b, int intervals) {
  if (b <= a) return 0.0;
  const double h = (b - a) / intervals;
  double s = f(a) + f(b);
  for (int i = 1; i < intervals; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

FittedPolicy policy(Vector theta, DecisionRule rule, FitMethod m) {
  FittedPolicy p;
  p.theta_hat = std::move(theta);
  p.rule = std::move(rule);
  p.fit_method = m;
  return p;
}

Vector column(const Dataset& d) { return d.samples().col(0); }

} // namespace

double normal_quantile(double q) {
  if (!(q > 0.0 && q < 1.0)) throw InvalidArgument("quantile level must lie in (0, 1)");
  double z = 0.0;
  for (int it = 0; it < 100; ++it) {
    const double step = (norm_cdf(z) - q) / std::max(norm_pdf(z), 1e-300);
    z -= std::clamp(step, -2.0, 2.0);
    if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(z))) break;
  }
  return z;
}

Cost newsvendor_cost(double c, double p) {
  Cost k;
  k.value = [c, p](const Vector& x, const Vector& xi) { return c * x(0) - p * std::min(xi(0), x(0)); };
  k.grad_x = [c, p](const Vector& x, const Vector& xi) {
    return Vector::Constant(1, x(0) > xi(0) ? c : (x(0) < xi(0) ? c - p : c - 0.5 * p)).eval();
  };
  k.hess_x = [](const Vector&, const Vector&) { return Matrix::Zero(1, 1).eval(); };
  k.smoothness = Smoothness::PiecewiseWithConvention;
  k.subgradient_convention = "at x == xi the derivative is c - p/2";
  return k;
}

double newsvendor_saa_bias(const Dataset& data, double theta_hat, double c, double p) {
  const double f = kde(column(data))(theta_hat);
  if (!(f > 0.0)) throw DegenerateSample("density estimate is zero at theta_hat");
  return c * (p - c) / (static_cast<double>(data.n()) * p * f);
}

EvaluationReport newsvendor_smoothed_oic(const FittedPolicy& pol, const Dataset& data, double c, double p,
                                         double m) {
  const Vector xi = column(data);
  const double range = xi.maxCoeff() - xi.minCoeff();
  if (!(range > 0.0)) throw DegenerateSample("zero sample range");
  const SmoothedLink link(newsvendor_link(c, p), epanechnikov(), m, range);
  const Cost cost = newsvendor_cost(c, p);
  const CostModel model = compose(cost, pol.rule);
  const Vector x = pol.decide();
  const double n = static_cast<double>(data.n());
  double i_m = 0.0, j = 0.0;
  for (Index i = 0; i < data.n(); ++i) {
    i_m += link.d2(x(0) - xi(i));
    const double g = cost.grad_x(x, data.xi(i))(0);
    j += g * g;
  }
  i_m /= n;
  j /= n;
  if (!(i_m > 0.0)) throw SingularHessian("smoothed Hessian is zero");
  auto r = EvaluationReport::make(evaluate_empirical(pol, model, data), j / (n * i_m),
                                  "oic_smoothed", data.n());
  r.extras["bandwidth"] = link.bandwidth();
  r.extras["hessian"] = i_m;
  return r;
}

double newsvendor_true_cost(const NewsvendorParams& p, double x) {
  const double a = p.noise;
  std::function<double(double)> emin;
  if (p.dgp == DemandModel::NormalPlusUniform)
    emin = [&](double u) { return u + normal_expected_min(p.mean, p.sd, x - u); };
  else
    emin = [&](double u) { return u + exp_expected_min(p.mean, x - u); };
  if (a == 0.0) return p.c * x - p.p * emin(0.0);
  // The exponential integrand has a kink at u = x; integrate each side separately.
  const double k = std::clamp(x, -a, a);
  const double integral = simpson(emin, -a, k, 2000) + simpson(emin, k, a, 2000);
  return p.c * x - p.p * integral / (2.0 * a);
}

ProblemInstance build_newsvendor(const NewsvendorParams& np, std::uint64_t) {
  if (!(np.p > np.c && np.c > 0.0)) throw InvalidArgument("need p > c > 0");
  if (np.n_hint < 2) throw InvalidArgument("n_hint must be at least 2");
  const double c = np.c, p = np.p;
  ProblemInstance inst;
  inst.name = "newsvendor";
  inst.dim_xi = 1;
  inst.params = {{"c", c},       {"p", p},         {"mean", np.mean}, {"sd", np.sd},
                 {"noise", np.noise}, {"smoothing_m", np.smoothing_m},
                 {"dgp", np.dgp == DemandModel::NormalPlusUniform ? 0.0 : 1.0},
                 {"n_hint", static_cast<double>(np.n_hint)}};
  inst.dgp = [np](RngStream& rng, Index m) {
    Matrix s(m, 1);
    for (Index i = 0; i < m; ++i) {
      const double base =
          np.dgp == DemandModel::NormalPlusUniform ? rng.normal(np.mean, np.sd) : rng.exponential(np.mean);
      s(i, 0) = base + rng.uniform(-np.noise, np.noise);
    }
    return Dataset(std::move(s));
  };

  const Cost cost = newsvendor_cost(c, p);

  {
    const DecisionRule id = DecisionRule::identity(1);
    const CostModel model = compose(cost, id);
    ProblemPipeline s;
    s.pipeline.label = "SAA";
    s.pipeline.cost = model;
    s.pipeline.fit = [id, c, p](const Dataset& d) {
      return policy(Vector::Constant(1, empirical_quantile(column(d), 1.0 - c / p)), id, FitMethod::E2E);
    };
    s.influence = [cost, c, p](const FittedPolicy& f, const Dataset& d) {
      const double fh = kde(column(d))(f.theta_hat(0));
      if (!(fh > 0.0)) throw DegenerateSample("density estimate is zero at theta_hat");
      Matrix rows(d.n(), 1);
      for (Index i = 0; i < d.n(); ++i) rows(i, 0) = -cost.grad_x(f.theta_hat, d.xi(i))(0) / (p * fh);
      return InfluenceEstimate::from_rows(std::move(rows), InfluenceSource::Custom);
    };
    s.oic = [model, c, p](const FittedPolicy& f, const Dataset& d) {
      const double fh = kde(column(d))(f.theta_hat(0));
      auto r = EvaluationReport::make(evaluate_empirical(f, model, d),
                                      newsvendor_saa_bias(d, f.theta_hat(0), c, p), "oic_closed_form", d.n());
      r.extras["f_hat"] = fh;
      return r;
    };
    inst.pipelines.push_back(std::move(s));
  }

  {
    const double zq = normal_quantile(1.0 - c / p);
    DecisionRule rule;
    rule.dim_theta = 2;
    rule.dim_x = 1;
    rule.decide = [zq](const Vector& t, const Vector&) {
      return Vector::Constant(1, t(0) + std::sqrt(t(1)) * zq).eval();
    };
    rule.jacobian = [zq](const Vector& t, const Vector&) {
      Matrix j(1, 2);
      j << 1.0, zq / (2.0 * std::sqrt(t(1)));
      return j;
    };
    rule.second_derivatives = [zq](const Vector& t, const Vector&) {
      Matrix h = Matrix::Zero(2, 2);
      h(1, 1) = -zq / (4.0 * std::pow(t(1), 1.5));
      return std::vector<Matrix>{h};
    };
    const CostModel model = compose(cost, rule);
    ProblemPipeline s;
    s.pipeline.label = "Normal-ETO";
    s.pipeline.cost = model;
    s.pipeline.fit = [rule](const Dataset& d) {
      const Vector xi = column(d);
      const double m = xi.mean();
      const double v = (xi.array() - m).square().sum() / static_cast<double>(d.n() - 1);
      if (!(v > 0.0)) throw DegenerateSample("zero sample variance");
      Vector t(2);
      t << m, v;
      return policy(t, rule, FitMethod::ETO);
    };
    s.influence = [](const FittedPolicy&, const Dataset& d) { return if_mean_variance(d, {0}, 1); };
    ParametricModel pm;
    pm.dim_theta = 2;
    pm.expected_cost = [rule, c, p](const Vector& td, const Vector& tdec) {
      const double x = rule.decide(tdec, Vector())(0);
      return c * x - p * normal_expected_min(td(0), std::sqrt(td(1)), x);
    };
    pm.sampler = [](const Vector& t, std::uint64_t seed, Index m) {
      RngStream rng(seed);
      Matrix s(m, 1);
      for (Index i = 0; i < m; ++i) s(i, 0) = rng.normal(t(0), std::sqrt(t(1)));
      return Dataset(std::move(s));
    };
    s.poic = [pm](const FittedPolicy& f, const Dataset& d) {
      return poic(pm, f.theta_hat, if_mean_variance(d, {0}, 1));
    };
    inst.pipelines.push_back(std::move(s));
  }

  auto exp_pipeline = [&](const std::string& label, double k) {
    const DecisionRule rule = DecisionRule::linear(Matrix::Constant(1, 1, k));
    const CostModel model = compose(cost, rule);
    ProblemPipeline s;
    s.pipeline.label = label;
    s.pipeline.cost = model;
    s.pipeline.fit = [rule](const Dataset& d) {
      const double m = column(d).mean();
      if (!(m > 0.0)) throw DegenerateSample("non-positive sample mean under the exponential model");
      return policy(Vector::Constant(1, m), rule, FitMethod::ETO);
    };
    s.influence = [](const FittedPolicy&, const Dataset& d) { return if_mean(d, {0}); };
    ParametricModel pm;
    pm.dim_theta = 1;
    pm.expected_cost = [k, c, p](const Vector& td, const Vector& tdec) {
      const double x = k * tdec(0);
      return c * x - p * exp_expected_min(td(0), x);
    };
    pm.hess_expected_cost = [k, p](const Vector& t) {
      return Matrix::Constant(1, 1, p * k * k * std::exp(-k) / t(0)).eval();
    };
    pm.sampler = [](const Vector& t, std::uint64_t seed, Index m) {
      RngStream rng(seed);
      Matrix s(m, 1);
      for (Index i = 0; i < m; ++i) s(i, 0) = rng.exponential(t(0));
      return Dataset(std::move(s));
    };
    s.poic = [pm](const FittedPolicy& f, const Dataset& d) { return poic(pm, f.theta_hat, if_mean(d, {0})); };
    return s;
  };
  const double nh = static_cast<double>(np.n_hint);
  inst.pipelines.push_back(exp_pipeline("Exp-ETO", std::log(p / c)));
  inst.pipelines.push_back(exp_pipeline("Exp-OS", nh * (std::pow(p / c, 1.0 / (nh + 1.0)) - 1.0)));

  for (auto& pl : inst.pipelines)
    pl.smoothed_oic = [c, p](const FittedPolicy& f, const Dataset& d, double m) {
      return newsvendor_smoothed_oic(f, d, c, p, m);
    };

  inst.oracle = [np](const FittedPolicy& f, const CostModel&, const Dataset&, std::uint64_t, std::uint64_t, Index) {
    return Estimate{newsvendor_true_cost(np, f.decide()(0)), 0.0};
  };
  return inst;
}

} // namespace oic
