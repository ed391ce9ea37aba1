#include "oic/problems.hpp"

#include <cmath>
#include <sstream>

namespace oic {

namespace {

std::string rho_label(double rho) {
  std::ostringstream os;
  os << "DRO(rho=" << rho << ")";
  return os.str();
}

FittedPolicy closed_form_policy(Vector theta, DecisionRule rule, FitMethod m) {
  FittedPolicy p;
  p.theta_hat = std::move(theta);
  p.rule = std::move(rule);
  p.fit_method = m;
  return p;
}

Matrix block_ones(Index d) {
  const Index b = d / 2;
  Matrix out = Matrix::Zero(d, 2);
  out.block(0, 0, b, 1).setOnes();
  out.block(b, 1, d - b, 1).setOnes();
  return out;
}

Dataset gaussian_rows(RngStream& rng, Index m, const Vector& mu, const Matrix& chol_lower) {
  const Index d = mu.size();
  Matrix s(m, d);
  Vector e(d);
  for (Index i = 0; i < m; ++i) {
    for (Index k = 0; k < d; ++k) e(k) = rng.normal();
    s.row(i) = (mu + chol_lower * e).transpose();
  }
  return Dataset(std::move(s));
}

} // namespace

PortfolioTruth portfolio_truth(Index d_xi, std::uint64_t seed) {
  if (d_xi < 2 || d_xi % 2 != 0) throw InvalidArgument("d_xi must be even and at least 2");
  RngStream rng = rng_stream(seed, "portfolio", "truth");
  PortfolioTruth t;
  t.mu = Vector(d_xi);
  for (Index k = 0; k < d_xi; ++k) t.mu(k) = rng.uniform(0.0, 4.0);
  t.sigma = Matrix::Zero(d_xi, d_xi);
  const Index b = d_xi / 2;
  for (Index start : {Index(0), b}) {
    Matrix c(b, b);
    for (Index i = 0; i < b; ++i)
      for (Index j = 0; j < b; ++j) c(i, j) = rng.uniform(0.0, 0.5);
    t.sigma.block(start, start, b, b) = c * c.transpose();
  }
  return t;
}

ProblemInstance build_portfolio_mv(const PortfolioParams& pp, std::uint64_t seed) {
  const Index d = pp.d_xi;
  const PortfolioTruth truth = portfolio_truth(d, seed);
  const double l1 = pp.lambda1, l2 = pp.lambda2;
  const Vector mu = truth.mu;
  const Matrix sigma = truth.sigma;
  // Positive definite almost surely; a tiny ridge keeps LLT safe for degenerate draws.
  const Matrix chol = Eigen::LLT<Matrix>(sigma + 1e-14 * Matrix::Identity(d, d)).matrixL();

  ProblemInstance inst;
  inst.name = "portfolio_mv";
  inst.dim_xi = d;
  inst.params = {{"d_xi", static_cast<double>(d)}, {"lambda1", l1}, {"lambda2", l2}};
  inst.dgp = [mu, chol](RngStream& rng, Index m) { return gaussian_rows(rng, m, mu, chol); };

  Cost cost;
  cost.value = [mu, l1, l2](const Vector& x, const Vector& xi) {
    const double a = x.dot(xi - mu);
    return a * a - l1 * xi.dot(x) + l2 * x.squaredNorm();
  };
  cost.grad_x = [mu, l1, l2](const Vector& x, const Vector& xi) {
    const Vector z = xi - mu;
    return (2.0 * x.dot(z) * z - l1 * xi + 2.0 * l2 * x).eval();
  };
  cost.hess_x = [mu, l2, d](const Vector&, const Vector& xi) {
    const Vector z = xi - mu;
    return (2.0 * z * z.transpose() + 2.0 * l2 * Matrix::Identity(d, d)).eval();
  };

  // min_theta mean h(B theta): 2 B^T (A + l2 I) B theta = l1 B^T xi_bar.
  auto linear_pipeline = [&](const std::string& label, const Matrix& b) {
    const DecisionRule rule = DecisionRule::linear(b);
    const CostModel model = compose(cost, rule);
    ProblemPipeline p;
    p.pipeline.label = label;
    p.pipeline.cost = model;
    p.pipeline.fit = [mu, b, rule, l1, l2, d](const Dataset& data) {
      const Matrix z = data.samples().rowwise() - mu.transpose();
      const Matrix a = z.transpose() * z / static_cast<double>(data.n());
      const Vector xbar = data.samples().colwise().mean().transpose();
      const Matrix h = 2.0 * b.transpose() * (a + l2 * Matrix::Identity(d, d)) * b;
      const Eigen::LDLT<Matrix> ldlt(h);
      if (ldlt.info() != Eigen::Success) throw SingularHessian("portfolio normal equations");
      return closed_form_policy(ldlt.solve(l1 * b.transpose() * xbar), rule, FitMethod::E2E);
    };
    p.influence = [model](const FittedPolicy& f, const Dataset& data) { return if_e2e(model, f.theta_hat, data); };
    return p;
  };

  inst.pipelines.push_back(linear_pipeline("SAA", Matrix::Identity(d, d)));
  inst.pipelines.push_back(linear_pipeline("SAA-U", Matrix::Ones(d, 1)));
  inst.pipelines.push_back(linear_pipeline("SAA-B", block_ones(d)));

  // Gaussian independent margins: x_k = l1 m_k / (2 (v_k + l2)), theta = (m, v).
  DecisionRule param_rule;
  param_rule.dim_theta = 2 * d;
  param_rule.dim_x = d;
  param_rule.decide = [d, l1, l2](const Vector& t, const Vector&) {
    Vector x(d);
    for (Index k = 0; k < d; ++k) x(k) = l1 * t(k) / (2.0 * (t(d + k) + l2));
    return x;
  };
  param_rule.jacobian = [d, l1, l2](const Vector& t, const Vector&) {
    Matrix j = Matrix::Zero(d, 2 * d);
    for (Index k = 0; k < d; ++k) {
      const double s = t(d + k) + l2;
      j(k, k) = l1 / (2.0 * s);
      j(k, d + k) = -l1 * t(k) / (2.0 * s * s);
    }
    return j;
  };
  param_rule.second_derivatives = [d, l1, l2](const Vector& t, const Vector&) {
    std::vector<Matrix> out;
    out.reserve(static_cast<std::size_t>(d));
    for (Index k = 0; k < d; ++k) {
      const double s = t(d + k) + l2;
      Matrix h = Matrix::Zero(2 * d, 2 * d);
      h(k, d + k) = h(d + k, k) = -l1 / (2.0 * s * s);
      h(d + k, d + k) = l1 * t(k) / (s * s * s);
      out.push_back(std::move(h));
    }
    return out;
  };
  {
    const CostModel model = compose(cost, param_rule);
    std::vector<Index> cols(static_cast<std::size_t>(d));
    for (Index k = 0; k < d; ++k) cols[static_cast<std::size_t>(k)] = k;
    ProblemPipeline p;
    p.pipeline.label = "Param";
    p.pipeline.cost = model;
    p.pipeline.fit = [param_rule, d](const Dataset& data) {
      const Vector m = data.samples().colwise().mean().transpose();
      const Matrix z = data.samples().rowwise() - m.transpose();
      Vector t(2 * d);
      t.head(d) = m;
      t.tail(d) = z.array().square().colwise().mean().transpose();
      return closed_form_policy(t, param_rule, FitMethod::ETO);
    };
    p.influence = [cols](const FittedPolicy&, const Dataset& data) { return if_mean_variance(data, cols, 0); };
    ParametricModel pm;
    pm.dim_theta = 2 * d;
    pm.expected_cost = [param_rule, mu, d, l1, l2](const Vector& td, const Vector& tdec) {
      const Vector x = param_rule.decide(tdec, Vector());
      const Vector m = td.head(d);
      const Vector shift = m - mu;
      const double quad = (td.tail(d).array() * x.array().square()).sum() + std::pow(shift.dot(x), 2);
      return quad - l1 * m.dot(x) + l2 * x.squaredNorm();
    };
    pm.sampler = [d](const Vector& t, std::uint64_t s, Index m) {
      RngStream rng(s);
      Matrix out(m, d);
      for (Index i = 0; i < m; ++i)
        for (Index k = 0; k < d; ++k) out(i, k) = rng.normal(t(k), std::sqrt(std::max(t(d + k), 0.0)));
      return Dataset(std::move(out));
    };
    p.poic = [pm, cols](const FittedPolicy& f, const Dataset& data) {
      return poic(pm, f.theta_hat, if_mean_variance(data, cols, 0));
    };
    inst.pipelines.push_back(std::move(p));
  }

  const DecisionRule id = DecisionRule::identity(d);
  const CostModel saa_model = compose(cost, id);
  const auto saa_fit = inst.pipelines.front().pipeline.fit;
  for (double rho : pp.rho) {
    if (rho < 0.0) throw InvalidArgument("rho must be non-negative");
    ProblemPipeline p;
    p.pipeline.label = rho_label(rho);
    p.pipeline.cost = saa_model;
    p.pipeline.fit = [saa_model, id, saa_fit, rho](const Dataset& data) {
      const Vector start = saa_fit(data).theta_hat;
      if (rho == 0.0) return closed_form_policy(start, id, FitMethod::E2E);
      return fit_chi2_dro(saa_model, id, data, DroSettings{rho, 1e-10}, start);
    };
    InfluenceSettings loose;
    loose.check_optimality = false;
    p.oic = [saa_model, loose](const FittedPolicy& f, const Dataset& data) {
      return oic_trace(f, saa_model, data, loose);
    };
    p.influence = [saa_model, loose](const FittedPolicy& f, const Dataset& data) {
      return if_e2e(saa_model, f.theta_hat, data, loose);
    };
    inst.pipelines.push_back(std::move(p));
  }

  inst.oracle = [mu, sigma, l1, l2](const FittedPolicy& f, const CostModel&, const Dataset&, std::uint64_t, std::uint64_t,
                                    Index) {
    const Vector x = f.decide();
    return Estimate{x.dot(sigma * x) - l1 * mu.dot(x) + l2 * x.squaredNorm(), 0.0};
  };
  return inst;
}

// ----------------------------------------------------------- exp utility

namespace {

struct ExpUtility {
  ExpUtilityParams p;

  Cost cost() const {
    const double g = p.gamma;
    Cost c;
    c.value = [g](const Vector& x, const Vector& xi) { return std::exp(-xi.dot(x)) + g * x.squaredNorm(); };
    c.grad_x = [g](const Vector& x, const Vector& xi) {
      return (-std::exp(-xi.dot(x)) * xi + 2.0 * g * x).eval();
    };
    c.hess_x = [g](const Vector& x, const Vector& xi) {
      return (std::exp(-xi.dot(x)) * xi * xi.transpose() + 2.0 * g * Matrix::Identity(x.size(), x.size()))
          .eval();
    };
    return c;
  }

  // x*(theta) for the class N(theta, s I): argmin exp(-theta^T x + s |x|^2 / 2) + gamma |x|^2.
  InnerProblem inner() const {
    const double g = p.gamma, s = p.eto_variance;
    const Index d = p.mu.size();
    InnerProblem ip;
    ip.dim_theta = d;
    ip.dim_x = d;
    ip.x0 = Vector::Zero(d);
    auto e = [s](const Vector& t, const Vector& x) { return std::exp(-t.dot(x) + 0.5 * s * x.squaredNorm()); };
    ip.grad_x = [e, g, s](const Vector& t, const Vector& x) { return (e(t, x) * (s * x - t) + 2.0 * g * x).eval(); };
    ip.hess_xx = [e, g, s, d](const Vector& t, const Vector& x) {
      const Vector a = s * x - t;
      const Matrix id = Matrix::Identity(d, d);
      return (e(t, x) * (a * a.transpose() + s * id) + 2.0 * g * id).eval();
    };
    ip.cross = [e, s, d](const Vector& t, const Vector& x) {
      const Vector a = s * x - t;
      return (-e(t, x) * (Matrix::Identity(d, d) + a * x.transpose())).eval();
    };
    return ip;
  }

  double true_cost(const Vector& x) const {
    return std::exp(-p.mu.dot(x) + 0.5 * x.dot(p.sigma * x)) + p.gamma * x.squaredNorm();
  }

  Objective population() const {
    const Vector mu = p.mu;
    const Matrix sg = p.sigma;
    const double g = p.gamma;
    Objective o;
    o.value = [mu, sg, g](const Vector& x) { return std::exp(-mu.dot(x) + 0.5 * x.dot(sg * x)) + g * x.squaredNorm(); };
    o.grad = [mu, sg, g](const Vector& x) {
      const double e = std::exp(-mu.dot(x) + 0.5 * x.dot(sg * x));
      return (e * (sg * x - mu) + 2.0 * g * x).eval();
    };
    o.hess = [mu, sg, g](const Vector& x) {
      const double e = std::exp(-mu.dot(x) + 0.5 * x.dot(sg * x));
      const Vector a = sg * x - mu;
      return (e * (a * a.transpose() + sg) + 2.0 * g * Matrix::Identity(x.size(), x.size())).eval();
    };
    return o;
  }

  Matrix chol() const { return Eigen::LLT<Matrix>(p.sigma).matrixL(); }
};

void check_exp_params(const ExpUtilityParams& p) {
  if (!(p.gamma > 0.0)) throw InvalidArgument("gamma must be positive");
  if (p.mu.size() < 1 || p.sigma.rows() != p.mu.size() || p.sigma.cols() != p.mu.size())
    throw InvalidArgument("mu and sigma dimensions differ");
  if (!(p.eto_variance > 0.0)) throw InvalidArgument("eto_variance must be positive");
}

} // namespace

ProblemInstance build_portfolio_exp_utility(const ExpUtilityParams& params, std::uint64_t) {
  check_exp_params(params);
  const ExpUtility eu{params};
  const Index d = params.mu.size();
  const Vector mu = params.mu;
  const Matrix l = eu.chol();

  ProblemInstance inst;
  inst.name = "portfolio_exp_utility";
  inst.dim_xi = d;
  inst.params = {{"gamma", params.gamma}, {"eto_variance", params.eto_variance}};
  inst.dgp = [mu, l](RngStream& rng, Index m) { return gaussian_rows(rng, m, mu, l); };
  const Cost cost = eu.cost();

  auto e2e = [&](const std::string& label, const DecisionRule& rule) {
    const CostModel model = compose(cost, rule);
    ProblemPipeline p;
    p.pipeline.label = label;
    p.pipeline.cost = model;
    p.pipeline.fit = [model, rule](const Dataset& data) {
      SolverSettings s;
      s.tol = 1e-10;
      return newton_minimize(empirical_objective(model, rule, data), Vector::Zero(rule.dim_theta), s, rule);
    };
    p.influence = [model](const FittedPolicy& f, const Dataset& data) { return if_e2e(model, f.theta_hat, data); };
    return p;
  };
  inst.pipelines.push_back(e2e("SAA", DecisionRule::identity(d)));
  inst.pipelines.push_back(e2e("EW", DecisionRule::linear(Matrix::Ones(d, 1))));

  const DecisionRule eto_rule = implicit_rule(eu.inner());
  {
    const CostModel model = compose(cost, eto_rule);
    std::vector<Index> cols(static_cast<std::size_t>(d));
    for (Index k = 0; k < d; ++k) cols[static_cast<std::size_t>(k)] = k;
    ProblemPipeline p;
    p.pipeline.label = "ETO";
    p.pipeline.cost = model;
    p.pipeline.fit = [eto_rule](const Dataset& data) {
      return closed_form_policy(data.samples().colwise().mean().transpose(), eto_rule, FitMethod::ETO);
    };
    p.influence = [cols](const FittedPolicy&, const Dataset& data) { return if_mean(data, cols); };
    inst.pipelines.push_back(std::move(p));
  }

  inst.oracle = [eu](const FittedPolicy& f, const CostModel&, const Dataset&, std::uint64_t, std::uint64_t, Index) {
    return Estimate{eu.true_cost(f.decide()), 0.0};
  };
  return inst;
}

ExpUtilityPopulation exp_utility_population(const ExpUtilityParams& params, Index m, std::uint64_t seed) {
  check_exp_params(params);
  if (m < 2) throw InvalidArgument("m must be at least 2");
  const ExpUtility eu{params};
  const Index d = params.mu.size();
  SolverSettings s;
  s.tol = 1e-12;
  ExpUtilityPopulation out;
  out.x_saa = newton_minimize(eu.population(), Vector::Zero(d), s).theta_hat;
  const InnerProblem ip = eu.inner();
  out.x_eto = solve_inner(ip, params.mu, s);
  const Matrix jx = implicit_decision_jacobian(ip, params.mu, out.x_eto);

  const Cost cost = eu.cost();
  const Matrix l = eu.chol();
  const Matrix i_pop = eu.population().hess(out.x_saa);
  const Matrix i_inv = i_pop.inverse();
  std::vector<double> t_saa, t_eto;
  t_saa.reserve(static_cast<std::size_t>(m));
  t_eto.reserve(static_cast<std::size_t>(m));
  for (Index done = 0, b = 0; done < m; ++b) {
    const Index k = std::min<Index>(10000, m - done);
    RngStream rng = rng_stream(seed, "block", b);
    const Dataset data = gaussian_rows(rng, std::max<Index>(k, 2), params.mu, l);
    for (Index i = 0; i < k; ++i) {
      const Vector xi = data.xi(i);
      const Vector g = cost.grad_x(out.x_saa, xi);
      t_saa.push_back(g.dot(i_inv * g));
      const Vector ge = jx.transpose() * cost.grad_x(out.x_eto, xi);
      t_eto.push_back(-ge.dot(xi - params.mu));
    }
    done += k;
  }
  out.ac_saa = mean_stderr(t_saa);
  out.ac_eto = mean_stderr(t_eto);
  return out;
}

Matrix exp_utility_vector_field(const ExpUtilityParams& params, const std::string& pipeline, const Vector& grid1,
                                const Vector& grid2) {
  check_exp_params(params);
  if (params.mu.size() != 2) throw InvalidArgument("vector field needs two assets");
  const ExpUtility eu{params};
  const Cost cost = eu.cost();
  SolverSettings s;
  s.tol = 1e-12;
  Vector x;
  Matrix grad_map;  // grad_theta = grad_map * grad_x
  Matrix if_map;    // IF = if_map * grad_theta for SAA; ETO uses xi - theta*
  const bool eto = pipeline == "ETO";
  if (pipeline == "SAA") {
    x = newton_minimize(eu.population(), Vector::Zero(2), s).theta_hat;
    grad_map = Matrix::Identity(2, 2);
    if_map = -eu.population().hess(x).inverse();
  } else if (eto) {
    const InnerProblem ip = eu.inner();
    x = solve_inner(ip, params.mu, s);
    grad_map = implicit_decision_jacobian(ip, params.mu, x).transpose();
  } else {
    throw InvalidArgument("vector field pipeline must be SAA or ETO");
  }
  Matrix out(grid1.size() * grid2.size(), 6);
  Index r = 0;
  for (Index a = 0; a < grid1.size(); ++a)
    for (Index b = 0; b < grid2.size(); ++b, ++r) {
      Vector xi(2);
      xi << grid1(a), grid2(b);
      const Vector g = grad_map * cost.grad_x(x, xi);
      const Vector inf = eto ? Vector(xi - params.mu) : Vector(if_map * g);
      out.row(r) << xi(0), xi(1), -g(0), -g(1), inf(0), inf(1);
    }
  return out;
}

} // namespace oic
