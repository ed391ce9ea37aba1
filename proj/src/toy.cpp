#include "oic/problems.hpp"

namespace oic {

EvaluationReport pipeline_oic(const ProblemPipeline& p, const FittedPolicy& policy, const Dataset& data) {
  if (p.oic) return p.oic(policy, data);
  if (!p.influence) throw InvalidArgument("pipeline " + p.label() + " has no influence estimate");
  return oic(policy, p.pipeline.cost, p.influence(policy, data), data);
}

double pipeline_alo(const ProblemPipeline& p, const FittedPolicy& policy, const Dataset& data) {
  if (!p.influence) throw InvalidArgument("pipeline " + p.label() + " has no influence estimate");
  return alo_estimate(policy, p.pipeline.cost, p.influence(policy, data), data);
}

const ProblemPipeline& ProblemInstance::pipeline(const std::string& label) const {
  for (const auto& p : pipelines)
    if (p.label() == label) return p;
  throw InvalidArgument("unknown pipeline '" + label + "' for problem " + name);
}

Dataset ProblemInstance::draw(std::uint64_t data_seed, Index n) const {
  RngStream rng(data_seed);
  return dgp(rng, n);
}

InstanceOracle monte_carlo_oracle(const Generator& g) {
  return [g](const FittedPolicy& policy, const CostModel& cost, const Dataset&, std::uint64_t, std::uint64_t seed, Index m) {
    return oracle_true_performance(policy, cost, g, m, seed);
  };
}

ProblemInstance build_quadratic(double sigma, double theta0, std::uint64_t) {
  if (!(sigma > 0.0)) throw InvalidArgument("sigma must be positive");
  ProblemInstance inst;
  inst.name = "quadratic";
  inst.dim_xi = 1;
  inst.params = {{"sigma", sigma}, {"theta0", theta0}};
  inst.dgp = [sigma](RngStream& rng, Index m) {
    Matrix s(m, 1);
    for (Index i = 0; i < m; ++i) s(i, 0) = rng.normal(0.0, sigma);
    return Dataset(std::move(s));
  };

  Cost cost;
  cost.value = [](const Vector& x, const Vector& xi) { return (x(0) - xi(0)) * (x(0) - xi(0)); };
  cost.grad_x = [](const Vector& x, const Vector& xi) { return Vector::Constant(1, 2.0 * (x(0) - xi(0))).eval(); };
  cost.hess_x = [](const Vector&, const Vector&) { return Matrix::Constant(1, 1, 2.0).eval(); };
  const CostModel model = compose(cost, DecisionRule::identity(1));

  ProblemPipeline saa;
  saa.pipeline.label = "SAA";
  saa.pipeline.cost = model;
  saa.pipeline.fit = [](const Dataset& d) {
    FittedPolicy p;
    p.theta_hat = Vector::Constant(1, d.samples().col(0).mean());
    p.rule = DecisionRule::identity(1);
    p.fit_method = FitMethod::E2E;
    return p;
  };
  saa.influence = [model](const FittedPolicy& p, const Dataset& d) { return if_e2e(model, p.theta_hat, d); };

  ProblemPipeline fixed;
  fixed.pipeline.label = "Fixed";
  fixed.pipeline.cost = model;
  fixed.pipeline.fit = [theta0](const Dataset&) {
    FittedPolicy p;
    p.theta_hat = Vector::Constant(1, theta0);
    p.rule = DecisionRule::identity(1);
    p.fit_method = FitMethod::Fixed;
    return p;
  };
  fixed.influence = [](const FittedPolicy&, const Dataset& d) {
    return InfluenceEstimate::from_rows(Matrix::Zero(d.n(), 1), InfluenceSource::Custom);
  };

  inst.pipelines = {saa, fixed};
  inst.oracle = [sigma](const FittedPolicy& p, const CostModel&, const Dataset&, std::uint64_t, std::uint64_t, Index) {
    const double t = p.theta_hat(0);
    return Estimate{t * t + sigma * sigma, 0.0};
  };
  return inst;
}

} // namespace oic
