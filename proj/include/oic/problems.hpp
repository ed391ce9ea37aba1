#pragma once

#include "oic/baselines.hpp"
#include "oic/criteria.hpp"
#include "oic/solvers.hpp"

#include <map>
#include <optional>

namespace oic {

/// Pipeline plus the estimator hooks that depend on its estimation family.
struct ProblemPipeline {
  Pipeline pipeline;
  /// Influence estimate at a fitted policy; empty when unsupported.
  std::function<InfluenceEstimate(const FittedPolicy&, const Dataset&)> influence;
  /// OIC override (e.g. trace form for DRO, closed form for newsvendor SAA).
  std::function<EvaluationReport(const FittedPolicy&, const Dataset&)> oic;
  /// Parametric criterion; empty when the pipeline has no fitted model.
  std::function<PoicResult(const FittedPolicy&, const Dataset&)> poic;
  /// Smoothed-Hessian trace criterion with smoothing level m; empty when unsupported.
  std::function<EvaluationReport(const FittedPolicy&, const Dataset&, double m)> smoothed_oic;

  const std::string& label() const { return pipeline.label; }
};

/// OIC through the override when present, else oic() with the influence hook.
EvaluationReport pipeline_oic(const ProblemPipeline& p, const FittedPolicy& policy, const Dataset& data);
double pipeline_alo(const ProblemPipeline& p, const FittedPolicy& policy, const Dataset& data);

/// Ground truth for a fitted policy. train and data_seed identify the training
/// draw (split-based sources evaluate on its complement); oracle_seed drives
/// fresh Monte Carlo draws of size m.
using InstanceOracle = std::function<Estimate(const FittedPolicy&, const CostModel&, const Dataset& train,
                                              std::uint64_t data_seed, std::uint64_t oracle_seed, Index m)>;

struct ProblemInstance {
  std::string name;
  Index dim_xi = 0;
  std::vector<ProblemPipeline> pipelines;
  Generator dgp;
  InstanceOracle oracle;
  std::map<std::string, double> params;

  const ProblemPipeline& pipeline(const std::string& label) const;
  /// Training set for a replication.
  Dataset draw(std::uint64_t data_seed, Index n) const;
};

/// Monte Carlo oracle over the instance generator.
InstanceOracle monte_carlo_oracle(const Generator& g);

// ---------------------------------------------------------------- portfolio

struct PortfolioParams {
  Index d_xi = 10;
  double lambda1 = 1.0;
  double lambda2 = 0.1;
  std::vector<double> rho = {3.0};
};

/// Mean-variance portfolio h = (x^T(xi - E xi))^2 - lambda1 xi^T x + lambda2 x^T x
/// with two independent Gaussian asset blocks. Pipelines: SAA, SAA-U, SAA-B,
/// Param, and DRO(rho=...) per entry of rho. Oracle is closed form.
ProblemInstance build_portfolio_mv(const PortfolioParams& p, std::uint64_t seed);

struct PortfolioTruth {
  Vector mu;
  Matrix sigma;
};
/// Mean and covariance drawn for an instance seed: mu_j ~ U(0, 4) and per
/// block Sigma_b = C C^T with C_jk ~ U(0, 1/2), from stream (seed, "portfolio", "truth").
PortfolioTruth portfolio_truth(Index d_xi, std::uint64_t seed);

struct ExpUtilityParams {
  double gamma = 0.2;
  Vector mu = (Vector(2) << 1.0, 2.0).finished();
  Matrix sigma = (Matrix(2, 2) << 4.0, 2.0, 2.0, 4.0).finished();
  double eto_variance = 4.0;  ///< misspecified class N(theta, eto_variance I)
};

/// h = exp(-xi^T x) + gamma ||x||^2. Pipelines: SAA, EW (equal weights), ETO.
ProblemInstance build_portfolio_exp_utility(const ExpUtilityParams& p, std::uint64_t seed);

/// Population constants at theta*: the SAA optimum of E_{P*} h and the ETO
/// decision at the true mean, with A_c = -E[grad_theta h^T IF] by Monte Carlo.
struct ExpUtilityPopulation {
  Vector x_saa;
  Vector x_eto;
  Estimate ac_saa;
  Estimate ac_eto;
};
ExpUtilityPopulation exp_utility_population(const ExpUtilityParams& p, Index m, std::uint64_t seed);

/// Rows (xi_1, xi_2, -grad_1, -grad_2, IF_1, IF_2) on a grid of xi at theta*.
Matrix exp_utility_vector_field(const ExpUtilityParams& p, const std::string& pipeline, const Vector& grid1,
                                const Vector& grid2);

// --------------------------------------------------------------- newsvendor

enum class DemandModel { NormalPlusUniform, ExpPlusUniform };

struct NewsvendorParams {
  double c = 2.0;
  double p = 5.0;
  DemandModel dgp = DemandModel::NormalPlusUniform;
  double mean = 100.0;
  double sd = 40.0;
  double noise = 5.0;      ///< half-width of the uniform noise
  double smoothing_m = 50.0;
  Index n_hint = 100;  ///< training size the Exp-OS rule is built for
};

/// h = c x - p min(xi, x). Pipelines: SAA, Normal-ETO, Exp-ETO, Exp-OS.
ProblemInstance build_newsvendor(const NewsvendorParams& p, std::uint64_t seed);

Cost newsvendor_cost(double c, double p);

/// c(p - c) / (n p f_hat(theta_hat)) with the Silverman KDE.
double newsvendor_saa_bias(const Dataset& data, double theta_hat, double c, double p);

/// Trace form (1/n) J / I_m with I_m the smoothed newsvendor Hessian. The
/// kernel half-width is (sample range) / m.
EvaluationReport newsvendor_smoothed_oic(const FittedPolicy& policy, const Dataset& data, double c, double p,
                                         double m);

/// E[h(x; xi)] under the instance DGP, by quadrature over the uniform noise.
double newsvendor_true_cost(const NewsvendorParams& p, double x);

/// Standard normal quantile.
double normal_quantile(double q);

// --------------------------------------------------------------- regression

struct RegressionData {
  Matrix u;
  Vector v;
  std::vector<int> group;  ///< stratification label (wine type), empty if none
};

/// Semicolon-delimited wine-format CSV: header row, a "quality" label column,
/// an optional "type" column (red/white or numeric), every other column a
/// numeric feature. The type becomes a 0/1 feature and the stratum.
RegressionData load_wine_csv(const std::string& path);

struct RegressionParams {
  double beta = 0.5;
  double train_fraction = 0.1;  ///< CSV source only
  std::optional<std::string> csv_path;
  Index synthetic_dim = 4;
  double alpha_linear_r = 1.0;
  double alpha_quad_r = 10.0;
  double alpha_cubic = 10.0;
};

/// Polynomial features [1, u, (u_j u_k)_{j<=k} for degree 2, u_j^3 for degree 3].
Vector polynomial_features(const Vector& u, int degree);

/// Thresholded squared error ((v - theta^T phi(u))^2 - beta)_+ on rows xi = (u, v).
Cost threshold_cost(int degree, double beta);

/// max{(theta^T phi - theta0^T phi)^2, (theta^T phi - v)^2 - beta}; ties average the branch gradients.
Cost fairness_cost(int degree, const Vector& theta0, double beta);

/// Pipelines Linear, Linear-R1, Quad, Quad-R, Cubic-R fit by least squares
/// (ridge penalty alpha/n on non-intercept coefficients) and evaluated under
/// the threshold cost. CSV features are standardized with pool statistics;
/// a draw of m rows is a stratified sample without replacement and the oracle
/// is the mean cost on the remaining rows (params "pool_size" records N).
ProblemInstance build_regression_threshold(const RegressionParams& p, std::uint64_t seed);

// --------------------------------------------------------------- contextual

struct ContextualParams {
  double c = 2.0;
  double p = 5.0;
  Vector beta = (Vector(3) << 100.0, 30.0, -20.0).finished();  ///< demand = beta^T z + noise
  double noise_sd = 20.0;
  double curvature = 0.0;  ///< adds curvature * (z_1^2 - 1/3) * 100 to the demand
  double smoothing_width = 10.0;
};

/// Covariates z = (1, U(0,1), ...). Pipelines: ETO-Normal (OLS mean, residual
/// variance RSS/(n - D_z), x = theta^T z + sd z_q) and E2E-Smoothed (x = theta^T z fit on the
/// kernel-smoothed newsvendor cost).
ProblemInstance build_contextual_newsvendor(const ContextualParams& p, std::uint64_t seed);

/// Conditional normal model used by context_misspecification for ETO-Normal.
ContextualParametricModel contextual_normal_model(const ContextualParams& p);

// -------------------------------------------------------------------- toys

/// h = (theta - xi)^2, xi ~ N(0, sigma^2). Pipelines SAA (sample mean) and Fixed (theta = theta0).
ProblemInstance build_quadratic(double sigma, double theta0, std::uint64_t seed);

} // namespace oic
