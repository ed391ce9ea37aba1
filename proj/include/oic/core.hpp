#pragma once

#include "oic/errors.hpp"
#include "oic/linalg.hpp"
#include "oic/rng.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace oic {

/// n x D_xi sample matrix with optional n x D_z covariates and an optional
/// label column (the outcome component of each sample).
class Dataset {
public:
  Dataset() = default;
  explicit Dataset(Matrix samples, std::optional<Matrix> covariates = std::nullopt,
                   std::optional<Index> label = std::nullopt);

  Index n() const { return samples_.rows(); }
  Index dim_xi() const { return samples_.cols(); }
  Index dim_z() const { return covariates_ ? covariates_->cols() : 0; }
  bool has_covariates() const { return covariates_.has_value(); }
  const Matrix& samples() const { return samples_; }
  const Matrix& covariates() const;
  std::optional<Index> label() const { return label_; }

  Vector xi(Index i) const { return samples_.row(i).transpose(); }
  /// Covariate row, or an empty vector when there are none.
  Vector z(Index i) const;

  Dataset subset(const std::vector<Index>& rows) const;
  Dataset without(Index row) const;

  /// CSV with header xi_0..xi_{D-1}, optional z_*, optional y.
  static Dataset load_csv(const std::string& path);

private:
  Matrix samples_;
  std::optional<Matrix> covariates_;
  std::optional<Index> label_;
};

enum class Smoothness { Smooth, PiecewiseWithConvention };

/// Cost in decision space: h(x; xi) with derivatives in x.
struct Cost {
  std::function<double(const Vector& x, const Vector& xi)> value;
  std::function<Vector(const Vector& x, const Vector& xi)> grad_x;
  std::function<Matrix(const Vector& x, const Vector& xi)> hess_x;
  Smoothness smoothness = Smoothness::Smooth;
  std::string subgradient_convention;
};

/// theta (and covariates z) to decision x.
struct DecisionRule {
  Index dim_theta = 0;
  Index dim_x = 0;
  std::function<Vector(const Vector& theta, const Vector& z)> decide;
  std::function<Matrix(const Vector& theta, const Vector& z)> jacobian;
  /// Hessian of each decision coordinate in theta; empty means the rule is linear.
  std::function<std::vector<Matrix>(const Vector& theta, const Vector& z)> second_derivatives;

  static DecisionRule identity(Index dim);
  /// x = B theta for a fixed matrix B.
  static DecisionRule linear(const Matrix& b);
};

/// Composite cost h(x*(theta); xi) with derivatives in theta.
struct CostModel {
  std::function<double(const Vector& x, const Vector& xi)> value;
  std::function<Vector(const Vector& theta, const Vector& xi, const Vector& z)> grad_theta;
  std::function<Matrix(const Vector& theta, const Vector& xi, const Vector& z)> hess_theta;
  Smoothness smoothness = Smoothness::Smooth;
  std::string subgradient_convention;
};

/// Chain rule: grad = J^T g_x, hess = J^T H_x J + sum_k g_x[k] * d2 x_k.
CostModel compose(const Cost& cost, const DecisionRule& rule);

enum class FitMethod { ETO, IEO, E2E, RE2E, DRE2E, Constrained, Fixed };
std::string to_string(FitMethod m);

struct FitDiagnostics {
  int iterations = 0;
  double grad_norm = 0.0;
  double objective = 0.0;
  std::vector<Index> active_set;
  Vector multipliers;
  double kkt_residual = 0.0;
};

struct FittedPolicy {
  Vector theta_hat;
  DecisionRule rule;
  FitMethod fit_method = FitMethod::E2E;
  FitDiagnostics diagnostics;

  Vector decide(const Vector& z = Vector()) const { return rule.decide(theta_hat, z); }
};

struct EvaluationReport {
  double a_o = 0.0;
  double a_c = 0.0;
  double a_hat = 0.0;
  std::string method;
  Index n = 0;
  std::map<std::string, double> extras;
  std::optional<std::uint64_t> seed;

  /// The only constructor path: a_hat is set to a_o + a_c.
  static EvaluationReport make(double a_o, double a_c, std::string method, Index n);
};

struct Estimate {
  double mean = 0.0;
  double se = 0.0;  ///< standard error
};

/// Mean and standard error of a sample.
Estimate mean_stderr(const std::vector<double>& v);

/// h(x*(theta); xi_i) for every row; throws NonFiniteCost.
std::vector<double> per_sample_costs(const FittedPolicy& policy, const CostModel& cost,
                                     const Dataset& data);
std::vector<double> per_sample_costs_at(const Vector& theta, const DecisionRule& rule,
                                        const CostModel& cost, const Dataset& data);

/// Empirical mean cost of the fitted decision.
double evaluate_empirical(const FittedPolicy& policy, const CostModel& cost, const Dataset& data);

/// Draws m rows of P* from the stream.
using Generator = std::function<Dataset(RngStream& rng, Index m)>;

/// Monte Carlo estimate of E_{P*}[h(x*(theta_hat); xi)]. Draws come in
/// blocks of 10000 rows, block b seeded by (seed, "block", b).
Estimate oracle_true_performance(const FittedPolicy& policy, const CostModel& cost,
                                 const Generator& generator, Index m, std::uint64_t seed);

/// Fit procedure with its evaluation cost.
struct Pipeline {
  std::string label;
  std::function<FittedPolicy(const Dataset&)> fit;
  CostModel cost;
};

/// True performance of a fitted policy (closed form or Monte Carlo).
using Oracle = std::function<Estimate(const FittedPolicy&, std::uint64_t seed)>;

struct BiasStudy {
  Estimate bias;
  std::vector<double> per_replication;  ///< A_r - A_o,r of successful replications
  std::vector<Index> failed;            ///< indices of replications whose fit threw
};

/// Mean over R replications of (A - A_o). Replication r draws its training
/// set from (seed, "rep", r). More than 5% failed fits aborts with FitFailure.
BiasStudy oracle_expected_bias(const Pipeline& pipeline, const Generator& generator,
                               const Oracle& oracle, Index n, Index replications,
                               std::uint64_t seed);
BiasStudy oracle_expected_bias(const Pipeline& pipeline, const Generator& generator, Index n,
                               Index replications, Index m, std::uint64_t seed);

} // namespace oic
