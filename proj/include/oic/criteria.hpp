#pragma once

#include "oic/core.hpp"
#include "oic/influence.hpp"

namespace oic {

/// A_hat = A_o - (1/n^2) sum <grad h_i, IF_i>. Throws RowMismatch, NonFiniteGradient.
/// extras: "cs_bound" = (1/n) rms||grad h|| rms||IF||.
EvaluationReport oic(const FittedPolicy& policy, const CostModel& cost, const InfluenceEstimate& influence,
                     const Dataset& data);

/// a_c = (1/n) Tr[I_h^-1 J_h]. Throws SingularHessian, NotAtOptimum.
/// Set check_optimality = false for chi-square DRO fits, whose theta_hat is
/// not stationary for the empirical mean.
EvaluationReport oic_trace(const FittedPolicy& policy, const CostModel& cost, const Dataset& data,
                           const InfluenceSettings& s = {});

/// Penalty R(x*(theta)) written in theta.
struct Regularizer {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> grad;
  std::function<Matrix(const Vector&)> hess;
};

/// Fit minimizes mean h + lambda R. a_o is the mean of h; a_c is the trace
/// correction of h~ = h + lambda R, so that a_hat equals the h~ criterion minus
/// lambda R(x*(theta_hat)). extras: "a_hat_tilde", "penalty".
EvaluationReport oic_regularized(const FittedPolicy& policy, const CostModel& cost, const Regularizer& r,
                                 double lambda, const Dataset& data, const InfluenceSettings& s = {});

/// a_c = (1/n) Tr[P (I_{h,alpha})^+ P J]. Throws LICQViolation, NegativeMultiplier.
EvaluationReport oic_constrained(const FittedPolicy& policy, const CostModel& cost,
                                 const std::vector<Constraint>& g, const Vector& multipliers,
                                 const Dataset& data, const InfluenceSettings& s = {});

struct ParametricModel {
  Index dim_theta = 0;
  /// E_{P_theta_dist}[h(x*(theta_dec); xi)]
  std::function<double(const Vector& theta_dist, const Vector& theta_dec)> expected_cost;
  /// Draws m samples from P_theta.
  std::function<Dataset(const Vector& theta, std::uint64_t seed, Index m)> sampler;
  /// I_h(theta) = Hessian in theta_dec of expected_cost(theta, .) at theta. Optional.
  std::function<Matrix(const Vector& theta)> hess_expected_cost;
};

struct PoicResult {
  double a_p = 0.0;
  double expected = 0.0;    ///< E_{P_theta_hat}[h(x*(theta_hat))]
  double trace_term = 0.0;  ///< (1/2n) Tr[I_h Psi]
  Matrix i_h;
};

/// I_h from the model, or central differences of expected_cost with step 1e-4 (1 + |theta|).
Matrix model_hessian(const ParametricModel& model, const Vector& theta_hat);

/// A_p = E_{P_theta_hat}[h] + (1/2n) Tr[I_h Psi_hat]. Throws ModelEvalFailure.
PoicResult poic(const ParametricModel& model, const Vector& theta_hat, const InfluenceEstimate& influence);

double misspecification_error(const EvaluationReport& oic_report, double a_p);

/// OIC with per-row decisions x*(theta_hat, z_i). Throws MissingCovariates.
EvaluationReport context_oic(const FittedPolicy& policy, const CostModel& cost,
                             const InfluenceEstimate& influence, const Dataset& data);

/// Contextual trace form with I_{h,z} and J_{h,z} averaged over rows.
EvaluationReport context_oic_trace(const FittedPolicy& policy, const CostModel& cost, const Dataset& data,
                                   const InfluenceSettings& s = {});

struct ContextualParametricModel {
  /// E_{P_theta_dist | z}[h(x*(theta_dec, z); xi)]
  std::function<double(const Vector& theta_dist, const Vector& theta_dec, const Vector& z)> expected_cost;
  /// Hessian in theta_dec of expected_cost(theta, ., z) at theta. Optional; when
  /// absent the empirical I_{h,z} = (1/n) sum hess h_i is used.
  std::function<Matrix(const Vector& theta, const Vector& z)> hess_expected_cost;
};

/// B = A_con - (1/n) sum_i A_{z_i}, A_z = E_{P_theta_hat | z}[h] + (1/2n) Tr[I_{h,z} Psi].
double context_misspecification(const ContextualParametricModel& model, const FittedPolicy& policy,
                                const CostModel& cost, const InfluenceEstimate& influence,
                                const Dataset& data, const EvaluationReport& context_report);

/// (1/n) sum h(x*(theta_hat - IF_i / n); xi_i). Throws NonFiniteCost.
double alo_estimate(const FittedPolicy& policy, const CostModel& cost, const InfluenceEstimate& influence,
                    const Dataset& data);

} // namespace oic
