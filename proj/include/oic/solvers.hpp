#pragma once

#include "oic/core.hpp"
#include "oic/influence.hpp"

namespace oic {

struct SolverSettings {
  double tol = 1e-8;
  int max_iter = 200;
  double shrink = 0.5;
  double sufficient_decrease = 1e-4;
  double hessian_floor = 1e-10;
  int max_backtracks = 80;
};

/// Smooth objective over theta.
struct Objective {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> grad;
  std::function<Matrix(const Vector&)> hess;
};

/// theta -> mean h(x*(theta); xi_i) with its derivatives.
Objective empirical_objective(const CostModel& cost, const DecisionRule& rule, const Dataset& data);

/// Newton's method with eigenvalue-floored Hessian and Armijo backtracking.
/// Throws MaxIterExceeded, AscentDetected.
FittedPolicy newton_minimize(const Objective& obj, const Vector& theta0, const SolverSettings& s = {},
                             const DecisionRule& rule = DecisionRule());

struct DroSettings {
  double rho = 0.0;       ///< radius is rho / n
  double inner_tol = 1e-10;
};

/// Dual of the chi-square worst case at fixed theta. With f(t) = t^2 - 1 and
/// f*(s) = s_+^2/4 + 1 the dual is min_{alpha>=0, beta} E[(h-beta)_+^2]/(4 alpha)
/// + alpha (1 + eps) + beta; alpha has the closed form sqrt(E[(h-beta)_+^2] / (4(1+eps))).
struct DroDual {
  double value = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double kkt_residual = 0.0;  ///< |d/d beta| at the returned beta
  Vector weights;             ///< worst-case likelihood ratios (h_i - beta)_+ / (2 alpha)
};
DroDual chi2_dual(const Vector& h, double eps, double inner_tol = 1e-10);

/// Worst-case objective theta -> sup_{chi2 <= eps} E_P[h] with gradient and Hessian.
Objective chi2_dro_objective(const CostModel& cost, const DecisionRule& rule, const Dataset& data,
                             double eps, double inner_tol = 1e-10);

/// Min-max chi-square DRO fit. rho = 0 reduces to the plain empirical fit.
/// Throws DualDegenerate when alpha collapses with eps > 0.
FittedPolicy fit_chi2_dro(const CostModel& cost, const DecisionRule& rule, const Dataset& data,
                          const DroSettings& dro, const Vector& theta0, const SolverSettings& s = {});

/// Active-set Newton for min mean h s.t. g_j(theta) <= 0, from a strictly
/// feasible start. Throws InfeasibleStart, KKTFailure.
FittedPolicy fit_constrained(const Objective& obj, const std::vector<Constraint>& g, const Vector& theta0,
                             const SolverSettings& s = {}, const DecisionRule& rule = DecisionRule());
FittedPolicy fit_constrained(const CostModel& cost, const DecisionRule& rule,
                             const std::vector<Constraint>& g, const Dataset& data, const Vector& theta0,
                             const SolverSettings& s = {});

/// Inner problem x*(theta) = argmin_x u(theta, x) with u = E_{P_theta}[h(x; xi)].
struct InnerProblem {
  Index dim_theta = 0;
  Index dim_x = 0;
  std::function<Vector(const Vector& theta, const Vector& x)> grad_x;   ///< f(theta; x)
  std::function<Matrix(const Vector& theta, const Vector& x)> hess_xx;  ///< f_x
  /// d f / d theta (dim_x x dim_theta); finite differences of grad_x when empty.
  std::function<Matrix(const Vector& theta, const Vector& x)> cross;
  Vector x0;  ///< Newton start for the inner solve
};

/// Solves the inner first-order condition by Newton's method.
Vector solve_inner(const InnerProblem& p, const Vector& theta, const SolverSettings& s = {});

/// dx*/dtheta = -f_x^-1 f_theta. Throws SingularInnerHessian.
Matrix implicit_decision_jacobian(const InnerProblem& p, const Vector& theta, const Vector& x);

/// Decision rule backed by the inner problem; second derivatives by central
/// differences of the implicit Jacobian.
DecisionRule implicit_rule(const InnerProblem& p, const SolverSettings& s = {});

/// Compactly supported symmetric kernel on [-1, 1].
struct Kernel {
  std::function<double(double)> value;
};
Kernel epanechnikov();

/// Piecewise smooth scalar link with known kink locations.
struct PiecewiseLink {
  std::function<double(double)> value;
  std::function<double(double)> d1;  ///< valid off the kinks
  std::function<double(double)> d2;  ///< valid off the kinks
  std::vector<double> kinks;
};

/// f(z) = c z_+ + (p - c) z_-, the newsvendor cost of ordering z above demand.
PiecewiseLink newsvendor_link(double c, double p);

/// f_m(z) = integral f(z - scale v / m) phi(v) dv and its first two derivatives.
/// Quadrature: composite Simpson with 201 nodes on each kink-free piece of
/// [-1, 1]; the second derivative adds the kink jumps of f' in closed form.
class SmoothedLink {
public:
  SmoothedLink(PiecewiseLink f, Kernel phi, double m, double scale = 1.0);
  double value(double z) const;
  double d1(double z) const;
  double d2(double z) const;
  double bandwidth() const { return h_; }

private:
  template <class F> double integrate(double z, F&& g) const;
  PiecewiseLink f_;
  Kernel phi_;
  double h_;
  std::vector<double> jumps_;
};

/// Scalar inner map g(x; xi) with x-derivatives.
struct InnerMap {
  std::function<double(const Vector& x, const Vector& xi)> value;
  std::function<Vector(const Vector& x, const Vector& xi)> grad_x;
  std::function<Matrix(const Vector& x, const Vector& xi)> hess_x;  ///< empty when g is affine in x
};

/// Smooth cost h_m(x; xi) = f_m(g(x; xi)).
Cost smooth_cost(const PiecewiseLink& f, const Kernel& phi, double m, const InnerMap& g, double scale = 1.0);

enum class BandwidthRule { Silverman };

/// Gaussian kernel density estimate.
class Kde {
public:
  Kde(Vector data, BandwidthRule rule = BandwidthRule::Silverman);
  double operator()(double x) const;
  double bandwidth() const { return h_; }

private:
  Vector data_;
  double h_;
};

/// Silverman: 0.9 min(sd, IQR/1.34) n^(-1/5). Throws DegenerateSample.
Kde kde(const Vector& data, BandwidthRule rule = BandwidthRule::Silverman);

/// Lowest order statistic attaining the empirical q-quantile.
double empirical_quantile(const Vector& data, double q);

} // namespace oic
