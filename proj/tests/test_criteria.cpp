#include "test_util.hpp"

#include <cmath>

using namespace oic;
using namespace oic::test;

namespace {

// Rows with mean zero and covariance (divisor n) exactly s^2 I.
Dataset whitened(std::uint64_t seed, Index n, Index d, double s) {
  RngStream rng(seed);
  Matrix x(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) x(i, j) = rng.normal();
  x.rowwise() -= x.colwise().mean();
  const Matrix cov = x.transpose() * x / static_cast<double>(n);
  const Eigen::LLT<Matrix> llt(cov);
  const Matrix l = llt.matrixL();
  return Dataset(s * x * l.transpose().inverse());
}

// x = theta^T z with squared loss in the scalar outcome xi.
DecisionRule linear_context_rule(Index d) {
  DecisionRule r;
  r.dim_theta = d;
  r.dim_x = 1;
  r.decide = [](const Vector& t, const Vector& z) { return Vector::Constant(1, t.dot(z)).eval(); };
  r.jacobian = [](const Vector&, const Vector& z) { return Matrix(z.transpose()); };
  return r;
}

Dataset contextual_data(std::uint64_t seed, Index n) {
  RngStream rng(seed);
  Matrix z(n, 2), xi(n, 1);
  for (Index i = 0; i < n; ++i) {
    z.row(i) << 1.0, rng.uniform();
    xi(i, 0) = 2.0 + 3.0 * z(i, 1) + rng.normal();
  }
  return Dataset(xi, z);
}

Vector ols(const Dataset& d) {
  const Matrix& z = d.covariates();
  return (z.transpose() * z).ldlt().solve(z.transpose() * d.samples().col(0));
}

} // namespace

TEST_CASE("oic with zero gradients") {
  CostModel cm = squared_model();
  cm.grad_theta = [](const Vector& t, const Vector&, const Vector&) { return Vector::Zero(t.size()).eval(); };
  const Dataset d = normal_column(21, 10);
  const auto est = InfluenceEstimate::from_rows(Matrix::Ones(10, 1), InfluenceSource::Custom);
  const auto r = oic::oic(policy_at(vec({0.1})), cm, est, d);
  CHECK(r.a_c == 0.0);
  CHECK(r.a_hat == r.a_o);
}

TEST_CASE("oic on quadratic SAA is 2 s^2 / n") {
  for (Index n : {5, 50, 400}) {
    const Dataset d = normal_column(22 + static_cast<std::uint64_t>(n), n, 1.0, 2.0);
    const auto pol = mean_pipeline().fit(d);
    const auto r = oic::oic(pol, squared_model(), if_e2e(squared_model(), pol.theta_hat, d), d);
    CHECK(r.a_c == doctest::Approx(2.0 * pop_variance(d) / static_cast<double>(n)).epsilon(1e-12));
    CHECK(r.a_hat == r.a_o + r.a_c);
    CHECK(std::abs(r.a_c) <= r.extras.at("cs_bound") * (1 + 1e-12));
  }
}

TEST_CASE("oic row mismatch") {
  const Dataset d = normal_column(23, 10);
  const auto est = InfluenceEstimate::from_rows(Matrix::Zero(9, 1), InfluenceSource::Custom);
  CHECK_THROWS_AS(oic::oic(policy_at(vec({0})), squared_model(), est, d), RowMismatch);
}

TEST_CASE("oic equals oic_trace for empirical minimizers") {
  const Dataset d = whitened(24, 60, 3, 1.3);
  const CostModel cm = squared_model(3);
  const Vector theta = d.samples().colwise().mean().transpose();
  const auto pol = policy_at(theta);
  const double a = oic::oic(pol, cm, if_e2e(cm, theta, d), d).a_c;
  const double b = oic_trace(pol, cm, d).a_c;
  CHECK(std::abs(a - b) < 1e-10);
}

TEST_CASE("oic_trace with J = c I gives c D / n") {
  const Index n = 80, dim = 2;
  const double s = 0.7;
  const Dataset d = whitened(25, n, dim, s);
  const auto r = oic_trace(policy_at(Vector::Zero(dim)), squared_model(dim), d);
  // J = 4 s^2 I and I_h = 2 I, so c = 2 s^2.
  CHECK(r.a_c == doctest::Approx(2 * s * s * dim / static_cast<double>(n)).epsilon(1e-10));
  CHECK_THROWS_AS(oic_trace(policy_at(Vector::Constant(dim, 0.5)), squared_model(dim), d), NotAtOptimum);
}

TEST_CASE("oic_regularized") {
  const Dataset d = normal_column(26, 30, 1.0, 1.0);
  const Regularizer r{[](const Vector& t) { return t.squaredNorm(); },
                      [](const Vector& t) { return Vector(2 * t); },
                      [](const Vector& t) { return Matrix(2 * Matrix::Identity(t.size(), t.size())); }};
  SUBCASE("lambda = 0 equals the trace form") {
    const auto pol = mean_pipeline().fit(d);
    const auto a = oic_regularized(pol, squared_model(), r, 0.0, d);
    const auto b = oic_trace(pol, squared_model(), d);
    CHECK(a.a_c == doctest::Approx(b.a_c).epsilon(1e-12));
    CHECK(a.a_o == doctest::Approx(b.a_o).epsilon(1e-12));
  }
  SUBCASE("ridge toy against the hand trace") {
    const double lambda = 0.5;
    const Vector x = d.samples().col(0);
    const double theta = x.mean() / (1 + lambda);
    double j = 0;
    for (Index i = 0; i < d.n(); ++i) {
      const double g = 2 * (theta - x(i)) + 2 * lambda * theta;
      j += g * g;
    }
    j /= static_cast<double>(d.n());
    const double expected = j / (2 + 2 * lambda) / static_cast<double>(d.n());
    const auto rep = oic_regularized(policy_at(vec({theta})), squared_model(), r, lambda, d);
    CHECK(rep.a_c == doctest::Approx(expected).epsilon(1e-10));
    CHECK(rep.extras.at("penalty") == doctest::Approx(lambda * theta * theta));
    CHECK(rep.a_hat == rep.a_o + rep.a_c);
  }
}

TEST_CASE("oic_constrained") {
  Dataset d = whitened(27, 50, 2, 1.0);
  Matrix s = d.samples();
  s.rowwise() += vec({1, 1}).transpose();
  d = Dataset(s);
  const CostModel cm = squared_model(2);
  SUBCASE("no active constraints") {
    const std::vector<Constraint> g{Constraint::linear(vec({1, 0}), 10)};
    const auto a = oic_constrained(policy_at(vec({1, 1})), cm, g, vec({0}), d);
    const auto b = oic_trace(policy_at(vec({1, 1})), cm, d);
    CHECK(a.a_c == doctest::Approx(b.a_c).epsilon(1e-12));
  }
  SUBCASE("pinned") {
    const std::vector<Constraint> g{Constraint::linear(vec({1, 0}), 0.5), Constraint::linear(vec({0, 1}), 0.5)};
    CHECK(std::abs(oic_constrained(policy_at(vec({0.5, 0.5})), cm, g, vec({1, 1}), d).a_c) < 1e-14);
  }
  SUBCASE("one active constraint lies between pinned and free") {
    const std::vector<Constraint> g{Constraint::linear(vec({1, 1}), 1)};
    const double a = oic_constrained(policy_at(vec({0.5, 0.5})), cm, g, vec({1}), d).a_c;
    const double free = oic_trace(policy_at(vec({1, 1})), cm, d).a_c;
    CHECK(a > 0);
    CHECK(a < free);
  }
}

TEST_CASE("poic and misspecification") {
  ParametricModel m;
  m.dim_theta = 1;
  // xi ~ N(theta, 1), h = (x - xi)^2 with x = theta_dec.
  m.expected_cost = [](const Vector& td, const Vector& tx) { return (tx(0) - td(0)) * (tx(0) - td(0)) + 1.0; };
  SUBCASE("zero influence") {
    const auto est = InfluenceEstimate::from_rows(Matrix::Zero(10, 1), InfluenceSource::Custom);
    const auto p = poic(m, vec({0.3}), est);
    CHECK(p.a_p == doctest::Approx(1.0));
    CHECK(p.trace_term == 0.0);
  }
  SUBCASE("finite-difference model Hessian") {
    CHECK(model_hessian(m, vec({0.3}))(0, 0) == doctest::Approx(2.0).epsilon(1e-6));
    const Dataset d = normal_column(28, 40);
    const auto est = if_mean(d, {0});
    const auto p = poic(m, vec({d.samples().col(0).mean()}), est);
    CHECK(p.trace_term == doctest::Approx(2.0 * est.psi_hat(0, 0) / (2.0 * 40)).epsilon(1e-6));
    const auto rep = EvaluationReport::make(1.0, 0.5, "oic", 40);
    CHECK(misspecification_error(rep, p.a_p) == doctest::Approx(1.5 - p.a_p));
  }
  SUBCASE("non-finite model") {
    ParametricModel bad = m;
    bad.expected_cost = [](const Vector&, const Vector&) { return NAN; };
    const auto est = InfluenceEstimate::from_rows(Matrix::Zero(3, 1), InfluenceSource::Custom);
    CHECK_THROWS_AS(poic(bad, vec({0}), est), ModelEvalFailure);
  }
}

TEST_CASE("exponential newsvendor trace term") {
  NewsvendorParams np;
  np.dgp = DemandModel::ExpPlusUniform;
  const auto inst = build_newsvendor(np, 1);
  const auto& eto = inst.pipeline("Exp-ETO");
  // Mean 1 and 1/n variance 1 = theta^2, so the empirical trace equals c theta ln^2(p/c) / (2n).
  const Dataset d = column({0, 2});
  const auto pol = eto.pipeline.fit(d);
  const auto p = eto.poic(pol, d);
  const double k = std::log(2.5);
  CHECK(p.trace_term == doctest::Approx(2.0 * 1.0 * k * k / (2.0 * 2)).epsilon(1e-8));
}

TEST_CASE("context_oic") {
  SUBCASE("constant covariates reduce to oic") {
    const Dataset plain = normal_column(29, 20);
    const Dataset ctx(plain.samples(), Matrix::Ones(20, 1));
    const auto pol = mean_pipeline().fit(plain);
    const auto est = if_e2e(squared_model(), pol.theta_hat, plain);
    const auto a = oic::oic(pol, squared_model(), est, plain);
    const auto b = context_oic(pol, squared_model(), est, ctx);
    CHECK(a.a_c == doctest::Approx(b.a_c).epsilon(1e-12));
    CHECK(a.a_o == doctest::Approx(b.a_o).epsilon(1e-12));
    CHECK_THROWS_AS(context_oic(pol, squared_model(), est, plain), MissingCovariates);
  }
  SUBCASE("trace form equals the influence form") {
    const Dataset d = contextual_data(30, 80);
    const DecisionRule rule = linear_context_rule(2);
    const CostModel cm = compose(squared_cost(), rule);
    const auto pol = policy_at(ols(d), rule);
    const double a = context_oic(pol, cm, if_e2e(cm, pol.theta_hat, d), d).a_c;
    const double b = context_oic_trace(pol, cm, d).a_c;
    CHECK(std::abs(a - b) < 1e-10);
    CHECK(a > 0);
  }
}

TEST_CASE("alo_estimate") {
  const Dataset d = normal_column(31, 12);
  const auto pol = mean_pipeline().fit(d);
  const auto zero = InfluenceEstimate::from_rows(Matrix::Zero(12, 1), InfluenceSource::Custom);
  CHECK(alo_estimate(pol, squared_model(), zero, d) == doctest::Approx(evaluate_empirical(pol, squared_model(), d)));
  const auto est = if_e2e(squared_model(), pol.theta_hat, d);
  const double n = 12;
  CHECK(alo_estimate(pol, squared_model(), est, d) ==
        doctest::Approx((1 + 1 / n) * (1 + 1 / n) * pop_variance(d)).epsilon(1e-12));
}
