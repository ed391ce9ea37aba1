#include "test_util.hpp"

#include <algorithm>
#include <cmath>
#include <set>

using namespace oic;
using namespace oic::test;

namespace {
double quad_truth(double theta, double sigma) { return theta * theta + sigma * sigma; }
} // namespace

TEST_CASE("fold assignment") {
  const auto folds = fold_assignment(23, 5, 3);
  REQUIRE(folds.size() == 5);
  std::vector<std::size_t> sizes;
  std::set<Index> seen;
  for (const auto& f : folds) {
    sizes.push_back(f.size());
    seen.insert(f.begin(), f.end());
  }
  CHECK(sizes == std::vector<std::size_t>{5, 5, 5, 4, 4});
  CHECK(seen.size() == 23);
  CHECK(*seen.begin() == 0);
  CHECK(*seen.rbegin() == 22);
  CHECK(fold_assignment(23, 5, 3) == folds);
  CHECK(fold_assignment(23, 5, 4) != folds);
}

TEST_CASE("fixed pipeline: every resampling estimator returns A_o") {
  const Dataset d = normal_column(41, 17);
  const Pipeline p = fixed_pipeline(0.4);
  const double a_o = evaluate_empirical(p.fit(d), p.cost, d);
  CHECK(kfold_cv(p, d, 5, 1) == doctest::Approx(a_o).epsilon(1e-14));
  CHECK(loocv(p, d) == doctest::Approx(a_o).epsilon(1e-14));
  CHECK(bc_kfold_cv(p, d, 5, 1) == doctest::Approx(a_o).epsilon(1e-14));
  CHECK(jackknife_debias(p, d) == doctest::Approx(a_o).epsilon(1e-12));
}

TEST_CASE("bootstrap on a constant cost") {
  Pipeline p = fixed_pipeline(0.0);
  p.cost.value = [](const Vector&, const Vector&) { return 2.5; };
  const auto b = bootstrap_debias(p, normal_column(42, 10), 20, 1);
  CHECK(b.estimate == 2.5);
  CHECK(b.replicates.size() == 20);
  CHECK_THROWS_AS(bootstrap_debias(p, normal_column(42, 10), 0, 1), InvalidArgument);
}

TEST_CASE("quadratic LOOCV closed form") {
  const Dataset d = normal_column(43, 30, 1.0, 2.0);
  const Vector x = d.samples().col(0);
  const double n = 30, mean = x.mean();
  double closed = 0;
  for (Index i = 0; i < 30; ++i) {
    const double t = (n * mean - x(i)) / (n - 1);
    closed += (t - x(i)) * (t - x(i));
  }
  closed /= n;
  CHECK(std::abs(loocv(mean_pipeline(), d) - closed) < 1e-12);
  CHECK(std::abs(kfold_cv(mean_pipeline(), d, 30, 5) - closed) < 1e-12);
}

TEST_CASE("fit failures carry the fold index") {
  Pipeline p = mean_pipeline();
  p.fit = [](const Dataset& d) -> FittedPolicy {
    if (d.n() < 10) throw SingularHessian("tiny");
    return policy_at(vec({0}));
  };
  CHECK_THROWS_AS(kfold_cv(p, normal_column(44, 12), 2, 1), FitFailure);
}

TEST_CASE("quadratic SAA replication study") {
  // n = 20 keeps the K-fold bias sigma^2/(4n) several standard errors above the oracle noise.
  const double sigma = 1.0;
  const Index n = 20, reps = 20000;
  const Pipeline p = mean_pipeline();
  std::vector<double> kcv_err, bc_err, corr2, corr10;
  for (Index r = 0; r < reps; ++r) {
    const Dataset d = normal_column(derive_seed(45, r), n);
    const double a = quad_truth(p.fit(d).theta_hat(0), sigma);
    const double kcv = kfold_cv(p, d, 5, r);
    kcv_err.push_back(kcv - a);
    bc_err.push_back(bc_kfold_cv(p, d, 5, r) - a);
    corr2.push_back(bc_kfold_cv(p, d, 2, r) - kfold_cv(p, d, 2, r));
    corr10.push_back(bc_kfold_cv(p, d, 10, r) - kfold_cv(p, d, 10, r));
  }
  const Estimate kcv = mean_stderr(kcv_err), bc = mean_stderr(bc_err);
  // E[A_kcv] - A = sigma^2 / ((K - 1) n), pessimistic.
  CHECK(std::abs(kcv.mean - sigma * sigma / (4.0 * n)) <= 3 * kcv.se);
  CHECK(std::abs(bc.mean) < std::abs(kcv.mean));
  CHECK(std::abs(bc.mean) <= 3 * bc.se);
  const double ratio = mean_stderr(corr2).mean / mean_stderr(corr10).mean;
  CHECK(ratio > 6.0);
  CHECK(ratio < 12.0);
}

TEST_CASE("bootstrap and jackknife on quadratic SAA") {
  const Pipeline p = mean_pipeline();
  SUBCASE("bootstrap expectation over resamples is s^2 (1 + 1/n)") {
    const Dataset d = normal_column(46, 40);
    const auto b = bootstrap_debias(p, d, 4000, 2);
    CHECK(b.estimate == doctest::Approx(pop_variance(d) * (1 + 1.0 / 40)).epsilon(0.01));
  }
  SUBCASE("jackknife equals the unbiased variance") {
    const Dataset d = normal_column(47, 25);
    CHECK(jackknife_debias(p, d) == doctest::Approx(pop_variance(d) * 25.0 / 24.0).epsilon(1e-10));
  }
  SUBCASE("both debiased means are within 3 stderr of A") {
    const Index n = 100;
    std::vector<double> eb, ej;
    for (Index r = 0; r < 200; ++r) {
      const Dataset d = normal_column(derive_seed(48, r), n);
      const double a = quad_truth(p.fit(d).theta_hat(0), 1.0);
      eb.push_back(bootstrap_debias(p, d, 50, r).estimate - a);
      ej.push_back(jackknife_debias(p, d) - a);
    }
    const Estimate b = mean_stderr(eb), j = mean_stderr(ej);
    CHECK(std::abs(b.mean) <= 3 * b.se);
    CHECK(std::abs(j.mean) <= 3 * j.se);
  }
}

TEST_CASE("newsvendor SAA: bootstrap and jackknife both correct upward") {
  const auto inst = build_newsvendor(NewsvendorParams{}, 49);
  const auto& saa = inst.pipeline("SAA").pipeline;
  std::vector<double> db, dj, b10, b50;
  for (Index r = 0; r < 40; ++r) {
    const Dataset d = inst.draw(derive_seed(49, "nv", r), 60);
    const double a_o = evaluate_empirical(saa.fit(d), saa.cost, d);
    db.push_back(bootstrap_debias(saa, d, 50, r).estimate - a_o);
    dj.push_back(jackknife_debias(saa, d) - a_o);
    if (r < 20) {
      std::vector<double> v10, v50;
      for (Index k = 0; k < 8; ++k) {
        v10.push_back(bootstrap_debias(saa, d, 10, derive_seed(r, k)).estimate);
        v50.push_back(bootstrap_debias(saa, d, 50, derive_seed(r, k)).estimate);
      }
      const auto var = [](const std::vector<double>& v) {
        const Estimate e = mean_stderr(v);
        return e.se * e.se * static_cast<double>(v.size());
      };
      b10.push_back(var(v10));
      b50.push_back(var(v50));
    }
  }
  CHECK(mean_stderr(db).mean > 0);
  CHECK(mean_stderr(dj).mean > 0);
  CHECK(mean_stderr(b50).mean < mean_stderr(b10).mean);
}
