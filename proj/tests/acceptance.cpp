// Acceptance suite: one PASS/FAIL line per criterion; exit status 1 if any fail.
#include "oic/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <thread>

using namespace oic;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[1024];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

unsigned jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

constexpr std::uint64_t kSeed = 2024;

// ---------------------------------------------------------------- 1

Outcome quadratic_exactness() {
  const auto inst = build_quadratic(1.0, 0.0, kSeed);
  const auto& saa = inst.pipeline("SAA");
  double worst = 0.0;
  for (Index n : {10, 37, 100, 1000}) {
    const Dataset d = inst.draw(derive_seed(kSeed, "c1", n), n);
    const auto pol = saa.pipeline.fit(d);
    const double ac = pipeline_oic(saa, pol, d).a_c;
    const Vector xi = d.samples().col(0);
    const double var = (xi.array() - xi.mean()).square().mean();
    worst = std::max(worst, std::abs(ac - 2.0 * var / static_cast<double>(n)));
  }
  const Index n = 500, reps = 500;
  std::vector<double> ac;
  for (Index r = 0; r < reps; ++r) {
    const Dataset d = inst.draw(derive_seed(kSeed, "c1rep", r), n);
    ac.push_back(pipeline_oic(saa, saa.pipeline.fit(d), d).a_c);
  }
  const Estimate e = mean_stderr(ac);
  const double target = 2.0 / static_cast<double>(n);
  const bool pass = worst <= 1e-12 && std::abs(e.mean - target) <= 3.0 * e.se;
  return {pass, fmt("max |a_c - 2 s^2/n| = %.2e; mean a_c = %.6f +- %.6f vs 2 sigma^2/n = %.6f", worst, e.mean,
                    e.se, target)};
}

// ---------------------------------------------------------------- 2

// Rows of equal norm with orthogonal columns (harmonic frame), mixed by a random matrix.
Matrix balanced_design(Index n, Index d, RngStream& rng) {
  Matrix f(n, d);
  for (Index i = 0; i < n; ++i) {
    Index c = 0;
    f(i, c++) = 1.0;
    for (Index k = 1; c + 1 < d; ++k) {
      const double a = 2.0 * std::numbers::pi * static_cast<double>(k * i) / static_cast<double>(n);
      f(i, c++) = std::cos(a);
      f(i, c++) = std::sin(a);
    }
    if (c < d) f(i, c++) = (i % 2 == 0) ? 1.0 : -1.0;
  }
  Matrix mix(d, d);
  for (Index a = 0; a < d; ++a)
    for (Index b = 0; b < d; ++b) mix(a, b) = rng.normal() + (a == b ? 3.0 : 0.0);
  Matrix out = f * mix;
  for (Index i = n - 1; i > 0; --i) out.row(i).swap(out.row(static_cast<Index>(rng.index(static_cast<std::uint64_t>(i + 1)))));
  return out;
}

Outcome mallows_cp() {
  double worst = 0.0;
  for (Index d : {3, 10})
    for (int inst = 0; inst < 5; ++inst) {
      RngStream rng = rng_stream(kSeed, "c2", d, inst);
      const Index n = 100;
      const Matrix u = balanced_design(n, d, rng);
      Vector truth(d);
      for (Index k = 0; k < d; ++k) truth(k) = rng.normal();
      Matrix s(n, d + 1);
      s.leftCols(d) = u;
      for (Index i = 0; i < n; ++i) s(i, d) = u.row(i).dot(truth) + rng.normal(0.0, 1.0 + rng.uniform());
      const Dataset data(s, std::nullopt, d);
      Cost cost;
      cost.value = [d](const Vector& x, const Vector& xi) { return std::pow(xi(d) - x.dot(xi.head(d)), 2); };
      cost.grad_x = [d](const Vector& x, const Vector& xi) {
        return (-2.0 * (xi(d) - x.dot(xi.head(d))) * xi.head(d)).eval();
      };
      cost.hess_x = [d](const Vector&, const Vector& xi) { return (2.0 * xi.head(d) * xi.head(d).transpose()).eval(); };
      const DecisionRule rule = DecisionRule::identity(d);
      FittedPolicy pol;
      pol.theta_hat = (u.transpose() * u).ldlt().solve(u.transpose() * s.col(d));
      pol.rule = rule;
      const auto rep = oic_trace(pol, compose(cost, rule), data);
      const double rss = (s.col(d) - u * pol.theta_hat).squaredNorm();
      const double cp = 2.0 * static_cast<double>(d) * rss / static_cast<double>(n * n);
      worst = std::max(worst, std::abs(rep.a_c - cp));
    }
  return {worst <= 1e-10, fmt("max |a_c - 2 D RSS / n^2| = %.2e over D in {3, 10}, 5 designs each", worst)};
}

// ---------------------------------------------------------------- 3

Outcome aic_recovery() {
  const Index n = 2000;
  RngStream rng = rng_stream(kSeed, "c3");
  Matrix s(n, 1);
  for (Index i = 0; i < n; ++i) s(i, 0) = rng.normal(1.5, 2.0);
  const Dataset data(s);
  CostModel nll;
  nll.value = [](const Vector& t, const Vector& xi) {
    return 0.5 * std::log(2.0 * std::numbers::pi * t(1)) + std::pow(xi(0) - t(0), 2) / (2.0 * t(1));
  };
  nll.grad_theta = [](const Vector& t, const Vector& xi, const Vector&) {
    const double r = xi(0) - t(0), v = t(1);
    Vector g(2);
    g << -r / v, 0.5 / v - r * r / (2.0 * v * v);
    return g;
  };
  nll.hess_theta = [](const Vector& t, const Vector& xi, const Vector&) {
    const double r = xi(0) - t(0), v = t(1);
    Matrix h(2, 2);
    h << 1.0 / v, r / (v * v), r / (v * v), -0.5 / (v * v) + r * r / (v * v * v);
    return h;
  };
  FittedPolicy pol;
  const double m = s.col(0).mean();
  pol.theta_hat = Vector(2);
  pol.theta_hat << m, (s.col(0).array() - m).square().mean();
  pol.rule = DecisionRule::identity(2);
  const double tr = oic_trace(pol, nll, data).extras.at("trace");
  return {tr >= 1.8 && tr <= 2.2, fmt("Tr[I^-1 J] = %.4f (target [1.8, 2.2])", tr)};
}

// ---------------------------------------------------------------- 4

struct LooGap {
  double gap = 0.0, se = 0.0, mean_abs_ac = 0.0;
};

LooGap loocv_gap(Index n, Index reps) {
  NewsvendorParams np;
  np.n_hint = n;
  const auto inst = build_newsvendor(np, kSeed);
  const auto& saa = inst.pipeline("SAA");
  std::vector<double> diff, ac;
  for (Index r = 0; r < reps; ++r) {
    const Dataset d = inst.draw(derive_seed(kSeed, "c4", n, r), n);
    const auto pol = saa.pipeline.fit(d);
    const auto rep = pipeline_oic(saa, pol, d);
    diff.push_back(rep.a_hat - loocv(saa.pipeline, d));
    ac.push_back(std::abs(rep.a_c));
  }
  const Estimate e = mean_stderr(diff);
  return {std::abs(e.mean), e.se, mean_stderr(ac).mean};
}

Outcome oic_loocv() {
  const LooGap a = loocv_gap(100, 100), b = loocv_gap(200, 100);
  const bool pass = a.gap <= 0.25 * a.mean_abs_ac && b.gap < a.gap;
  return {pass, fmt("n=100: |mean(oic - loocv)| = %.4f (se %.4f) vs 25%% of mean|a_c| = %.4f; n=200 gap = %.4f "
                    "(se %.4f)",
                    a.gap, a.se, 0.25 * a.mean_abs_ac, b.gap, b.se)};
}

// ------------------------------------------------------------ portfolio

ExperimentConfig portfolio_config(Index n, Index d, Index reps, std::vector<double> rho,
                                  std::vector<std::string> pipelines, std::vector<std::string> evaluators) {
  nlohmann::json j;
  j["problem"] = {{"name", "portfolio_mv"}, {"params", {{"lambda1", 1.0}, {"lambda2", 2.0}, {"rho", rho}}}};
  j["n"] = {n};
  j["d_xi"] = {d};
  j["replications"] = reps;
  if (!pipelines.empty()) j["pipelines"] = pipelines;
  j["evaluators"] = evaluators;
  j["seed"] = kSeed;
  j["record_timing"] = false;
  return ExperimentConfig::from_json(j);
}

// Per-pipeline vectors of (evaluator value - em) and (oracle - em) indexed by rep.
struct Series {
  std::map<std::string, std::map<std::string, std::vector<double>>> v;  // pipeline -> evaluator -> values
  std::map<std::string, std::vector<double>> oracle;
};

Series collect(const ExperimentResult& res) {
  Series s;
  for (const auto& r : res.rows) {
    s.v[r.pipeline][r.evaluator].push_back(r.a_hat);
    if (r.evaluator == "em") s.oracle[r.pipeline].push_back(r.a_oracle);
  }
  return s;
}

std::vector<double> minus(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

// ---------------------------------------------------------------- 5

Outcome table2() {
  const auto cfg = portfolio_config(50, 10, 100, {3.0}, {}, {"em", "oic"});
  const auto s = collect(run_experiment(cfg, jobs()));
  bool pass = true;
  std::string detail;
  std::map<std::string, double> oic_bias, oracle_bias;
  for (const std::string p : {"SAA", "SAA-U", "SAA-B", "Param", "DRO(rho=3)"}) {
    const auto& em = s.v.at(p).at("em");
    const Estimate ob = mean_stderr(minus(s.oracle.at(p), em));
    const double ac = mean_stderr(minus(s.v.at(p).at("oic"), em)).mean;
    const bool ok = std::abs(ac - ob.mean) <= 2.0 * ob.se;
    pass = pass && ok;
    oic_bias[p] = ac;
    oracle_bias[p] = ob.mean;
    detail += fmt("%s oic %.4f oracle %.4f+-%.4f%s; ", p.c_str(), ac, ob.mean, ob.se, ok ? "" : " (off)");
  }
  // Ordering is judged on the OIC estimates; the oracle ordering is reported
  // but its replication noise is of the same size as the gaps between pipelines.
  auto ordered = [](std::map<std::string, double>& b) {
    return b["SAA-U"] < b["SAA-B"] && b["Param"] < b["SAA-B"] && b["SAA-B"] < b["SAA"];
  };
  const bool order = ordered(oic_bias);
  detail += order ? "OIC ordering matches" : "OIC ordering differs";
  detail += ordered(oracle_bias) ? ", oracle ordering matches" : ", oracle ordering differs";
  return {pass && order, detail};
}

// ---------------------------------------------------------------- 6

Outcome kfold_signs() {
  const auto cfg = portfolio_config(50, 10, 200, {}, {"SAA"}, {"em", "kfold", "bc_kfold"});
  const auto s = collect(run_experiment(cfg, jobs()));
  const auto& em = s.v.at("SAA").at("em");
  const auto& a = s.oracle.at("SAA");
  const Estimate g1 = mean_stderr(minus(a, em));
  const Estimate g2 = mean_stderr(minus(s.v.at("SAA").at("kfold5"), a));
  const double kcv_err = std::abs(g2.mean);
  const double bc_err = std::abs(mean_stderr(minus(s.v.at("SAA").at("bc_kfold5"), a)).mean);
  const bool signs = g1.mean > 2.0 * g1.se && g2.mean > 2.0 * g2.se;
  const bool reduce = bc_err <= 0.75 * kcv_err;
  return {signs && reduce, fmt("A - A_o = %.4f+-%.4f; A_5cv - A = %.4f+-%.4f; |bc - A| = %.4f vs |kcv - A| = %.4f",
                               g1.mean, g1.se, g2.mean, g2.se, bc_err, kcv_err)};
}

// ---------------------------------------------------------------- 7

Outcome d_squared() {
  Estimate ob[2];
  double ac[2];
  bool tracks = true;
  int k = 0;
  for (Index d : {10, 20}) {
    const auto cfg = portfolio_config(100, d, 100, {}, {"SAA"}, {"em", "oic"});
    const auto s = collect(run_experiment(cfg, jobs()));
    const auto& em = s.v.at("SAA").at("em");
    ob[k] = mean_stderr(minus(s.oracle.at("SAA"), em));
    ac[k] = mean_stderr(minus(s.v.at("SAA").at("oic"), em)).mean;
    tracks = tracks && std::abs(ac[k] - ob[k].mean) <= 2.0 * ob[k].se;
    ++k;
  }
  const double ratio = ob[1].mean / ob[0].mean;
  return {ratio >= 2.0 && ratio <= 6.0 && tracks,
          fmt("oracle bias D=10 %.4f+-%.4f (oic %.4f), D=20 %.4f+-%.4f (oic %.4f), ratio %.2f", ob[0].mean, ob[0].se,
              ac[0], ob[1].mean, ob[1].se, ac[1], ratio)};
}

// ---------------------------------------------------------------- 8

Outcome dro_region() {
  const std::vector<double> rho = {0, 0.5, 1, 2, 4, 8};
  std::vector<std::string> labels;
  for (double r : rho) {
    std::ostringstream os;
    os << "DRO(rho=" << r << ")";
    labels.push_back(os.str());
  }
  const auto cfg = portfolio_config(100, 20, 100, rho, labels, {"em", "oic"});
  const auto s = collect(run_experiment(cfg, jobs()));
  const auto& oic0 = s.v.at(labels[0]).at("oic");
  const auto& ora0 = s.oracle.at(labels[0]);
  bool pass = true;
  std::string detail;
  for (std::size_t k = 1; k < labels.size(); ++k) {
    const Estimate e = mean_stderr(minus(s.v.at(labels[k]).at("oic"), oic0));
    const Estimate o = mean_stderr(minus(s.oracle.at(labels[k]), ora0));
    const bool agree = (e.mean > 0) == (o.mean > 0);
    pass = pass && agree;
    detail += fmt("rho=%g oic %+.4f oracle %+.4f%s; ", rho[k], e.mean, o.mean, agree ? "" : " (sign differs)");
  }
  return {pass, detail};
}

// ---------------------------------------------------------------- 9

Outcome newsvendor_closed_form() {
  NewsvendorParams np;
  np.n_hint = 500;
  const auto inst = build_newsvendor(np, kSeed);
  const auto& saa = inst.pipeline("SAA");
  double closed = 0.0, generic = 0.0;
  const Index reps = 50;
  for (Index r = 0; r < reps; ++r) {
    const Dataset d = inst.draw(derive_seed(kSeed, "c9", r), 500);
    const auto pol = saa.pipeline.fit(d);
    closed += pipeline_oic(saa, pol, d).a_c;
    generic += newsvendor_smoothed_oic(pol, d, np.c, np.p, 50.0).a_c;
  }
  const double rel = std::abs(generic - closed) / closed;
  return {rel <= 0.2, fmt("mean closed form %.5f, smoothed trace %.5f, relative gap %.3f", closed / reps,
                          generic / reps, rel)};
}

// ---------------------------------------------------------------- 10

Outcome misspecification() {
  NewsvendorParams np;
  np.n_hint = 100;
  const auto inst = build_newsvendor(np, kSeed);
  std::map<std::string, std::vector<double>> err;
  for (Index r = 0; r < 100; ++r) {
    const Dataset d = inst.draw(derive_seed(kSeed, "c10", r), 100);
    for (const std::string label : {"Normal-ETO", "Exp-ETO", "Exp-OS"}) {
      const auto& p = inst.pipeline(label);
      const auto pol = p.pipeline.fit(d);
      err[label].push_back(misspecification_error(pipeline_oic(p, pol, d), p.poic(pol, d).a_p));
    }
  }
  const Estimate nrm = mean_stderr(err["Normal-ETO"]);
  bool pass = true;
  std::string detail = fmt("Normal-ETO %.3f+-%.3f", nrm.mean, nrm.se);
  for (const std::string label : {"Exp-ETO", "Exp-OS"}) {
    const Estimate e = mean_stderr(err[label]);
    const double se = std::sqrt(e.se * e.se + nrm.se * nrm.se);
    pass = pass && std::abs(e.mean) - std::abs(nrm.mean) > 2.0 * se;
    detail += fmt("; %s %.3f+-%.3f", label.c_str(), e.mean, e.se);
  }
  return {pass, detail};
}

// ---------------------------------------------------------------- 11

Outcome exp_utility_values() {
  const auto pop = exp_utility_population(ExpUtilityParams{}, 1000000, kSeed);
  const bool eto = std::abs(pop.ac_eto.mean - 0.82) <= 0.2 * 0.82;
  const bool saa = std::abs(pop.ac_saa.mean - 3.79) <= 0.2 * 3.79;
  return {eto && saa, fmt("ETO A_c = %.3f+-%.3f (target 0.82), SAA A_c = %.3f+-%.3f (target 3.79); x_saa = (%.3f, "
                          "%.3f), x_eto = (%.3f, %.3f)",
                          pop.ac_eto.mean, pop.ac_eto.se, pop.ac_saa.mean, pop.ac_saa.se, pop.x_saa(0), pop.x_saa(1),
                          pop.x_eto(0), pop.x_eto(1))};
}

// ---------------------------------------------------------------- 12

Outcome properties() {
  std::string detail;
  bool pass = true;
  auto check = [&](const char* name, bool ok, const std::string& info) {
    pass = pass && ok;
    detail += fmt("%s %s (%s); ", name, ok ? "ok" : "FAILED", info.c_str());
  };
  // IF rows sum to ~0 at optima and Psi is PSD.
  {
    const auto inst = build_portfolio_mv(PortfolioParams{}, kSeed);
    double worst = 0.0, min_eig = 0.0;
    for (const auto& p : inst.pipelines) {
      const Dataset d = inst.draw(derive_seed(kSeed, "c12if"), 60);
      const auto pol = p.pipeline.fit(d);
      const auto est = p.influence(pol, d);
      if (p.label().rfind("DRO", 0) != 0)
        worst = std::max(worst, est.per_sample.colwise().mean().norm() / (1.0 + est.per_sample.norm()));
      min_eig = std::min(min_eig, Eigen::SelfAdjointEigenSolver<Matrix>(est.psi_hat).eigenvalues().minCoeff() /
                                      std::max(1.0, est.psi_hat.norm()));
    }
    check("IF mean zero", worst <= 1e-8, fmt("%.1e", worst));
    check("Psi PSD", min_eig >= -1e-12, fmt("%.1e", min_eig));
  }
  // Projection identities on a random active set.
  {
    RngStream rng = rng_stream(kSeed, "c12proj");
    Matrix c(2, 5);
    for (Index i = 0; i < 2; ++i)
      for (Index k = 0; k < 5; ++k) c(i, k) = rng.normal();
    const Matrix p = Matrix::Identity(5, 5) - c.transpose() * symmetric_pinv(c * c.transpose()) * c;
    const double e = std::max({(p * p - p).norm(), (p - p.transpose()).norm(), (p * c.transpose()).norm()});
    check("projector", e <= 1e-10, fmt("%.1e", e));
  }
  // Smoothing dominance f_m >= f for convex f.
  {
    const SmoothedLink f(newsvendor_link(2.0, 5.0), epanechnikov(), 5.0, 10.0);
    const auto raw = newsvendor_link(2.0, 5.0);
    double worst = 0.0;
    for (double z = -20.0; z <= 20.0; z += 0.01) worst = std::min(worst, f.value(z) - raw.value(z));
    check("smoothing dominance", worst >= -1e-12, fmt("%.1e", worst));
  }
  // Var[a_c] scales like 1/n^2... quarter scaling when n doubles.
  {
    const auto inst = build_quadratic(1.0, 0.0, kSeed);
    const auto& saa = inst.pipeline("SAA");
    double v[2];
    int k = 0;
    for (Index n : {100, 200}) {
      std::vector<double> ac;
      for (Index r = 0; r < 400; ++r) {
        const Dataset d = inst.draw(derive_seed(kSeed, "c12var", n, r), n);
        ac.push_back(pipeline_oic(saa, saa.pipeline.fit(d), d).a_c);
      }
      const Estimate e = mean_stderr(ac);
      v[k++] = e.se * e.se * 400.0;
    }
    const double ratio = v[0] / v[1];
    check("variance scaling", ratio >= 2.0 && ratio <= 8.0, fmt("ratio %.2f", ratio));
  }
  // Reparametrization invariance: x = B theta with invertible B.
  {
    const auto inst = build_portfolio_mv(PortfolioParams{4, 1.0, 0.1, {}}, kSeed);
    const Dataset d = inst.draw(derive_seed(kSeed, "c12rep"), 80);
    const auto& saa = inst.pipeline("SAA");
    const auto pol = saa.pipeline.fit(d);
    const double a1 = pipeline_oic(saa, pol, d).a_c;
    RngStream rng = rng_stream(kSeed, "c12b");
    Matrix b(4, 4);
    for (Index i = 0; i < 4; ++i)
      for (Index k = 0; k < 4; ++k) b(i, k) = rng.normal() + (i == k ? 2.0 : 0.0);
    const auto model = saa.pipeline.cost;
    FittedPolicy p2;
    p2.rule = DecisionRule::linear(b);
    p2.theta_hat = b.lu().solve(pol.theta_hat);
    CostModel m2;
    m2.value = model.value;
    m2.grad_theta = [model, b](const Vector& t, const Vector& xi, const Vector& z) {
      return (b.transpose() * model.grad_theta(b * t, xi, z)).eval();
    };
    m2.hess_theta = [model, b](const Vector& t, const Vector& xi, const Vector& z) {
      return (b.transpose() * model.hess_theta(b * t, xi, z) * b).eval();
    };
    const double a2 = oic::oic(p2, m2, if_e2e(m2, p2.theta_hat, d), d).a_c;
    check("reparametrization", std::abs(a1 - a2) <= 1e-8, fmt("%.1e", std::abs(a1 - a2)));
  }
  // End-to-end CSV determinism.
  {
    auto cfg = portfolio_config(30, 4, 3, {1.0}, {}, {"em", "oic", "kfold"});
    const std::string a = to_csv(run_experiment(cfg, 1).rows);
    const std::string b = to_csv(run_experiment(cfg, 3).rows);
    check("CSV determinism", a == b, fmt("%zu bytes", a.size()));
  }
  return {pass, detail};
}

// ---------------------------------------------------------------- 13

Outcome table2_runtime() {
  const std::string path = std::string(OIC_SOURCE_DIR) + "/configs/table2.json";
  const auto cfg = ExperimentConfig::load(path);
  const auto t0 = std::chrono::steady_clock::now();
  const auto res = run_experiment(cfg, jobs());
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {secs < 300.0, fmt("%zu rows in %.1f s on %u thread(s)", res.rows.size(), secs, jobs())};
}

} // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    Outcome (*run)();
    double budget;  // seconds, 0 = none stated
  };
  const Criterion all[] = {
      {1, "closed-form oracle exactness", quadratic_exactness, 5},
      {2, "Mallows Cp identity", mallows_cp, 0},
      {3, "AIC recovery", aic_recovery, 10},
      {4, "OIC-LOOCV equivalence", oic_loocv, 120},
      {5, "portfolio bias table", table2, 300},
      {6, "K-fold sign structure", kfold_signs, 0},
      {7, "D^2 scaling", d_squared, 0},
      {8, "DRO region identification", dro_region, 0},
      {9, "newsvendor closed-form consistency", newsvendor_closed_form, 0},
      {10, "misspecification error ordering", misspecification, 0},
      {11, "exp-utility bias values", exp_utility_values, 0},
      {12, "property suites", properties, 60 * 7},
      {13, "desk-scale runtime", table2_runtime, 0},
  };
  int failed = 0;
  for (const auto& c : all) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget > 0 && secs > c.budget) {
      o.pass = false;
      o.detail += fmt(" [over budget %.0f s]", c.budget);
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s criterion %d: %s (%.1f s) %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, std::size(all));
  return failed == 0 ? 0 : 1;
}
