#include "oic/harness.hpp"

#include <set>

namespace oic {

using nlohmann::json;

namespace {

class Params {
public:
  Params(const json& j, std::set<std::string> allowed) : j_(j) {
    for (const auto& [key, v] : j.items())
      if (!allowed.count(key)) throw ConfigError("$.problem.params." + key + ": unknown parameter");
  }

  double number(const std::string& key, double fallback) const {
    if (!j_.contains(key)) return fallback;
    if (!j_[key].is_number()) fail(key, "expected a number");
    return j_[key].get<double>();
  }

  Vector vector(const std::string& key, const Vector& fallback, bool allow_empty = false) const {
    if (!j_.contains(key)) return fallback;
    const json& v = j_[key];
    if (v.is_number()) return Vector::Constant(1, v.get<double>());
    if (!v.is_array() || (v.empty() && !allow_empty)) fail(key, "expected a nonempty list of numbers");
    Vector out(static_cast<Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) fail(key, "expected numbers");
      out(static_cast<Index>(i)) = v[i].get<double>();
    }
    return out;
  }

  Matrix matrix(const std::string& key, const Matrix& fallback) const {
    if (!j_.contains(key)) return fallback;
    const json& v = j_[key];
    if (!v.is_array() || v.empty() || !v[0].is_array()) fail(key, "expected a list of rows");
    Matrix out(static_cast<Index>(v.size()), static_cast<Index>(v[0].size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_array() || v[i].size() != v[0].size()) fail(key, "rows differ in length");
      for (std::size_t k = 0; k < v[i].size(); ++k) {
        if (!v[i][k].is_number()) fail(key, "expected numbers");
        out(static_cast<Index>(i), static_cast<Index>(k)) = v[i][k].get<double>();
      }
    }
    return out;
  }

  std::optional<std::string> string(const std::string& key) const {
    if (!j_.contains(key)) return std::nullopt;
    if (!j_[key].is_string()) fail(key, "expected a string");
    return j_[key].get<std::string>();
  }

private:
  [[noreturn]] static void fail(const std::string& key, const std::string& msg) {
    throw ConfigError("$.problem.params." + key + ": " + msg);
  }
  const json& j_;
};

std::vector<ProblemEntry> make_registry() {
  std::vector<ProblemEntry> r;
  r.push_back({"quadratic", "h = (theta - xi)^2 with xi ~ N(0, sigma^2); pipelines SAA, Fixed",
               [](const json& j, Index, Index, std::uint64_t seed) {
                 const Params p(j, {"sigma", "theta0"});
                 return build_quadratic(p.number("sigma", 1.0), p.number("theta0", 0.0), seed);
               }});
  r.push_back({"portfolio_mv", "mean-variance portfolio; pipelines SAA, SAA-U, SAA-B, Param, DRO(rho=...)",
               [](const json& j, Index, Index d, std::uint64_t seed) {
                 const Params p(j, {"lambda1", "lambda2", "rho"});
                 PortfolioParams pp;
                 pp.d_xi = d == 0 ? 10 : d;
                 pp.lambda1 = p.number("lambda1", pp.lambda1);
                 pp.lambda2 = p.number("lambda2", pp.lambda2);
                 const Vector rho = p.vector("rho", Vector::Constant(1, 3.0), true);
                 pp.rho.assign(rho.data(), rho.data() + rho.size());
                 return build_portfolio_mv(pp, seed);
               }});
  r.push_back({"portfolio_exp_utility", "h = exp(-xi^T x) + gamma |x|^2; pipelines SAA, EW, ETO",
               [](const json& j, Index, Index, std::uint64_t seed) {
                 const Params p(j, {"gamma", "mu", "sigma", "eto_variance"});
                 ExpUtilityParams e;
                 e.gamma = p.number("gamma", e.gamma);
                 e.mu = p.vector("mu", e.mu);
                 e.sigma = p.matrix("sigma", e.sigma);
                 e.eto_variance = p.number("eto_variance", e.eto_variance);
                 return build_portfolio_exp_utility(e, seed);
               }});
  r.push_back({"newsvendor", "h = c x - p min(xi, x); pipelines SAA, Normal-ETO, Exp-ETO, Exp-OS",
               [](const json& j, Index n, Index, std::uint64_t seed) {
                 const Params p(j, {"c", "p", "dgp", "mean", "sd", "noise", "smoothing_m"});
                 NewsvendorParams np;
                 np.c = p.number("c", np.c);
                 np.p = p.number("p", np.p);
                 np.mean = p.number("mean", np.mean);
                 np.sd = p.number("sd", np.sd);
                 np.noise = p.number("noise", np.noise);
                 np.smoothing_m = p.number("smoothing_m", np.smoothing_m);
                 np.n_hint = n;
                 const auto dgp = p.string("dgp").value_or("normal");
                 if (dgp == "normal") np.dgp = DemandModel::NormalPlusUniform;
                 else if (dgp == "exponential") np.dgp = DemandModel::ExpPlusUniform;
                 else throw ConfigError("$.problem.params.dgp: expected normal or exponential");
                 return build_newsvendor(np, seed);
               }});
  r.push_back({"regression_threshold",
               "thresholded squared error of polynomial regressions; pipelines Linear, Linear-R1, Quad, Quad-R, "
               "Cubic-R",
               [](const json& j, Index, Index d, std::uint64_t seed) {
                 const Params p(j, {"beta", "csv", "train_fraction", "alpha_linear_r", "alpha_quad_r",
                                    "alpha_cubic"});
                 RegressionParams rp;
                 rp.beta = p.number("beta", rp.beta);
                 rp.csv_path = p.string("csv");
                 rp.train_fraction = p.number("train_fraction", rp.train_fraction);
                 rp.alpha_linear_r = p.number("alpha_linear_r", rp.alpha_linear_r);
                 rp.alpha_quad_r = p.number("alpha_quad_r", rp.alpha_quad_r);
                 rp.alpha_cubic = p.number("alpha_cubic", rp.alpha_cubic);
                 if (d > 0) rp.synthetic_dim = d - 1;
                 return build_regression_threshold(rp, seed);
               }});
  r.push_back({"contextual_newsvendor", "newsvendor with demand beta^T z; pipelines ETO-Normal, E2E-Smoothed",
               [](const json& j, Index, Index, std::uint64_t seed) {
                 const Params p(j, {"c", "p", "beta", "noise_sd", "curvature", "smoothing_width"});
                 ContextualParams cp;
                 cp.c = p.number("c", cp.c);
                 cp.p = p.number("p", cp.p);
                 cp.beta = p.vector("beta", cp.beta);
                 cp.noise_sd = p.number("noise_sd", cp.noise_sd);
                 cp.curvature = p.number("curvature", cp.curvature);
                 cp.smoothing_width = p.number("smoothing_width", cp.smoothing_width);
                 return build_contextual_newsvendor(cp, seed);
               }});
  return r;
}

} // namespace

const std::vector<ProblemEntry>& problem_registry() {
  static const std::vector<ProblemEntry> r = make_registry();
  return r;
}

const ProblemEntry& find_problem(const std::string& name) {
  for (const auto& e : problem_registry())
    if (e.name == name) return e;
  throw InvalidArgument("unknown problem '" + name + "'");
}

} // namespace oic
