#include "oic/problems.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace oic {

namespace {

std::string trim(std::string s) {
  auto keep = [](unsigned char ch) { return !std::isspace(ch) && ch != '"' && ch != '\''; };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), keep));
  s.erase(std::find_if(s.rbegin(), s.rend(), keep).base(), s.end());
  return s;
}

std::string lower(std::string s) {
  for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, sep)) out.push_back(trim(cell));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_number(const std::string& s, std::size_t line) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v))
    throw InvalidDataset("line " + std::to_string(line) + ": cannot parse '" + s + "'");
  return v;
}

Index feature_count(Index du, int degree) {
  Index k = 1 + du;
  if (degree >= 2) k += du * (du + 1) / 2;
  if (degree >= 3) k += du;
  return k;
}

// Least squares with ridge penalty alpha/n on every coefficient but the intercept.
Vector penalty_vector(Index k, double alpha, Index n) {
  Vector l = Vector::Constant(k, alpha / static_cast<double>(n));
  l(0) = 0.0;
  return l;
}

Matrix design(const Dataset& d, Index du, int degree) {
  Matrix x(d.n(), feature_count(du, degree));
  for (Index i = 0; i < d.n(); ++i)
    x.row(i) = polynomial_features(d.samples().row(i).head(du).transpose(), degree).transpose();
  return x;
}

// Stratified sample of m of the N pool rows, proportional allocation per group.
std::vector<Index> stratified_rows(const std::vector<int>& group, Index m, RngStream& rng) {
  const Index total = static_cast<Index>(group.size());
  if (m < 2 || m >= total) throw InvalidArgument("training size must lie in [2, pool size)");
  std::vector<int> labels(group);
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  std::vector<Index> out;
  Index assigned = 0;
  for (std::size_t g = 0; g < labels.size(); ++g) {
    std::vector<Index> rows;
    for (Index i = 0; i < total; ++i)
      if (group[static_cast<std::size_t>(i)] == labels[g]) rows.push_back(i);
    const Index size = static_cast<Index>(rows.size());
    Index take = g + 1 == labels.size()
                     ? m - assigned
                     : static_cast<Index>(std::llround(static_cast<double>(m) * size / static_cast<double>(total)));
    take = std::clamp<Index>(take, 0, size);
    for (Index k = 0; k < take; ++k) {
      const Index j = k + static_cast<Index>(rng.index(static_cast<std::uint64_t>(size - k)));
      std::swap(rows[static_cast<std::size_t>(k)], rows[static_cast<std::size_t>(j)]);
    }
    out.insert(out.end(), rows.begin(), rows.begin() + take);
    assigned += take;
  }
  std::sort(out.begin(), out.end());
  return out;
}

} // namespace

RegressionData load_wine_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw InvalidDataset("empty file " + path);
  const auto header = split(line, ';');
  Index quality = -1, type = -1;
  for (std::size_t k = 0; k < header.size(); ++k) {
    const auto h = lower(header[k]);
    if (h == "quality") quality = static_cast<Index>(k);
    if (h == "type") type = static_cast<Index>(k);
  }
  if (quality < 0) throw InvalidDataset("no 'quality' column in " + path);
  std::vector<std::vector<double>> feats;
  std::vector<double> label;
  std::vector<int> group;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto cells = split(line, ';');
    if (cells.size() != header.size())
      throw InvalidDataset("line " + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                           " fields");
    std::vector<double> row;
    int g = 0;
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (static_cast<Index>(k) == quality) {
        label.push_back(parse_number(cells[k], lineno));
      } else if (static_cast<Index>(k) == type) {
        const auto t = lower(cells[k]);
        if (t == "red") g = 0;
        else if (t == "white") g = 1;
        else g = static_cast<int>(parse_number(cells[k], lineno));
        row.push_back(static_cast<double>(g));
      } else {
        row.push_back(parse_number(cells[k], lineno));
      }
    }
    feats.push_back(std::move(row));
    if (type >= 0) group.push_back(g);
  }
  if (feats.size() < 2) throw InvalidDataset("fewer than two rows in " + path);
  RegressionData out;
  out.u = Matrix(static_cast<Index>(feats.size()), static_cast<Index>(feats.front().size()));
  out.v = Vector(static_cast<Index>(label.size()));
  for (std::size_t i = 0; i < feats.size(); ++i) {
    for (std::size_t k = 0; k < feats[i].size(); ++k)
      out.u(static_cast<Index>(i), static_cast<Index>(k)) = feats[i][k];
    out.v(static_cast<Index>(i)) = label[i];
  }
  out.group = std::move(group);
  return out;
}

Vector polynomial_features(const Vector& u, int degree) {
  if (degree < 1 || degree > 3) throw InvalidArgument("degree must be 1, 2 or 3");
  const Index du = u.size();
  Vector f(feature_count(du, degree));
  Index k = 0;
  f(k++) = 1.0;
  for (Index j = 0; j < du; ++j) f(k++) = u(j);
  if (degree >= 2)
    for (Index j = 0; j < du; ++j)
      for (Index l = j; l < du; ++l) f(k++) = u(j) * u(l);
  if (degree >= 3)
    for (Index j = 0; j < du; ++j) f(k++) = u(j) * u(j) * u(j);
  return f;
}

Cost threshold_cost(int degree, double beta) {
  if (!(beta > 0.0)) throw InvalidArgument("beta must be positive");
  auto parts = [degree](const Vector& x, const Vector& xi) {
    const Index du = xi.size() - 1;
    const Vector phi = polynomial_features(xi.head(du), degree);
    return std::pair<Vector, double>(phi, xi(du) - x.dot(phi));
  };
  Cost c;
  c.value = [parts, beta](const Vector& x, const Vector& xi) {
    const double r = parts(x, xi).second;
    return std::max(r * r - beta, 0.0);
  };
  c.grad_x = [parts, beta](const Vector& x, const Vector& xi) {
    const auto [phi, r] = parts(x, xi);
    const double s = r * r > beta ? 1.0 : (r * r == beta ? 0.5 : 0.0);
    return (-2.0 * s * r * phi).eval();
  };
  c.hess_x = [parts, beta](const Vector& x, const Vector& xi) {
    const auto [phi, r] = parts(x, xi);
    const double s = r * r > beta ? 1.0 : (r * r == beta ? 0.5 : 0.0);
    return (2.0 * s * phi * phi.transpose()).eval();
  };
  c.smoothness = Smoothness::PiecewiseWithConvention;
  c.subgradient_convention = "half the active-branch derivative at r^2 == beta";
  return c;
}

Cost fairness_cost(int degree, const Vector& theta0, double beta) {
  struct Branches {
    Vector phi;
    double a, b, pa, pb;  // branch values and residuals
  };
  auto eval = [degree, theta0, beta](const Vector& x, const Vector& xi) {
    const Index du = xi.size() - 1;
    Branches br;
    br.phi = polynomial_features(xi.head(du), degree);
    if (theta0.size() != br.phi.size()) throw InvalidArgument("theta0 dimension differs from the feature map");
    br.pa = x.dot(br.phi) - theta0.dot(br.phi);
    br.pb = x.dot(br.phi) - xi(du);
    br.a = br.pa * br.pa;
    br.b = br.pb * br.pb - beta;
    return br;
  };
  Cost c;
  c.value = [eval](const Vector& x, const Vector& xi) {
    const auto br = eval(x, xi);
    return std::max(br.a, br.b);
  };
  c.grad_x = [eval](const Vector& x, const Vector& xi) {
    const auto br = eval(x, xi);
    const double r = br.a > br.b ? br.pa : (br.b > br.a ? br.pb : 0.5 * (br.pa + br.pb));
    return (2.0 * r * br.phi).eval();
  };
  c.hess_x = [eval](const Vector& x, const Vector& xi) {
    const auto br = eval(x, xi);
    return (2.0 * br.phi * br.phi.transpose()).eval();
  };
  c.smoothness = Smoothness::PiecewiseWithConvention;
  c.subgradient_convention = "average of the branch gradients at ties";
  return c;
}

ProblemInstance build_regression_threshold(const RegressionParams& rp, std::uint64_t seed) {
  if (!(rp.beta > 0.0)) throw InvalidArgument("beta must be positive");
  ProblemInstance inst;
  inst.name = "regression_threshold";
  inst.params = {{"beta", rp.beta}, {"train_fraction", rp.train_fraction}};
  Index du = 0;

  if (rp.csv_path) {
    RegressionData raw = load_wine_csv(*rp.csv_path);
    du = raw.u.cols();
    const Vector mean = raw.u.colwise().mean().transpose();
    Vector sd = ((raw.u.rowwise() - mean.transpose()).array().square().colwise().mean()).sqrt().transpose();
    for (Index k = 0; k < du; ++k)
      if (!(sd(k) > 0.0)) sd(k) = 1.0;
    Matrix pool(raw.u.rows(), du + 1);
    pool.leftCols(du) = (raw.u.rowwise() - mean.transpose()).array().rowwise() / sd.transpose().array();
    pool.col(du) = raw.v;
    std::vector<int> group = raw.group.empty() ? std::vector<int>(static_cast<std::size_t>(pool.rows()), 0)
                                               : raw.group;
    inst.params["pool_size"] = static_cast<double>(pool.rows());
    const Index label = du;
    inst.dgp = [pool, group, label](RngStream& rng, Index m) {
      const auto rows = stratified_rows(group, m, rng);
      Matrix s(static_cast<Index>(rows.size()), pool.cols());
      for (std::size_t i = 0; i < rows.size(); ++i) s.row(static_cast<Index>(i)) = pool.row(rows[i]);
      return Dataset(std::move(s), std::nullopt, label);
    };
    inst.oracle = [pool, group](const FittedPolicy& f, const CostModel& cost, const Dataset& train,
                                std::uint64_t data_seed, std::uint64_t, Index) {
      RngStream rng(data_seed);
      const auto rows = stratified_rows(group, train.n(), rng);
      std::vector<char> in_train(static_cast<std::size_t>(pool.rows()), 0);
      for (Index r : rows) in_train[static_cast<std::size_t>(r)] = 1;
      const Vector x = f.decide();
      std::vector<double> h;
      for (Index i = 0; i < pool.rows(); ++i)
        if (!in_train[static_cast<std::size_t>(i)]) h.push_back(cost.value(x, pool.row(i).transpose()));
      return mean_stderr(h);
    };
  } else {
    du = rp.synthetic_dim;
    if (du < 3) throw InvalidArgument("synthetic_dim must be at least 3");
    RngStream coef = rng_stream(seed, "regression", "truth");
    Vector w(du);
    for (Index k = 0; k < du; ++k) w(k) = coef.uniform(-1.0, 1.0);
    const Index label = du;
    inst.dgp = [w, du, label](RngStream& rng, Index m) {
      Matrix s(m, du + 1);
      for (Index i = 0; i < m; ++i) {
        for (Index k = 0; k < du; ++k) s(i, k) = rng.normal();
        const auto u = s.row(i).head(du);
        s(i, du) = 5.0 + u.dot(w.transpose()) + 0.5 * u(0) * u(0) - 0.4 * u(1) * u(2) + rng.normal(0.0, 0.8);
      }
      return Dataset(std::move(s), std::nullopt, label);
    };
    inst.oracle = monte_carlo_oracle(inst.dgp);
  }
  inst.dim_xi = du + 1;
  inst.params["d_u"] = static_cast<double>(du);

  auto make = [&](const std::string& label, int degree, double alpha) {
    const Index k = feature_count(du, degree);
    const DecisionRule rule = DecisionRule::identity(k);
    const CostModel model = compose(threshold_cost(degree, rp.beta), rule);
    ProblemPipeline p;
    p.pipeline.label = label;
    p.pipeline.cost = model;
    p.pipeline.fit = [rule, du, degree, alpha, k](const Dataset& d) {
      const Matrix x = design(d, du, degree);
      const Vector v = d.samples().col(du);
      const double n = static_cast<double>(d.n());
      const Matrix a = x.transpose() * x / n + Matrix(penalty_vector(k, alpha, d.n()).asDiagonal());
      const Eigen::LDLT<Matrix> ldlt(a);
      if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-14) throw SingularDesign("normal equations");
      FittedPolicy f;
      f.theta_hat = ldlt.solve(x.transpose() * v / n);
      f.rule = rule;
      f.fit_method = alpha > 0.0 ? FitMethod::RE2E : FitMethod::E2E;
      return f;
    };
    p.influence = [du, degree, alpha, k](const FittedPolicy& f, const Dataset& d) {
      return if_ols(design(d, du, degree), d.samples().col(du), f.theta_hat, penalty_vector(k, alpha, d.n()));
    };
    return p;
  };
  inst.pipelines.push_back(make("Linear", 1, 0.0));
  inst.pipelines.push_back(make("Linear-R1", 1, rp.alpha_linear_r));
  inst.pipelines.push_back(make("Quad", 2, 0.0));
  inst.pipelines.push_back(make("Quad-R", 2, rp.alpha_quad_r));
  inst.pipelines.push_back(make("Cubic-R", 3, rp.alpha_cubic));
  return inst;
}

} // namespace oic
