#include "oic/core.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace oic {

namespace {

void check_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw InvalidDataset(std::string(what) + " contains non-finite entries");
}

} // namespace

Dataset::Dataset(Matrix samples, std::optional<Matrix> covariates, std::optional<Index> label)
    : samples_(std::move(samples)), covariates_(std::move(covariates)), label_(label) {
  if (samples_.rows() < 2) throw InvalidDataset("need at least 2 rows");
  if (samples_.cols() < 1) throw InvalidDataset("need at least 1 sample column");
  check_finite(samples_, "samples");
  if (covariates_) {
    if (covariates_->rows() != samples_.rows())
      throw InvalidDataset("covariate rows differ from sample rows");
    check_finite(*covariates_, "covariates");
  }
  if (label_ && (*label_ < 0 || *label_ >= samples_.cols()))
    throw InvalidDataset("label column out of range");
}

const Matrix& Dataset::covariates() const {
  if (!covariates_) throw MissingCovariates("dataset has no covariates");
  return *covariates_;
}

Vector Dataset::z(Index i) const {
  if (!covariates_) return Vector();
  return covariates_->row(i).transpose();
}

Dataset Dataset::subset(const std::vector<Index>& rows) const {
  Matrix s(static_cast<Index>(rows.size()), samples_.cols());
  std::optional<Matrix> c;
  if (covariates_) c = Matrix(static_cast<Index>(rows.size()), covariates_->cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    s.row(static_cast<Index>(k)) = samples_.row(rows[k]);
    if (c) c->row(static_cast<Index>(k)) = covariates_->row(rows[k]);
  }
  return Dataset(std::move(s), std::move(c), label_);
}

Dataset Dataset::without(Index row) const {
  std::vector<Index> rows;
  rows.reserve(static_cast<std::size_t>(n() - 1));
  for (Index i = 0; i < n(); ++i)
    if (i != row) rows.push_back(i);
  return subset(rows);
}

Dataset Dataset::load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw InvalidDataset("empty file " + path);
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
      while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
      out.push_back(cell);
    }
    return out;
  };
  const auto header = split(line);
  std::vector<int> xi_col, z_col;
  int y_col = -1;
  for (std::size_t k = 0; k < header.size(); ++k) {
    const auto& h = header[k];
    if (h.rfind("xi_", 0) == 0) xi_col.push_back(static_cast<int>(k));
    else if (h.rfind("z_", 0) == 0) z_col.push_back(static_cast<int>(k));
    else if (h == "y") y_col = static_cast<int>(k);
    else throw InvalidDataset("unknown column '" + h + "'");
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) throw InvalidDataset("ragged row in " + path);
    std::vector<double> v(cells.size());
    for (std::size_t k = 0; k < cells.size(); ++k) {
      const auto& c = cells[k];
      auto [p, ec] = std::from_chars(c.data(), c.data() + c.size(), v[k]);
      if (ec != std::errc() || p != c.data() + c.size())
        throw InvalidDataset("cannot parse '" + c + "'");
    }
    rows.push_back(std::move(v));
  }
  const Index n = static_cast<Index>(rows.size());
  const Index dx = static_cast<Index>(xi_col.size()) + (y_col >= 0 ? 1 : 0);
  Matrix s(n, dx);
  std::optional<Matrix> c;
  if (!z_col.empty()) c = Matrix(n, static_cast<Index>(z_col.size()));
  for (Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    for (std::size_t k = 0; k < xi_col.size(); ++k) s(i, static_cast<Index>(k)) = r[xi_col[k]];
    if (y_col >= 0) s(i, dx - 1) = r[y_col];
    for (std::size_t k = 0; k < z_col.size(); ++k) (*c)(i, static_cast<Index>(k)) = r[z_col[k]];
  }
  std::optional<Index> label;
  if (y_col >= 0) label = dx - 1;
  return Dataset(std::move(s), std::move(c), label);
}

DecisionRule DecisionRule::identity(Index dim) {
  DecisionRule r;
  r.dim_theta = dim;
  r.dim_x = dim;
  r.decide = [](const Vector& t, const Vector&) { return t; };
  r.jacobian = [dim](const Vector&, const Vector&) { return Matrix::Identity(dim, dim).eval(); };
  return r;
}

DecisionRule DecisionRule::linear(const Matrix& b) {
  DecisionRule r;
  r.dim_theta = b.cols();
  r.dim_x = b.rows();
  r.decide = [b](const Vector& t, const Vector&) { return (b * t).eval(); };
  r.jacobian = [b](const Vector&, const Vector&) { return b; };
  return r;
}

CostModel compose(const Cost& cost, const DecisionRule& rule) {
  CostModel m;
  m.value = cost.value;
  m.smoothness = cost.smoothness;
  m.subgradient_convention = cost.subgradient_convention;
  m.grad_theta = [cost, rule](const Vector& t, const Vector& xi, const Vector& z) {
    const Vector x = rule.decide(t, z);
    return (rule.jacobian(t, z).transpose() * cost.grad_x(x, xi)).eval();
  };
  m.hess_theta = [cost, rule](const Vector& t, const Vector& xi, const Vector& z) {
    const Vector x = rule.decide(t, z);
    const Matrix j = rule.jacobian(t, z);
    Matrix h = j.transpose() * cost.hess_x(x, xi) * j;
    if (rule.second_derivatives) {
      const Vector g = cost.grad_x(x, xi);
      const auto d2 = rule.second_derivatives(t, z);
      for (Index k = 0; k < g.size(); ++k) h += g(k) * d2[static_cast<std::size_t>(k)];
    }
    return symmetrize(h);
  };
  return m;
}

std::string to_string(FitMethod m) {
  switch (m) {
  case FitMethod::ETO: return "ETO";
  case FitMethod::IEO: return "IEO";
  case FitMethod::E2E: return "E2E";
  case FitMethod::RE2E: return "RE2E";
  case FitMethod::DRE2E: return "DRE2E";
  case FitMethod::Constrained: return "Constrained";
  case FitMethod::Fixed: return "Fixed";
  }
  return "?";
}

EvaluationReport EvaluationReport::make(double a_o, double a_c, std::string method, Index n) {
  EvaluationReport r;
  r.a_o = a_o;
  r.a_c = a_c;
  r.a_hat = a_o + a_c;
  r.method = std::move(method);
  r.n = n;
  return r;
}

Estimate mean_stderr(const std::vector<double>& v) {
  Estimate e;
  if (v.empty()) return e;
  double s = 0.0;
  for (double x : v) s += x;
  e.mean = s / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - e.mean) * (x - e.mean);
    e.se = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  }
  return e;
}

std::vector<double> per_sample_costs_at(const Vector& theta, const DecisionRule& rule,
                                        const CostModel& cost, const Dataset& data) {
  std::vector<double> out(static_cast<std::size_t>(data.n()));
  const bool ctx = data.has_covariates();
  const Vector x0 = ctx ? Vector() : rule.decide(theta, Vector());
  for (Index i = 0; i < data.n(); ++i) {
    const double h = ctx ? cost.value(rule.decide(theta, data.z(i)), data.xi(i))
                         : cost.value(x0, data.xi(i));
    if (!std::isfinite(h)) throw NonFiniteCost("row " + std::to_string(i));
    out[static_cast<std::size_t>(i)] = h;
  }
  return out;
}

std::vector<double> per_sample_costs(const FittedPolicy& policy, const CostModel& cost,
                                     const Dataset& data) {
  return per_sample_costs_at(policy.theta_hat, policy.rule, cost, data);
}

double evaluate_empirical(const FittedPolicy& policy, const CostModel& cost, const Dataset& data) {
  const auto h = per_sample_costs(policy, cost, data);
  double s = 0.0;
  for (double v : h) s += v;
  return s / static_cast<double>(h.size());
}

Estimate oracle_true_performance(const FittedPolicy& policy, const CostModel& cost,
                                 const Generator& generator, Index m, std::uint64_t seed) {
  constexpr Index block = 10000;
  double sum = 0.0, sumsq = 0.0;
  Index done = 0;
  for (Index b = 0; done < m; ++b) {
    const Index k = std::min(block, m - done);
    RngStream rng = rng_stream(seed, "block", b);
    const Dataset d = generator(rng, std::max<Index>(k, 2));
    const auto h = per_sample_costs(policy, cost, d);
    for (Index i = 0; i < k; ++i) {
      const double v = h[static_cast<std::size_t>(i)];
      sum += v;
      sumsq += v * v;
    }
    done += k;
  }
  Estimate e;
  const double md = static_cast<double>(m);
  e.mean = sum / md;
  const double var = m > 1 ? std::max(0.0, (sumsq - md * e.mean * e.mean) / (md - 1.0)) : 0.0;
  e.se = std::sqrt(var / md);
  return e;
}

BiasStudy oracle_expected_bias(const Pipeline& pipeline, const Generator& generator,
                               const Oracle& oracle, Index n, Index replications,
                               std::uint64_t seed) {
  if (replications < 1) throw InvalidArgument("replications must be positive");
  BiasStudy out;
  for (Index r = 0; r < replications; ++r) {
    RngStream rng = rng_stream(seed, "rep", r);
    const Dataset data = generator(rng, n);
    try {
      const FittedPolicy policy = pipeline.fit(data);
      const double a_o = evaluate_empirical(policy, pipeline.cost, data);
      const Estimate a = oracle(policy, derive_seed(seed, "oracle", r));
      out.per_replication.push_back(a.mean - a_o);
    } catch (const Error&) {
      out.failed.push_back(r);
    }
  }
  if (static_cast<double>(out.failed.size()) > 0.05 * static_cast<double>(replications))
    throw FitFailure(std::to_string(out.failed.size()) + " of " + std::to_string(replications) +
                     " replications failed");
  out.bias = mean_stderr(out.per_replication);
  return out;
}

BiasStudy oracle_expected_bias(const Pipeline& pipeline, const Generator& generator, Index n,
                               Index replications, Index m, std::uint64_t seed) {
  const CostModel cost = pipeline.cost;
  Oracle oracle = [cost, generator, m](const FittedPolicy& p, std::uint64_t s) {
    return oracle_true_performance(p, cost, generator, m, s);
  };
  return oracle_expected_bias(pipeline, generator, oracle, n, replications, seed);
}

} // namespace oic
