#include "oic/baselines.hpp"

#include <cstdio>
#include <numeric>

namespace oic {

namespace {

FittedPolicy fit_or_throw(const Pipeline& p, const Dataset& d, const char* what, Index idx) {
  try {
    return p.fit(d);
  } catch (const Error& e) {
    throw FitFailure(std::string(what) + " " + std::to_string(idx) + ": " + e.what());
  }
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

} // namespace

std::vector<std::vector<Index>> fold_assignment(Index n, Index k, std::uint64_t seed) {
  if (k < 2 || k > n) throw InvalidArgument("fold count must lie in [2, n]");
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  RngStream rng(seed);
  for (Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Index>(rng.index(static_cast<std::uint64_t>(i + 1)));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  std::vector<std::vector<Index>> folds(static_cast<std::size_t>(k));
  const Index base = n / k, extra = n % k;
  Index pos = 0;
  for (Index f = 0; f < k; ++f) {
    const Index size = base + (f < extra ? 1 : 0);
    folds[static_cast<std::size_t>(f)].assign(perm.begin() + pos, perm.begin() + pos + size);
    pos += size;
  }
  return folds;
}

CrossValidation kfold_detail(const Pipeline& pipeline, const Dataset& data, Index k, std::uint64_t seed) {
  const Index n = data.n();
  const auto folds = fold_assignment(n, k, seed);
  CrossValidation out;
  out.held_out.assign(static_cast<std::size_t>(n), 0.0);
  std::vector<char> in_fold(static_cast<std::size_t>(n));
  for (Index f = 0; f < k; ++f) {
    const auto& fold = folds[static_cast<std::size_t>(f)];
    std::fill(in_fold.begin(), in_fold.end(), 0);
    for (Index i : fold) in_fold[static_cast<std::size_t>(i)] = 1;
    std::vector<Index> train;
    for (Index i = 0; i < n; ++i)
      if (!in_fold[static_cast<std::size_t>(i)]) train.push_back(i);
    const FittedPolicy p = fit_or_throw(pipeline, data.subset(train), "fold", f);
    const auto h = per_sample_costs(p, pipeline.cost, data);
    for (Index i : fold) out.held_out[static_cast<std::size_t>(i)] = h[static_cast<std::size_t>(i)];
    out.full_sample.push_back(mean_of(h));
  }
  out.estimate = mean_of(out.held_out);
  return out;
}

double kfold_cv(const Pipeline& pipeline, const Dataset& data, Index k, std::uint64_t seed) {
  return kfold_detail(pipeline, data, k, seed).estimate;
}

double loocv(const Pipeline& pipeline, const Dataset& data) {
  const Index n = data.n();
  if (n > 5000) std::fprintf(stderr, "warning: loocv with n=%ld refits\n", static_cast<long>(n));
  std::vector<double> held(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const FittedPolicy p = fit_or_throw(pipeline, data.without(i), "row", i);
    held[static_cast<std::size_t>(i)] = pipeline.cost.value(p.decide(data.z(i)), data.xi(i));
    if (!std::isfinite(held[static_cast<std::size_t>(i)])) throw NonFiniteCost("row " + std::to_string(i));
  }
  return mean_of(held);
}

double bc_kfold_cv(const Pipeline& pipeline, const Dataset& data, Index k, std::uint64_t seed) {
  const auto cv = kfold_detail(pipeline, data, k, seed);
  const FittedPolicy full = fit_or_throw(pipeline, data, "full fit", 0);
  const double a_o = evaluate_empirical(full, pipeline.cost, data);
  return cv.estimate + a_o - mean_of(cv.full_sample);
}

BootstrapResult bootstrap_debias(const Pipeline& pipeline, const Dataset& data, Index b, std::uint64_t seed) {
  if (b < 1) throw InvalidArgument("bootstrap needs at least one replicate");
  const Index n = data.n();
  const FittedPolicy full = fit_or_throw(pipeline, data, "full fit", 0);
  const double a_o = evaluate_empirical(full, pipeline.cost, data);
  BootstrapResult out;
  for (Index r = 0; r < b; ++r) {
    RngStream rng = rng_stream(seed, "boot", r);
    std::vector<Index> rows(static_cast<std::size_t>(n));
    for (auto& i : rows) i = static_cast<Index>(rng.index(static_cast<std::uint64_t>(n)));
    const Dataset boot = data.subset(rows);
    const FittedPolicy p = fit_or_throw(pipeline, boot, "replicate", r);
    out.replicates.push_back(evaluate_empirical(p, pipeline.cost, boot));
  }
  out.estimate = 2.0 * a_o - mean_of(out.replicates);
  return out;
}

double jackknife_debias(const Pipeline& pipeline, const Dataset& data) {
  const Index n = data.n();
  const FittedPolicy full = fit_or_throw(pipeline, data, "full fit", 0);
  const double a_o = evaluate_empirical(full, pipeline.cost, data);
  double s = 0.0;
  for (Index k = 0; k < n; ++k) {
    const Dataset d = data.without(k);
    const FittedPolicy p = fit_or_throw(pipeline, d, "row", k);
    s += evaluate_empirical(p, pipeline.cost, d);
  }
  const double nd = static_cast<double>(n);
  return nd * a_o - (nd - 1.0) / nd * s;
}

} // namespace oic
