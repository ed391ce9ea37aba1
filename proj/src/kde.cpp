#include "oic/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace oic {

namespace {

// Type-7 sample quantile, used for the IQR.
double quantile7(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

} // namespace

Kde::Kde(Vector data, BandwidthRule) : data_(std::move(data)) {
  const Index n = data_.size();
  if (n < 10) throw InvalidArgument("kde needs at least 10 points");
  const double mean = data_.mean();
  const double sd = std::sqrt((data_.array() - mean).square().sum() / static_cast<double>(n - 1));
  std::vector<double> v(data_.data(), data_.data() + n);
  const double iqr = quantile7(v, 0.75) - quantile7(v, 0.25);
  double spread = sd;
  if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) throw DegenerateSample("zero spread");
  h_ = 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

double Kde::operator()(double x) const {
  const double c = 1.0 / (std::sqrt(2.0 * std::numbers::pi) * h_ * static_cast<double>(data_.size()));
  double s = 0.0;
  for (Index i = 0; i < data_.size(); ++i) {
    const double u = (x - data_(i)) / h_;
    s += std::exp(-0.5 * u * u);
  }
  return c * s;
}

Kde kde(const Vector& data, BandwidthRule rule) { return Kde(data, rule); }

double empirical_quantile(const Vector& data, double q) {
  if (data.size() == 0) throw InvalidArgument("empty sample");
  std::vector<double> v(data.data(), data.data() + data.size());
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  // smallest k with k/n >= q, guarding against rounding in n*q
  auto k = static_cast<std::size_t>(std::ceil(n * q - 1e-9));
  if (k < 1) k = 1;
  if (k > v.size()) k = v.size();
  return v[k - 1];
}

} // namespace oic
