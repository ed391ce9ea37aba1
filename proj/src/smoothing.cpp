#include "oic/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace oic {

Kernel epanechnikov() {
  return Kernel{[](double v) { return std::abs(v) < 1.0 ? 0.75 * (1.0 - v * v) : 0.0; }};
}

PiecewiseLink newsvendor_link(double c, double p) {
  PiecewiseLink f;
  f.value = [c, p](double z) { return z > 0.0 ? c * z : (p - c) * (-z); };
  f.d1 = [c, p](double z) { return z > 0.0 ? c : c - p; };
  f.d2 = [](double) { return 0.0; };
  f.kinks = {0.0};
  return f;
}

SmoothedLink::SmoothedLink(PiecewiseLink f, Kernel phi, double m, double scale)
    : f_(std::move(f)), phi_(std::move(phi)), h_(scale / m) {
  if (!(m > 0.0) || !(scale > 0.0)) throw InvalidArgument("smoothing requires m > 0 and scale > 0");
  for (double u : f_.kinks) {
    const double e = 1e-9 * (1.0 + std::abs(u));
    jumps_.push_back(f_.d1(u + e) - f_.d1(u - e));
  }
}

// integral over v in [-1, 1] of g(z - h v) phi(v), split where z - h v hits a kink.
template <class F>
double SmoothedLink::integrate(double z, F&& g) const {
  std::vector<double> cuts{-1.0, 1.0};
  for (double u : f_.kinks) {
    const double v = (z - u) / h_;
    if (v > -1.0 && v < 1.0) cuts.push_back(v);
  }
  std::sort(cuts.begin(), cuts.end());
  constexpr int intervals = 200;  // 201 nodes per piece
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double a = cuts[k], b = cuts[k + 1];
    if (b - a <= 0.0) continue;
    const double step = (b - a) / intervals;
    // Evaluate slightly inside each piece so one-sided formulas apply at the ends.
    auto at = [&](int i) {
      double v = a + i * step;
      if (i == 0) v = a + 1e-12 * (b - a);
      if (i == intervals) v = b - 1e-12 * (b - a);
      return g(z - h_ * v) * phi_.value(v);
    };
    double s = at(0) + at(intervals);
    for (int i = 1; i < intervals; ++i) s += (i % 2 ? 4.0 : 2.0) * at(i);
    total += s * step / 3.0;
  }
  return total;
}

double SmoothedLink::value(double z) const { return integrate(z, f_.value); }

double SmoothedLink::d1(double z) const { return integrate(z, f_.d1); }

double SmoothedLink::d2(double z) const {
  double v = integrate(z, f_.d2);
  for (std::size_t k = 0; k < f_.kinks.size(); ++k)
    v += jumps_[k] * phi_.value((z - f_.kinks[k]) / h_) / h_;
  return v;
}

Cost smooth_cost(const PiecewiseLink& f, const Kernel& phi, double m, const InnerMap& g, double scale) {
  const auto link = std::make_shared<SmoothedLink>(f, phi, m, scale);
  Cost c;
  c.smoothness = Smoothness::Smooth;
  c.value = [link, g](const Vector& x, const Vector& xi) { return link->value(g.value(x, xi)); };
  c.grad_x = [link, g](const Vector& x, const Vector& xi) {
    return (link->d1(g.value(x, xi)) * g.grad_x(x, xi)).eval();
  };
  c.hess_x = [link, g](const Vector& x, const Vector& xi) {
    const double z = g.value(x, xi);
    const Vector gx = g.grad_x(x, xi);
    Matrix h = link->d2(z) * gx * gx.transpose();
    if (g.hess_x) h += link->d1(z) * g.hess_x(x, xi);
    return h;
  };
  return c;
}

} // namespace oic
