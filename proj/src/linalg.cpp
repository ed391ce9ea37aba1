#include "oic/linalg.hpp"

#include <cmath>
#include <limits>

namespace oic {

Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

SymmetricInverse symmetric_inverse(const Matrix& a, double condition_cap) {
  SymmetricInverse out;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(a));
  const Vector& lam = es.eigenvalues();
  const double amax = lam.cwiseAbs().maxCoeff();
  const double amin = lam.cwiseAbs().minCoeff();
  out.condition = amin > 0.0 ? amax / amin : std::numeric_limits<double>::infinity();
  out.ok = amax > 0.0 && std::isfinite(out.condition) && out.condition <= condition_cap;
  if (out.ok) {
    out.inverse = es.eigenvectors() * lam.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  }
  return out;
}

Matrix symmetric_pinv(const Matrix& a, double rel_floor) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(a));
  const Vector& lam = es.eigenvalues();
  const double amax = lam.size() ? lam.cwiseAbs().maxCoeff() : 0.0;
  Vector inv = Vector::Zero(lam.size());
  for (Index k = 0; k < lam.size(); ++k) {
    if (amax > 0.0 && std::abs(lam(k)) > rel_floor * amax) inv(k) = 1.0 / lam(k);
  }
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

double condition_number(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a);
  const Vector& s = svd.singularValues();
  if (s.size() == 0) return std::numeric_limits<double>::infinity();
  const double smin = s(s.size() - 1);
  return smin > 0.0 ? s(0) / smin : std::numeric_limits<double>::infinity();
}

Index numerical_rank(const Matrix& a, double rel_tol) {
  if (a.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(a);
  const Vector& s = svd.singularValues();
  Index r = 0;
  for (Index k = 0; k < s.size(); ++k)
    if (s(k) > rel_tol * s(0)) ++r;
  return r;
}

Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& theta,
                   double rel_step) {
  Vector g(theta.size());
  Vector t = theta;
  for (Index k = 0; k < theta.size(); ++k) {
    const double h = rel_step * (1.0 + std::abs(theta(k)));
    t(k) = theta(k) + h;
    const double fp = f(t);
    t(k) = theta(k) - h;
    const double fm = f(t);
    t(k) = theta(k);
    g(k) = (fp - fm) / (2.0 * h);
  }
  return g;
}

Matrix fd_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& theta,
                   double rel_step) {
  const Vector f0 = f(theta);
  Matrix j(f0.size(), theta.size());
  Vector t = theta;
  for (Index k = 0; k < theta.size(); ++k) {
    const double h = rel_step * (1.0 + std::abs(theta(k)));
    t(k) = theta(k) + h;
    const Vector fp = f(t);
    t(k) = theta(k) - h;
    const Vector fm = f(t);
    t(k) = theta(k);
    j.col(k) = (fp - fm) / (2.0 * h);
  }
  return j;
}

Matrix fd_hessian(const std::function<double(const Vector&)>& f, const Vector& theta,
                  double rel_step) {
  const Index d = theta.size();
  Matrix hm(d, d);
  Vector hs(d);
  for (Index k = 0; k < d; ++k) hs(k) = rel_step * (1.0 + std::abs(theta(k)));
  const double f0 = f(theta);
  Vector t = theta;
  for (Index a = 0; a < d; ++a) {
    t(a) = theta(a) + hs(a);
    const double fp = f(t);
    t(a) = theta(a) - hs(a);
    const double fm = f(t);
    t(a) = theta(a);
    hm(a, a) = (fp - 2.0 * f0 + fm) / (hs(a) * hs(a));
    for (Index b = 0; b < a; ++b) {
      double acc = 0.0;
      for (int sa : {1, -1}) {
        for (int sb : {1, -1}) {
          t(a) = theta(a) + sa * hs(a);
          t(b) = theta(b) + sb * hs(b);
          acc += sa * sb * f(t);
        }
      }
      t(a) = theta(a);
      t(b) = theta(b);
      hm(a, b) = hm(b, a) = acc / (4.0 * hs(a) * hs(b));
    }
  }
  return hm;
}

} // namespace oic
