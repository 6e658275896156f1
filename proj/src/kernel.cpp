#include "fracdrift/kernel.hpp"

#include "fracdrift/errors.hpp"
#include "fracdrift/quadrature.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>

namespace fracdrift {

StableKernel::StableKernel(double s, int n, std::vector<double> coeffs, double phase,
                           bool normalized)
    : s_(s), n_(n), coeffs_(std::move(coeffs)), phase_(phase), normalized_(normalized) {
  if (!(s > 0.0 && s < 1.0)) throw Error(Errc::ConfigError, "kernel.s must lie in (0,1)");
  if (n != 1 && n != 2) throw Error(Errc::ConfigError, "kernel.n must be 1 or 2");
  if (coeffs_.empty()) throw Error(Errc::ConfigError, "kernel.angular.coeffs is empty");
  if (normalized_) scale_ = fourier_normalization(n, s);
  measure_bounds();
  if (!(lambda_ > 0.0)) throw Error(Errc::ConfigError, "angular density must be positive");
}

StableKernel StableKernel::fractional_laplacian(double s, int n, bool normalized) {
  return StableKernel(s, n, {1.0}, 0.0, normalized);
}

bool StableKernel::isotropic() const {
  for (std::size_t k = 1; k < coeffs_.size(); ++k)
    if (coeffs_[k] != 0.0) return false;
  return true;
}

double StableKernel::angular(double theta) const {
  if (n_ == 1) theta = 0.0;
  double a = coeffs_[0];
  for (std::size_t k = 1; k < coeffs_.size(); ++k)
    a += coeffs_[k] * std::cos(2.0 * k * (theta - phase_));
  return scale_ * a;
}

double StableKernel::angular_dir(double c, double sn) const {
  if (n_ == 1) return angular(0.0);
  if (coeffs_.size() == 1) return scale_ * coeffs_[0];
  // cos(2k(theta-phase)) = Re[(e^{i theta} e^{-i phase})^{2k}]
  double cr = c * std::cos(phase_) + sn * std::sin(phase_);
  double ci = sn * std::cos(phase_) - c * std::sin(phase_);
  double z2r = cr * cr - ci * ci, z2i = 2.0 * cr * ci;
  double pr = 1.0, pi = 0.0, a = coeffs_[0];
  for (std::size_t k = 1; k < coeffs_.size(); ++k) {
    double nr = pr * z2r - pi * z2i;
    pi = pr * z2i + pi * z2r;
    pr = nr;
    a += coeffs_[k] * pr;
  }
  return scale_ * a;
}

double StableKernel::operator()(double y) const {
  if (y == 0.0) throw Error(Errc::SingularPoint, "kernel evaluated at y = 0");
  return angular(0.0) * std::pow(std::abs(y), -1.0 - 2.0 * s_);
}

double StableKernel::operator()(double y1, double y2) const {
  double r = std::hypot(y1, y2);
  if (r == 0.0) throw Error(Errc::SingularPoint, "kernel evaluated at y = 0");
  if (n_ == 1) return (*this)(y1);
  return angular_dir(y1 / r, y2 / r) * std::pow(r, -2.0 - 2.0 * s_);
}

StableKernel StableKernel::composed(double psi, bool reflect) const {
  StableKernel k = *this;
  k.phase_ = reflect ? psi - phase_ : phase_ - psi;
  return k;
}

void StableKernel::measure_bounds() {
  if (n_ == 1) {
    lambda_ = Lambda_ = angular(0.0);
    return;
  }
  lambda_ = 1e300;
  Lambda_ = -1e300;
  const int M = 4096;
  for (int i = 0; i < M; ++i) {
    double a = angular(M_PI * i / M);
    lambda_ = std::min(lambda_, a);
    Lambda_ = std::max(Lambda_, a);
  }
}

double fourier_normalization(int n, double s) {
  // Test function exp(-|x|^2) at the origin. Raw operator value and
  // Fourier-side value, both as radial integrals.
  boost::math::quadrature::exp_sinh<double> es;
  auto raw_integrand = [s](double r) {
    if (r < 1e-8) return std::pow(r, 1.0 - 2.0 * s);
    return -std::expm1(-r * r) * std::pow(r, -1.0 - 2.0 * s);
  };
  double raw = tanh_sinh(raw_integrand, 0.0, 1.0, 1e-14) + es.integrate(raw_integrand, 1.0, HUGE_VAL);
  auto four_integrand = [s, n](double r) {
    if (r > 100.0) return 0.0;
    return std::pow(r, 2.0 * s + n - 1.0) * std::exp(-0.25 * r * r);
  };
  double four = tanh_sinh(four_integrand, 0.0, 1.0, 1e-14) + es.integrate(four_integrand, 1.0, HUGE_VAL);
  double sphere = (n == 1) ? 2.0 : 2.0 * M_PI;
  double fourier_value = std::pow(2.0 * M_PI, -n) * std::pow(M_PI, 0.5 * n) * sphere * four;
  return fourier_value / (sphere * raw);
}

double fourier_normalization_closed(int n, double s) {
  return std::pow(4.0, s) * boost::math::tgamma(0.5 * n + s) /
         (std::pow(M_PI, 0.5 * n) * std::abs(boost::math::tgamma(-s)));
}

}  // namespace fracdrift
