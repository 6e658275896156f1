#include "fracdrift/oracles.hpp"

#include "fracdrift/errors.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace fracdrift::oracle {

Eigen::VectorXd obstacle_by_enumeration(const Eigen::MatrixXd& A, const Eigen::VectorXd& phi,
                                        const Eigen::VectorXd& f, double* residual) {
  const int n = static_cast<int>(A.rows());
  Eigen::VectorXd best;
  double best_r = std::numeric_limits<double>::infinity();
  auto attempt = [&](int lo, int hi) {  // contact set [lo, hi), empty when lo == hi
    const int m = n - (hi - lo);
    Eigen::MatrixXd M(m, m);
    Eigen::VectorXd rhs(m);
    std::vector<int> F;
    for (int i = 0; i < n; ++i)
      if (i < lo || i >= hi) F.push_back(i);
    for (int a = 0; a < m; ++a) {
      rhs(a) = f(F[a]);
      for (int c = lo; c < hi; ++c) rhs(a) -= A(F[a], c) * phi(c);
      for (int b = 0; b < m; ++b) M(a, b) = A(F[a], F[b]);
    }
    Eigen::VectorXd u = phi;
    if (m > 0) {
      Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
      Eigen::VectorXd x = lu.solve(rhs);
      x += lu.solve(rhs - M * x);
      for (int a = 0; a < m; ++a) u(F[a]) = x(a);
    }
    Eigen::VectorXd lam = A * u - f;
    double r = 0.0;
    for (int i = 0; i < n; ++i) r = std::max(r, std::abs(std::min(lam(i), u(i) - phi(i))));
    if (r < best_r) {
      best_r = r;
      best = u;
    }
  };
  attempt(0, 0);
  for (int lo = 0; lo < n; ++lo)
    for (int hi = lo + 1; hi <= n; ++hi) attempt(lo, hi);
  if (residual) *residual = best_r;
  return best;
}

double ball_constant(int n, double s) {
  using boost::math::tgamma;
  return std::pow(4.0, s) * tgamma(1.0 + s) * tgamma(0.5 * n + s) / tgamma(0.5 * n) /
         fourier_normalization_closed(n, s);
}

double rotated_power_by_quadrature(const StableKernel& K, double p, std::array<int, 2> gamma,
                                   std::array<double, 2> e, std::array<double, 2> x) {
  const double s = K.s();
  const int deg = gamma[0] + gamma[1];
  if (K.n() != 2 || deg > 1 || !(deg + p < 2.0 * s) || !(p > 0.0))
    throw Error(Errc::ConfigError, "quadrature oracle needs n = 2, |gamma| <= 1, 0 < p < 2s - |gamma|");
  const double g = x[0] * e[0] + x[1] * e[1];
  if (!(g > 0.0)) throw Error(Errc::ConfigError, "evaluation point outside the half-space");

  auto mono = [&](double y1, double y2) {
    return (gamma[0] ? y1 : 1.0) * (gamma[1] ? y2 : 1.0);
  };
  auto u = [&](double y1, double y2) {
    double t = y1 * e[0] + y2 * e[1];
    return t > 0.0 ? mono(y1, y2) * std::pow(t, p) : 0.0;
  };
  const double u0 = u(x[0], x[1]);
  boost::math::quadrature::tanh_sinh<double> ts(15);
  const double tol = 1e-12;

  auto radial = [&](double th) {
    const double w1 = std::cos(th), w2 = std::sin(th);
    const double c = w1 * e[0] + w2 * e[1];
    auto D = [&](double r) {
      return 2.0 * u0 - u(x[0] + r * w1, x[1] + r * w2) - u(x[0] - r * w1, x[1] - r * w2);
    };
    // Taylor part: f(r) = (A0 + A1 r) (g + c r)^p, D(r) = -2 sum_{k even} f^(k)(0) r^k / k!
    const double A0 = mono(x[0], x[1]);
    const double A1 = deg == 0 ? 0.0 : (gamma[0] ? w1 : w2);
    const double delta = 1e-2 * g;
    double taylor = 0.0;
    auto Bk = [&](int k) {
      double v = std::pow(g, p - k);
      for (int i = 0; i < k; ++i) v *= (p - i) * c;
      return v;
    };
    double fact = 1.0;
    for (int k = 1; k <= 6; ++k) {
      fact *= k;
      if (k % 2) continue;
      double fk = A0 * Bk(k) + k * A1 * Bk(k - 1);
      taylor += -2.0 * fk / fact * std::pow(delta, k - 2.0 * s) / (k - 2.0 * s);
    }
    auto piece = [&](double a, double b) {
      return ts.integrate([&](double r) { return D(r) * std::pow(r, -1.0 - 2.0 * s); }, a, b, tol);
    };
    const double rstar = std::abs(c) > 0.0 ? g / std::abs(c) : std::numeric_limits<double>::infinity();
    double acc = taylor, a = delta;
    const double cap = std::min(rstar, 1e6 * (1.0 + std::hypot(x[0], x[1])));
    while (a < cap) {
      double b = std::min(4.0 * a, cap);
      acc += piece(a, b);
      a = b;
    }
    // tail r = a / t
    acc += ts.integrate(
        [&](double t) {
          double r = a / t;
          if (!(t > 0.0) || !(r < 1e100)) return 0.0;
          return D(r) * std::pow(t, 2.0 * s - 1.0) * std::pow(a, -2.0 * s);
        },
        0.0, 1.0, tol);
    return K(w1, w2) * acc;
  };

  // split the angular integral where the ray runs parallel to the boundary
  double th0 = std::atan2(e[1], e[0]) + 0.5 * M_PI;
  th0 = std::fmod(th0, M_PI);
  if (th0 < 0.0) th0 += M_PI;
  double total = 0.0;
  if (th0 > 0.0) total += ts.integrate(radial, 0.0, th0, 1e-10);
  if (th0 < M_PI) total += ts.integrate(radial, th0, M_PI, 1e-10);
  return total;
}

}  // namespace fracdrift::oracle
