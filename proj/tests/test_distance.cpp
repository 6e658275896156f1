#include <doctest.h>

#include "fracdrift/distance.hpp"
#include "fracdrift/errors.hpp"

#include <cmath>

using namespace fracdrift;

TEST_CASE("jet arithmetic") {
  Jet x = Jet::variable(0.3);
  Jet f = exp(x * x) / (1.0 + x);
  // derivatives of exp(x^2)/(1+x) at 0.3 by central differences
  auto g = [](double t) { return std::exp(t * t) / (1.0 + t); };
  double h = 1e-3;
  CHECK(f.derivative(1) == doctest::Approx((g(0.3 + h) - g(0.3 - h)) / (2 * h)).epsilon(1e-6));
  CHECK(f.derivative(2) == doctest::Approx((g(0.3 + h) - 2 * g(0.3) + g(0.3 - h)) / (h * h)).epsilon(1e-5));
}

TEST_CASE("distance: interval and disk values") {
  GeneralizedDistance I(DomainSpec::interval(0.0, 1.0));
  CHECK(I(0.2) == doctest::Approx(0.2).epsilon(0.01));
  CHECK(I(-0.1) == 0.0);
  CHECK(I(1.0) == 0.0);
  GeneralizedDistance D(DomainSpec::disk({0.0, 0.0}, 1.0));
  CHECK(D(Point2{0.4, 0.0}) == doctest::Approx(0.6).epsilon(0.01));
  CHECK(D(Point2{0.0, -0.9}) == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(D(Point2{1.0, 0.5}) == 0.0);
  CHECK_THROWS_AS(GeneralizedDistance(DomainSpec::interval(1.0, 0.0)), Error);
  CHECK_THROWS_AS(GeneralizedDistance(DomainSpec::disk({0, 0}, -1.0)), Error);
}

TEST_CASE("distance: interval derivatives are consistent and smooth") {
  GeneralizedDistance I(DomainSpec::interval(-1.0, 1.0));
  for (double x = -0.95; x < 0.95; x += 0.0173) {
    auto j = I.derivatives(x);
    double h = 1e-4;
    CHECK(j[1] == doctest::Approx((I(x + h) - I(x - h)) / (2 * h)).epsilon(1e-6));
    auto jp = I.derivatives(x + h), jm = I.derivatives(x - h);
    CHECK(j[3] == doctest::Approx((jp[2] - jm[2]) / (2 * h)).epsilon(1e-3).scale(1.0));
    CHECK(j[4] == doctest::Approx((jp[3] - jm[3]) / (2 * h)).epsilon(1e-2).scale(10.0));
  }
  // near the boundary d is the exact distance
  CHECK(I(-0.7) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(I.derivatives(-0.7)[2] == 0.0);
}

TEST_CASE("distance: comparability") {
  for (auto dom : {DomainSpec::interval(0.0, 1.0), DomainSpec::disk({0.2, -0.1}, 1.5)}) {
    GeneralizedDistance d(dom);
    auto c = measure_comparability(d);
    CHECK(c.sup_d_over_dist <= 1.0 + 1e-12);
    CHECK(c.product() <= 4.0);
    CHECK(c.product() >= 1.0);
  }
}

TEST_CASE("distance: disk gradient and hessian") {
  GeneralizedDistance D(DomainSpec::disk({0.1, 0.2}, 1.0));
  Point2 x{0.5, -0.3};
  auto r = D.derivatives(x);
  double h = 1e-5;
  CHECK(r.grad[0] == doctest::Approx((D(Point2{x[0] + h, x[1]}) - D(Point2{x[0] - h, x[1]})) / (2 * h)).epsilon(1e-7));
  CHECK(r.grad[1] == doctest::Approx((D(Point2{x[0], x[1] + h}) - D(Point2{x[0], x[1] - h})) / (2 * h)).epsilon(1e-7));
  double gn = std::hypot(r.grad[0], r.grad[1]);
  CHECK(gn == doctest::Approx(1.0));
}

TEST_CASE("distance: graph domain") {
  GeneralizedDistance G(DomainSpec::graph(0.1, 1.8));
  CHECK(G(Point2{0.3, -0.5}) == 0.0);
  auto c = measure_comparability(G, 100);
  CHECK(c.product() <= 4.0);
  // |d''| <= C d^{beta-2} along the normal through the kink at 0
  double cmax = 0.0, cmin = 1e300;
  for (int k = 2; k <= 12; ++k) {
    Point2 x{0.0, std::ldexp(1.0, -k)};
    auto r = G.derivatives(x);
    double hn = std::max({std::abs(r.hess[0]), std::abs(r.hess[1]), std::abs(r.hess[2])});
    double ratio = hn * std::pow(r.d, 2.0 - 1.8);
    cmax = std::max(cmax, ratio);
    cmin = std::min(cmin, ratio);
    CHECK(r.d == doctest::Approx(G.exact(x)).epsilon(0.5));
  }
  CHECK(std::isfinite(cmax));
  CHECK(cmax < 10.0 * cmin);
}
