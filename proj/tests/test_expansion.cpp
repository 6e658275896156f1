#include <doctest.h>

#include "fracdrift/errors.hpp"
#include "fracdrift/expansion.hpp"
#include "fracdrift/flatcase.hpp"

#include <cmath>
#include <random>

using namespace fracdrift;

namespace {

ProfileSamples synthetic(const std::vector<double>& ex, const std::vector<double>& c, double h) {
  ProfileSamples p;
  for (int j = 1; j * h <= 0.5; ++j) {
    double d = j * h, v = 0.0;
    for (std::size_t i = 0; i < ex.size(); ++i) v += c[i] * std::pow(d, ex[i]);
    p.d.push_back(d);
    p.u.push_back(v);
  }
  return p;
}

}  // namespace

TEST_CASE("ladder: listed exponents") {
  auto a = ladder(0.7, 2.2);
  auto e = a.exponents();
  REQUIRE(e.size() == 5);
  const double want[] = {0.7, 1.1, 1.5, 1.7, 1.9};
  for (int i = 0; i < 5; ++i) CHECK(e[i] == doctest::Approx(want[i]).epsilon(1e-12));
  CHECK(a.entries[3].k == 0);
  CHECK(a.entries[3].l == 1);
  CHECK(a.entries[4].k == 3);
  CHECK_FALSE(a.has_collision());
  CHECK(a.epsilon0 == doctest::Approx(0.4));

  auto b = ladder(0.75, 2.0);
  CHECK(b.has_collision());
  bool found = false;
  for (const auto& x : b.entries)
    if (x.collision && std::abs(x.exponent - 1.75) < 1e-12) found = true;
  CHECK(found);

  auto c = ladder(0.55, 1.35);
  auto ce = c.exponents();
  REQUIRE(ce.size() == 4);
  for (int i = 0; i < 4; ++i) CHECK(ce[i] == doctest::Approx(0.55 + 0.1 * i).epsilon(1e-12));
  CHECK(a.next_exponent() == doctest::Approx(2.1));
}

TEST_CASE("ladder: collisions exactly when k eps0 is a natural number") {
  for (double s : {0.6, 0.65, 0.7, 0.75, 0.8, 0.9, 0.61, 0.83}) {
    for (double beta : {1.5, 2.0, 2.7}) {
      auto L = ladder(s, beta);
      const double e0 = 2 * s - 1;
      bool expect = false;
      for (int k = 1; k * e0 <= beta - 1 + 1e-12; ++k) {
        double v = k * e0;
        if (std::abs(v - std::round(v)) < 1e-9 && std::round(v) >= 1 && v <= beta - 1 + 1e-12) expect = true;
      }
      CHECK(L.has_collision() == expect);
      for (std::size_t i = 1; i < L.entries.size(); ++i)
        CHECK(L.entries[i].exponent >= L.entries[i - 1].exponent);
      auto L2 = ladder(s, beta);
      CHECK(L2.exponents() == L.exponents());
    }
  }
}

TEST_CASE("fit: two-term synthetic profile") {
  auto p = synthetic({0.7, 1.1}, {2.0, 0.5}, 1.0 / 4096);
  auto f = fit_expansion(p, 0.7, {0.7, 1.1}, FitWindow::standard(1.0 / 4096));
  CHECK(f.coeff[0] == doctest::Approx(2.0).epsilon(1e-3));
  CHECK(f.coeff[1] == doctest::Approx(0.5).epsilon(1e-3));
  CHECK(f.residual_decay_exponent >= 1.5);
  CHECK(f.bands >= 5);
}

TEST_CASE("fit: random subsets of the ladder are recovered") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(0.2, 2.0);
  auto lad = ladder(0.7, 2.6).exponents();
  int accepted = 0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> ex{0.7}, c{U(rng)};
    for (std::size_t i = 1; i < lad.size(); ++i)
      if (rng() % 2) {
        ex.push_back(lad[i]);
        c.push_back(U(rng));
      }
    auto p = synthetic(ex, c, 1.0 / 4096);
    try {
      auto f = fit_expansion(p, 0.7, ex, FitWindow::standard(1.0 / 4096));
      ++accepted;
      for (std::size_t i = 0; i < ex.size(); ++i) CHECK(f.coeff[i] == doctest::Approx(c[i]).epsilon(1e-3));
    } catch (const Error& e) {
      CHECK(e.code() == Errc::IllConditionedLadder);
    }
  }
  CHECK(accepted >= 15);
}

TEST_CASE("fit: ill-conditioned ladders and thin windows") {
  auto p = synthetic({0.55, 0.56}, {1.0, 1.0}, 1.0 / 4096);
  try {
    fit_expansion(p, 0.55, {0.55, 0.5501, 0.5502, 0.5503}, FitWindow::standard(1.0 / 4096));
    FAIL("expected IllConditionedLadder");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::IllConditionedLadder);
  }
  FitOptions opt;
  opt.peel = true;
  auto f = fit_expansion(synthetic({0.7, 1.7}, {1.0, -0.3}, 1.0 / 4096), 0.7, {0.7, 1.7, 1.7 + 1e-8},
                         FitWindow::standard(1.0 / 4096), opt);
  CHECK(f.peeled);
  CHECK(f.coeff[0] == doctest::Approx(1.0).epsilon(1e-2));

  try {
    fit_expansion(p, 0.55, {0.55}, {0.1, 0.15});
    FAIL("expected InsufficientWindow");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::InsufficientWindow);
  }
}

TEST_CASE("fit: statistical zero for an absent rung") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> noise(0.0, 1e-6);
  auto p = synthetic({0.7, 1.7}, {1.0, -0.7}, 1.0 / 8192);
  for (auto& v : p.u) v += noise(rng) * v;
  auto f = fit_expansion(p, ladder(0.7, 2.2), FitWindow::standard(1.0 / 8192));
  CHECK(f.statistically_zero(f.index_of(1.1)));
  CHECK_FALSE(f.statistically_zero(f.index_of(0.7)));
}

TEST_CASE("first correction: variable projection finds the next exponent") {
  auto p = synthetic({0.7, 1.1, 1.7, 2.3}, {1.0, 0.3, -0.5, 0.2}, 1.0 / 8192);
  auto cf = first_correction(p, 0.7, FitWindow::standard(1.0 / 8192), 3);
  CHECK(cf.exponents[1] == doctest::Approx(1.1).epsilon(1e-3));
  auto q = synthetic({0.7, 1.7, 2.7}, {1.0, -0.7, 0.1}, 1.0 / 8192);
  auto cq = first_correction(q, 0.7, FitWindow::standard(1.0 / 8192), 3);
  CHECK(cq.exponents[1] == doctest::Approx(1.7).epsilon(1e-3));
}

TEST_CASE("holder: exact powers and constants") {
  const double h = 1.0 / 8192;
  for (double a = 0.2; a <= 0.9 + 1e-9; a += 0.1) {
    auto p = synthetic({a}, {1.0}, h);
    auto est = holder_exponent(p, 0.0, FitWindow::standard(h));
    CHECK(std::abs(est.exponent - a) <= 0.02);
  }
  auto c = synthetic({0.0}, {1.0}, h);
  auto est = holder_exponent(c, 1.0, FitWindow::standard(h));
  CHECK(est.saturated);
  CHECK(est.exponent >= 0.9);
  CHECK_THROWS_AS(holder_exponent(c, 1.0, {0.1, 0.2}), Error);
}

TEST_CASE("holder: ladder-shaped oscillation") {
  auto p = synthetic({0.0, 0.4, 0.8}, {1.0, 0.3, -0.6}, 1.0 / 8192);
  auto est = holder_exponent(p, 1.0, {0.00122, 0.05});
  CHECK(est.raw_slope < 0.35);
  CHECK(std::abs(est.exponent - 0.4) <= 0.01);
}

TEST_CASE("tangential: constant and rough boundary data") {
  const int n = 64;
  std::vector<double> arc(n), flat(n, 0.25), rough(n);
  for (int i = 0; i < n; ++i) {
    arc[i] = 2 * M_PI * i / n;
    rough[i] = std::pow(std::abs(std::sin(arc[i])), 0.5);
  }
  auto a = tangential_regularity(arc, flat, 1, true);
  CHECK(a.max_difference <= 1e-12);
  CHECK(a.saturated);
  auto b = tangential_regularity(arc, rough, 0, true);
  CHECK(b.exponent == doctest::Approx(0.5).epsilon(0.1));
  CHECK_FALSE(b.saturated);
  CHECK_THROWS_AS(tangential_regularity({0, 1}, {1, 1}, 1, false), Error);
}

TEST_CASE("disk normal fits: radial profile gives a constant boundary coefficient") {
  auto g = Grid2D::disk({0.0, 0.0}, 1.0, 64);
  const double s = 0.7;
  Eigen::VectorXd u(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    double r2 = g.x[i][0] * g.x[i][0] + g.x[i][1] * g.x[i][1];
    u(i) = std::pow(1.0 - r2, s);
  }
  std::vector<double> ang;
  for (int k = 0; k < 8; ++k) ang.push_back(2 * M_PI * k / 8);
  auto fits = disk_normal_fits(u, g, s, ang, {0.7, 1.7, 2.7}, {4 * g.h, 0.5});
  for (const auto& f : fits) CHECK(f.coeff[0] == doctest::Approx(std::pow(2.0, s)).epsilon(1e-3));
}

TEST_CASE("factorization: flat domains match the flat-case constants") {
  const double s = 0.7;
  auto one = [](const Point2&) { return 1.0; };
  std::vector<double> t{0.05, 0.1, 0.2, 0.4};
  for (int n : {1, 2}) {
    auto K = StableKernel::fractional_laplacian(s, n, true);
    Point2 nu = n == 1 ? Point2{1.0, 0.0} : Point2{0.0, 1.0};
    auto zero = singular_factorization(K, nullptr, one, s, {0.0, 0.0}, nu, t);
    CHECK(std::abs(zero.phi) <= 1e-8);
    for (double p : {0.9, 1.2}) {
      auto r = singular_factorization(K, nullptr, one, p, {0.0, 0.0}, nu, t);
      double ref = compute_cp(s, p).value * angular_moment(K);
      CHECK(r.phi == doctest::Approx(ref).epsilon(1e-4));
    }
  }
  auto K = StableKernel::fractional_laplacian(s, 1);
  CHECK_THROWS_AS(singular_factorization(K, nullptr, one, 1.5, {0.0, 0.0}, {1.0, 0.0}, t), Error);
}

TEST_CASE("factorization: disk coefficient is c_p |grad d|^{2s}") {
  const double s = 0.7, p = 0.9;
  auto K = StableKernel::fractional_laplacian(s, 2, true);
  GeneralizedDistance D(DomainSpec::disk({0.0, 0.0}, 1.0));
  auto one = [](const Point2&) { return 1.0; };
  auto r = singular_factorization(K, &D, one, p, {1.0, 0.0}, {-1.0, 0.0}, {1e-5, 3e-5, 1e-4, 3e-4, 1e-3, 3e-3});
  auto dg = D.derivatives(Point2{1.0 - 1e-6, 0.0});
  double g2s = std::pow(std::hypot(dg.grad[0], dg.grad[1]), 2 * s);
  CHECK(r.phi == doctest::Approx(compute_cp(s, p).value * angular_moment(K) * g2s).epsilon(3e-3));
}
