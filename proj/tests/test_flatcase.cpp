#include <doctest.h>

#include "fracdrift/errors.hpp"
#include "fracdrift/flatcase.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <random>

using namespace fracdrift;

namespace {

// 40-digit reference values from an arbitrary-precision evaluation of the
// same finite-part integral (Taylor head, tanh-sinh body, binomial tail).
struct CpRef {
  double s, p, c;
};
const CpRef kCpRef[] = {
    {0.7, 0.8, -0.21325211643938927061}, {0.6, 0.3, 0.37022409937552425669},
    {0.6, 0.9, -1.1106722981265731487},  {0.7, 1.1, -1.4813929031265292007},
    {0.7, 0.9, -0.49853369679379809199}, {0.7, 1.5, 4.1544474732816444223},
    {0.7, 2.1, -4.4441787093795866623},  {0.7, 1.9, -1.8944280478164312637},
    {0.8, 0.85, -0.10785943782615882115}, {0.6, 0.7, -0.23746984843352563708},
    {0.8, 0.9, -0.2295483803349418965},
};

}  // namespace

TEST_CASE("compute_cp: reference values") {
  for (const auto& r : kCpRef) {
    CAPTURE(r.s);
    CAPTURE(r.p);
    auto v = compute_cp(r.s, r.p);
    CHECK(v.value == doctest::Approx(r.c).epsilon(1e-10));
    CHECK(v.error_estimate < 1e-9);
  }
}

TEST_CASE("compute_cp: zero at p = s, generalized zero at p = s + 1") {
  for (double s : {0.6, 0.7, 0.8}) {
    double ref = std::abs(compute_cp(s, s + 0.1).value);
    CHECK(std::abs(compute_cp(s, s).value) <= 1e-8 * ref);
    CHECK(std::abs(compute_cp(s, s + 1.0).value) <= 1e-8 * ref);
  }
}

TEST_CASE("compute_cp: errors") {
  CHECK_THROWS_AS(compute_cp(0.7, 0.0), Error);
  try {
    compute_cp(0.7, 1.4);
    FAIL("expected LogResonance");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::LogResonance);
    CHECK(e.nearest_integer() == 0);
  }
  try {
    compute_cp(0.7, 2.4 + 5e-4);
    FAIL("expected LogResonance");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::LogResonance);
    CHECK(e.nearest_integer() == 1);
  }
  try {
    compute_cp(0.7, 0.0);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::BadExponent);
  }
}

TEST_CASE("compute_cp: values straddle the zero at p = s") {
  CHECK(compute_cp(0.6, 0.3).value * compute_cp(0.6, 0.9).value < 0.0);
}

TEST_CASE("compute_cp: near the pole at p = 2s the value grows like 1/(p-2s)") {
  double a = compute_cp(0.7, 1.4 + 2e-3).value;
  double b = compute_cp(0.7, 1.4 + 4e-3).value;
  CHECK(a / b == doctest::Approx(2.0).epsilon(0.02));
}

TEST_CASE("scan: single sign change at p = s, continuity") {
  for (double s : {0.6, 0.7, 0.8}) {
    auto rows = scan_cp(s, 0.1, 2 * s - 0.05, 0.05);
    auto ch = sign_changes(rows);
    REQUIRE(ch.size() == 1);
    CHECK(ch[0].p_lo == doctest::Approx(s).epsilon(1e-9));
    CHECK(ch[0].p_hi == doctest::Approx(s).epsilon(1e-9));
    for (std::size_t i = 1; i < rows.size(); ++i)
      CHECK(std::abs(rows[i].cp - rows[i - 1].cp) <= 150.0 * 0.05);
  }
}

TEST_CASE("angular_moment") {
  auto K1 = StableKernel::fractional_laplacian(0.7, 1);
  CHECK(angular_moment(K1) == doctest::Approx(2.0).epsilon(1e-15));
  for (double s : {0.55, 0.7, 0.9}) {
    auto K2 = StableKernel::fractional_laplacian(s, 2);
    double beta = 2.0 * std::sqrt(M_PI) * boost::math::tgamma(s + 0.5) / boost::math::tgamma(s + 1.0);
    CHECK(angular_moment(K2) == doctest::Approx(beta).epsilon(1e-12));
    CHECK(angular_moment(K2, 0) == doctest::Approx(beta).epsilon(1e-12));
  }
  StableKernel A(0.7, 2, {1.0, 0.5});
  StableKernel B(0.7, 2, {0.3, -0.1, 0.05});
  StableKernel S(0.7, 2, {1.3, 0.4, 0.05});
  CHECK(angular_moment(S) == doctest::Approx(angular_moment(A) + angular_moment(B)).epsilon(1e-13));
}

TEST_CASE("compute_cp_tilde") {
  auto odd = [](double t) { return std::sin(t); };
  auto K2 = StableKernel::fractional_laplacian(0.7, 2);
  double ct = compute_cp_tilde(odd, 2, 0.7, 0.9);
  CHECK(ct == doctest::Approx(compute_cp(0.7, 0.9).value * angular_moment(K2)).epsilon(1e-11));
  auto odd2 = [](double t) { return std::sin(t) * (1.0 + 0.3 * std::cos(2 * t)) + 0.2 * std::cos(3 * t); };
  CHECK(std::abs(compute_cp_tilde(odd2, 2, 0.7, 0.7)) < 1e-10);
  auto twice = [&](double t) { return 2.0 * odd2(t); };
  CHECK(compute_cp_tilde(twice, 2, 0.7, 1.1) ==
        doctest::Approx(2.0 * compute_cp_tilde(odd2, 2, 0.7, 1.1)).epsilon(1e-13));
  auto even = [](double t) { return 1.0 + std::cos(2 * t); };
  CHECK_THROWS_AS(compute_cp_tilde(even, 2, 0.7, 0.9), Error);
  auto odd1 = [](double t) { return std::cos(t); };
  CHECK(compute_cp_tilde(odd1, 1, 0.7, 0.9) == doctest::Approx(2.0 * compute_cp(0.7, 0.9).value));
}

TEST_CASE("eval_flat_power: gamma = 0 reduces to c_p times the moment") {
  for (double s : {0.6, 0.7}) {
    StableKernel K(s, 2, {1.0, 0.3}, 0.2);
    double mom = angular_moment(K);
    for (double p : {0.4, 0.9, 1.3, 1.9}) {
      double cp = compute_cp(s, p).value;
      for (Point2 x : {Point2{0.0, 0.5}, Point2{0.7, 0.05}, Point2{-1.2, 0.3}}) {
        CAPTURE(s);
        CAPTURE(p);
        CAPTURE(x[0]);
        double v = flat_power_value(K, p, {0, 0}, x);
        CHECK(v == doctest::Approx(cp * mom * std::pow(x[1], p - 2 * s)).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("eval_flat_power: p = s vanishes") {
  auto K = StableKernel::fractional_laplacian(0.7, 2);
  double ref = std::abs(flat_power_value(K, 0.8, {0, 0}, {0.2, 0.4}));
  CHECK(std::abs(flat_power_value(K, 0.7, {0, 0}, {0.2, 0.4})) < 1e-10 * ref);
  auto ge = eval_flat_power(K, 0.7, {0, 0}, {{0.1, 0.3}, {-0.4, 0.2}});
  for (double v : ge.limit) CHECK(std::abs(v) < 1e-10 * ref);
}

TEST_CASE("eval_flat_power: homogeneity and k-independence") {
  StableKernel K(0.7, 2, {1.0, 0.25}, 0.1);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> P(0.2, 1.3), X1(-0.5, 0.5), X2(0.05, 0.5);
  for (int t = 0; t < 4; ++t) {
    std::array<int, 2> g{t % 3, t / 2};
    double p = P(rng);
    Point2 x{X1(rng), X2(rng)};
    double q = g[0] + g[1] + p - 1.4;
    double a = flat_power_value(K, p, g, x);
    double b = flat_power_value(K, p, g, {2 * x[0], 2 * x[1]});
    CHECK(b == doctest::Approx(std::pow(2.0, q) * a).epsilon(1e-8));
    auto e1 = eval_flat_power(K, p, g, {x});
    auto e2 = eval_flat_power(K, p, g, {x}, e1.k + 1);
    CHECK(e1.limit[0] == doctest::Approx(e2.limit[0]).epsilon(1e-12));
    CHECK(e1.spread < 1e-8);
  }
}

TEST_CASE("eval_flat_power: polynomial class and cutoff convergence") {
  auto K = StableKernel::fractional_laplacian(0.7, 2);
  Point2 x{0.3, 0.2};
  auto ge = eval_flat_power(K, 1.1, {2, 0}, {x});
  CHECK(ge.k == 2);  // 2 + 1.1 - 1.4 = 1.7
  std::size_t n = ge.cutoff_radii.size();
  double d1 = std::abs(ge.limit_values[n - 1][0] - ge.limit[0]);
  double d2 = std::abs(ge.limit_values[n - 2][0] - ge.limit[0]);
  CHECK(d1 < d2);
  CHECK_THROWS_AS(eval_flat_power(K, 1.1, {2, 0}, {x}, 1), Error);
}

TEST_CASE("eval_flat_power: 1D folds tangential powers into p") {
  auto K = StableKernel::fractional_laplacian(0.7, 1);
  double v = flat_power_value(K, 0.9, {2, 0}, {0.3, 0.0});
  CHECK(v == doctest::Approx(2.0 * compute_cp(0.7, 2.9).value * std::pow(0.3, 2.9 - 1.4)).epsilon(1e-12));
}
