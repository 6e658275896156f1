#include <doctest.h>

#include "fracdrift/errors.hpp"
#include "fracdrift/kernel.hpp"

#include <cmath>
#include <random>

using namespace fracdrift;

TEST_CASE("kernel: direct formula and evenness in 1D") {
  auto K = StableKernel::fractional_laplacian(0.7, 1);
  CHECK(K(2.0) == doctest::Approx(std::pow(2.0, -2.4)).epsilon(1e-15));
  CHECK(K(-0.3) == K(0.3));
  CHECK_THROWS_AS(K(0.0), Error);
}

TEST_CASE("kernel: cosine angular part at theta = pi/4") {
  StableKernel K(0.6, 2, {1.0, 0.5});
  double t = M_PI / 4;
  CHECK(K(std::cos(t), std::sin(t)) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(K.angular(t) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(K.lambda() == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(K.Lambda() == doctest::Approx(1.5).epsilon(1e-6));
}

TEST_CASE("kernel: homogeneity, evenness and ellipticity on random samples") {
  StableKernel K(0.7, 2, {1.0, 0.3, -0.2}, 0.4);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-2.0, 2.0), T(0.1, 5.0);
  for (int i = 0; i < 200; ++i) {
    double y1 = U(rng), y2 = U(rng), t = T(rng);
    double k = K(y1, y2);
    CHECK(K(t * y1, t * y2) == doctest::Approx(std::pow(t, -2.0 - 1.4) * k).epsilon(1e-13));
    CHECK(K(-y1, -y2) == doctest::Approx(k).epsilon(1e-14));
    double r = std::pow(std::hypot(y1, y2), -3.4);
    CHECK(k >= K.lambda() * r * (1 - 1e-12));
    CHECK(k <= K.Lambda() * r * (1 + 1e-12));
    double th = std::atan2(y2, y1);
    CHECK(K.angular(th) == doctest::Approx(K.angular_dir(std::cos(th), std::sin(th))).epsilon(1e-13));
  }
}

TEST_CASE("kernel: rotating an isotropic kernel changes nothing; reflections flip phase") {
  StableKernel K(0.7, 2, {1.0, 0.4}, 0.3);
  auto R = K.composed(0.5, false);
  auto F = K.composed(0.0, true);
  for (double th = 0.0; th < M_PI; th += 0.1) {
    CHECK(R.angular(th) == doctest::Approx(K.angular(th + 0.5)).epsilon(1e-13));
    CHECK(F.angular(th) == doctest::Approx(K.angular(-th)).epsilon(1e-13));
  }
  auto I = StableKernel::fractional_laplacian(0.7, 2).composed(1.1, true);
  CHECK(I.angular(0.3) == 1.0);
}

TEST_CASE("kernel: Fourier normalization") {
  CHECK(fourier_normalization(1, 0.5) == doctest::Approx(1.0 / M_PI).epsilon(1e-4));
  for (double s : {0.3, 0.5, 0.7, 0.9}) {
    CHECK(fourier_normalization(1, s) == doctest::Approx(fourier_normalization_closed(1, s)).epsilon(1e-9));
    double c2 = fourier_normalization(2, s);
    CHECK(std::isfinite(c2));
    CHECK(c2 > 0.0);
    CHECK(c2 == doctest::Approx(fourier_normalization_closed(2, s)).epsilon(1e-9));
  }
  auto K = StableKernel::fractional_laplacian(0.5, 1, true);
  CHECK(K.angular(0.0) == doctest::Approx(1.0 / M_PI).epsilon(1e-9));
}

TEST_CASE("kernel: invalid parameters") {
  CHECK_THROWS_AS(StableKernel(1.2, 1, {1.0}), Error);
  CHECK_THROWS_AS(StableKernel(0.7, 3, {1.0}), Error);
  CHECK_THROWS_AS(StableKernel(0.7, 2, {0.2, 0.5}), Error);
}
