#include <doctest.h>

#include "fracdrift/errors.hpp"
#include "fracdrift/oracles.hpp"
#include "fracdrift/phi_map.hpp"

#include <cmath>
#include <random>

using namespace fracdrift;

TEST_CASE("phi: basis ordering") {
  auto b = monomial_basis(2, 2);
  REQUIRE(b.size() == 6);
  CHECK(b[1] == Monomial{1, 0});
  CHECK(b[2] == Monomial{0, 1});
  CHECK(b[3] == Monomial{2, 0});
  for (std::size_t j = 0; j < b.size(); ++j) CHECK(basis_index(2, b[j]) == static_cast<int>(j));
}

TEST_CASE("phi: 1D is diagonal with c_{p+j} times the moment") {
  auto K = StableKernel::fractional_laplacian(0.7, 1);
  auto phi = build_phi(K, 0.9, 2);
  for (int j = 0; j < 3; ++j) {
    CHECK(phi.entries(j, j) == doctest::Approx(2.0 * compute_cp(0.7, 0.9 + j).value).epsilon(1e-10));
    for (int i = 0; i < 3; ++i)
      if (i != j) CHECK(phi.entries(i, j) == 0.0);
  }
  auto psi = invert_phi(phi);
  for (int j = 0; j < 3; ++j) CHECK(psi.entries(j, j) == doctest::Approx(1.0 / phi.entries(j, j)));
}

TEST_CASE("phi: degree 0 is c_p times the moment") {
  StableKernel K(0.7, 2, {1.0, 0.2}, 0.3);
  auto phi = build_phi(K, 0.9, 0);
  CHECK(phi.entries(0, 0) == doctest::Approx(compute_cp(0.7, 0.9).value * angular_moment(K)).epsilon(1e-8));
}

TEST_CASE("phi: lower triangular, invertible, blocks do not mix") {
  auto K = StableKernel::fractional_laplacian(0.7, 2);
  auto phi = build_phi(K, 1.1, 2);
  double nrm = phi.norm_inf();
  CHECK(phi.strict_upper_max() <= 1e-6 * nrm);
  for (int j = 0; j < 6; ++j)
    for (int i = 0; i < 6; ++i) {
      int di = phi.basis[i][0] + phi.basis[i][1], dj = phi.basis[j][0] + phi.basis[j][1];
      if (di != dj) CHECK(std::abs(phi.entries(i, j)) <= 1e-9 * nrm);
    }
  CHECK(phi.resonance_flags.empty());
  auto psi = invert_phi(phi);
  double err = (psi.entries * phi.entries - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff();
  CHECK(err <= 1e-8);
  CHECK((psi.entries.triangularView<Eigen::StrictlyUpper>().toDenseMatrix()).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("phi: correction property for random targets") {
  StableKernel K(0.7, 2, {1.0, 0.3}, 0.4);
  const double p = 1.1;
  auto phi = build_phi(K, p, 2);
  auto psi = invert_phi(phi);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-1.0, 1.0), H(0.05, 0.6);
  for (int t = 0; t < 3; ++t) {
    Eigen::VectorXd q(6);
    for (int j = 0; j < 6; ++j) q(j) = U(rng);
    Eigen::VectorXd P = psi.entries * q;
    Point2 x{U(rng), H(rng)};
    double lhs = 0.0;
    for (int j = 0; j < 6; ++j) lhs += P(j) * flat_power_value(K, p, phi.basis[j], x);
    double rhs = eval_poly(phi.basis, q, x) * std::pow(x[1], p - 1.4);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-7));
  }
}

TEST_CASE("phi: resonant diagonal near p - s = 1") {
  auto K = StableKernel::fractional_laplacian(0.7, 2);
  auto phi = build_phi(K, 1.7 + 5e-4, 1);
  CHECK(!phi.resonance_flags.empty());
  try {
    invert_phi(phi);
    FAIL("expected ResonantDiagonal");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ResonantDiagonal);
    CHECK(e.nearest_integer() == 1);
    CHECK(e.index() >= 0);
  }
  auto exact = build_phi(K, 1.7, 0);
  CHECK(!exact.resonance_flags.empty());
  CHECK_THROWS_AS(invert_phi(exact), Error);
}

TEST_CASE("phi: composition matrices") {
  double a = 0.6;
  Eigen::Matrix2d Q;
  Q << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  auto C = composition_matrix(Q, 3);
  auto Ct = composition_matrix(Q.transpose(), 3);
  CHECK((C * Ct - Eigen::MatrixXd::Identity(10, 10)).cwiseAbs().maxCoeff() < 1e-14);
  // (P o Q)(y) = P(Q y)
  auto b = monomial_basis(2, 3);
  Eigen::VectorXd P = Eigen::VectorXd::LinSpaced(10, -1.0, 1.0);
  Point2 y{0.3, -0.7};
  Eigen::Vector2d qy = Q * Eigen::Vector2d(y[0], y[1]);
  CHECK(eval_poly(b, C * P, y) == doctest::Approx(eval_poly(b, P, {qy(0), qy(1)})).epsilon(1e-14));
}

TEST_CASE("phi: rotation frames") {
  auto K = StableKernel::fractional_laplacian(0.7, 2);
  auto base = build_phi(K, 1.1, 1);
  auto same = rotate_phi(K, 1.1, 1, {0.0, 1.0}, Eigen::Matrix2d::Identity());
  CHECK((same.entries - base.entries).cwiseAbs().maxCoeff() == 0.0);
  Eigen::Matrix2d F;
  F << -1.0, 0.0, 0.0, 1.0;
  auto refl = rotate_phi(K, 1.1, 1, {0.0, 1.0}, F);
  CHECK((refl.entries - base.entries).cwiseAbs().maxCoeff() <= 1e-9 * base.norm_inf());
  Eigen::Matrix2d B;
  B << 1.0, 0.1, 0.0, 1.0;
  CHECK_THROWS_AS(rotate_phi(K, 1.1, 1, {0.1, 1.0}, B), Error);
}

TEST_CASE("phi: rotated anisotropic frame matches the rotated evaluation") {
  StableKernel K(0.7, 2, {1.0, 0.3}, 0.2);
  double ang = M_PI / 6;
  std::array<double, 2> e{-std::sin(ang), std::cos(ang)};
  Eigen::Matrix2d Q;
  Q << std::cos(ang), -std::sin(ang), std::sin(ang), std::cos(ang);
  auto phi = rotate_phi(K, 1.1, 1, e, Q);
  // L(x1 (x.e)_+^p) at x = Q y equals L_{K o Q}((Q y)_1 (y_2)_+^p)(y)
  Point2 y{0.2, 0.3};
  auto KQ = K.composed(ang, false);
  double direct = Q(0, 0) * flat_power_value(KQ, 1.1, {1, 0}, y) + Q(0, 1) * flat_power_value(KQ, 1.1, {0, 1}, y);
  Eigen::Vector2d x = Q * Eigen::Vector2d(y[0], y[1]);
  Eigen::VectorXd P = Eigen::VectorXd::Zero(3);
  P(1) = 1.0;
  Eigen::VectorXd q = phi.entries * P;
  double pred = eval_poly(phi.basis, q, {x(0), x(1)}) * std::pow(x(0) * e[0] + x(1) * e[1], 1.1 - 1.4);
  CHECK(pred == doctest::Approx(direct).epsilon(1e-8));
}

TEST_CASE("phi: JSON output is byte-stable") {
  auto K = StableKernel::fractional_laplacian(0.7, 2);
  auto a = phi_to_json(build_phi(K, 0.9, 1));
  auto b = phi_to_json(build_phi(K, 0.9, 1));
  CHECK(a == b);
  CHECK(a.find("\"basis\"") != std::string::npos);
}

TEST_CASE("phi: polar quadrature of a flat power") {
  auto K = StableKernel::fractional_laplacian(0.8, 2);
  double v = oracle::rotated_power_by_quadrature(K, 0.2, {0, 0}, {0.0, 1.0}, {0.3, 0.5});
  double ref = compute_cp(0.8, 0.2).value * angular_moment(K) * std::pow(0.5, 0.2 - 1.6);
  CHECK(v == doctest::Approx(ref).epsilon(1e-10));
  CHECK_THROWS_AS(oracle::rotated_power_by_quadrature(K, 0.9, {1, 0}, {0.0, 1.0}, {0.3, 0.5}), Error);
}
