#include <doctest.h>

#include "fracdrift/errors.hpp"
#include "fracdrift/obstacle_solver.hpp"
#include "fracdrift/oracles.hpp"

#include <cmath>

using namespace fracdrift;

TEST_CASE("obstacle: negative obstacle gives the zero solution") {
  auto K = StableKernel::fractional_laplacian(0.7, 1);
  auto g = Grid1D::make(-1.0, 1.0, 64);
  auto op = assemble_operator(K, g, 0.0);
  Eigen::VectorXd phi = Eigen::VectorXd::Constant(g.interior(), -0.5);
  auto r = solve_obstacle(op, phi);
  CHECK(r.u.cwiseAbs().maxCoeff() <= 1e-14);
  CHECK(r.contact.empty());
}

TEST_CASE("obstacle: clipped parabola matches active-set enumeration") {
  auto K = StableKernel::fractional_laplacian(0.7, 1);
  auto g = Grid1D::make(-1.0, 1.0, 65);
  auto op = assemble_operator(K, g, 0.0);
  Eigen::VectorXd phi = Obstacle::parabola(0.5).sample(g);
  auto r = solve_obstacle(op, phi);
  REQUIRE(g.interior() == 64);
  CHECK(!r.contact.empty());
  CHECK(r.residual <= 1e-8);
  double rr = 0.0;
  auto ref = oracle::obstacle_by_enumeration(op.A, phi, Eigen::VectorXd::Zero(64), &rr);
  CHECK(rr <= 1e-10);
  CHECK((ref - r.u).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK((r.u - phi).minCoeff() >= 0.0);
}

TEST_CASE("obstacle: projected relaxation alone converges") {
  auto K = StableKernel::fractional_laplacian(0.7, 1);
  auto g = Grid1D::make(-1.0, 1.0, 64);
  auto op = assemble_operator(K, g, 0.0);
  Eigen::VectorXd phi = Obstacle::bump(1.0, 0.6).sample(g);
  ObstacleOptions plain;
  plain.polish = false;
  auto a = solve_obstacle(op, phi, {}, plain);
  auto b = solve_obstacle(op, phi);
  CHECK(a.residual <= 1e-8);
  CHECK(a.polish_steps == 0);
  CHECK((a.u - b.u).cwiseAbs().maxCoeff() <= 1e-7);
}

TEST_CASE("obstacle: monotone in the obstacle") {
  auto K = StableKernel::fractional_laplacian(0.6, 1);
  auto g = Grid1D::make(-1.0, 1.0, 128);
  auto op = assemble_operator(K, g, 0.0);
  Eigen::VectorXd p1 = Obstacle::bump(0.8, 0.5).sample(g);
  Eigen::VectorXd p2 = Obstacle::bump(1.0, 0.6).sample(g);
  REQUIRE((p2 - p1).minCoeff() >= 0.0);
  auto u1 = solve_obstacle(op, p1).u;
  auto u2 = solve_obstacle(op, p2).u;
  CHECK((u2 - u1).minCoeff() >= -1e-12);
}

TEST_CASE("obstacle: drift shifts the contact set consistently") {
  auto K = StableKernel::fractional_laplacian(0.7, 1);
  auto phi = Obstacle::bump(1.0, 0.6);
  std::vector<double> shift;
  for (int N : {256, 512}) {
    auto g = Grid1D::make(-1.0, 1.0, N);
    auto f0 = extract_free_boundary(solve_obstacle(assemble_operator(K, g, 0.0), phi.sample(g)).w, g, 0.7);
    auto f1 = extract_free_boundary(solve_obstacle(assemble_operator(K, g, 1.0), phi.sample(g)).w, g, 0.7);
    REQUIRE(f0.size() == 2);
    REQUIRE(f1.size() == 2);
    shift.push_back(f1[0].t - f0[0].t);
    shift.push_back(f1[1].t - f0[1].t);
  }
  for (double d : shift) CHECK(d < -0.02);
  CHECK(std::abs(shift[0] - shift[2]) <= 0.01);
  CHECK(std::abs(shift[1] - shift[3]) <= 0.01);
}

TEST_CASE("free boundary: synthetic profile recovers its location") {
  const double s = 0.6;
  auto g = Grid1D::make(0.0, 1.0, 200);
  Eigen::VectorXd w(g.interior());
  for (int r = 0; r < w.size(); ++r) w(r) = std::pow(std::max(g.node(r + 1) - 0.3, 0.0), 1.0 + s);
  auto fb = extract_free_boundary(w, g, s);
  REQUIRE(fb.size() == 1);
  CHECK(std::abs(fb[0].t - 0.3) <= g.h / 10);
  CHECK(fb[0].side == 1);
  CHECK(fb[0].c == doctest::Approx(1.0).epsilon(1e-9));

  Eigen::VectorXd pos = w.array() + 1.0;
  CHECK_THROWS_AS(extract_free_boundary(pos, g, s), Error);
  try {
    extract_free_boundary(pos, g, s);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NoFreeBoundary);
  }
}

TEST_CASE("regular point: synthetic growth profiles") {
  const double s = 0.7;
  auto g = Grid1D::make(0.0, 1.0, 2000);
  BoundaryPoint z{0.25, 1, 1.0};
  Eigen::VectorXd good(g.interior()), flat(g.interior());
  for (int r = 0; r < good.size(); ++r) {
    double d = std::max(g.node(r + 1) - z.t, 0.0);
    good(r) = std::pow(d, 1.0 + s);
    flat(r) = d * d;
  }
  auto a = check_regular_point(good, g, s, z, 0.1, 10 * g.h);
  CHECK(a.regular);
  CHECK(a.exponent == doctest::Approx(1.0 + s).epsilon(1e-6));
  CHECK(a.c == doctest::Approx(1.0 + s).epsilon(1e-3));
  auto b = check_regular_point(flat, g, s, z, 0.1, 10 * g.h);
  CHECK_FALSE(b.regular);
  CHECK(b.ratio_slope == doctest::Approx(1.0 - s).epsilon(1e-3));
  CHECK(b.c < 0.3 * a.c);

  CHECK_THROWS_AS(check_regular_point(good, g, s, z, 0.001), Error);
}

TEST_CASE("regular point: bump obstacle is nondegenerate on both sides") {
  const double s = 0.7;
  auto K = StableKernel::fractional_laplacian(s, 1);
  auto g = Grid1D::make(-1.0, 1.0, 512);
  auto r = solve_obstacle(assemble_operator(K, g, 0.0), Obstacle::bump(1.0, 0.6).sample(g));
  auto fb = extract_free_boundary(r.w, g, s);
  REQUIRE(fb.size() == 2);
  CHECK(fb[0].side == -1);
  CHECK(fb[1].side == 1);
  CHECK(fb[0].t == doctest::Approx(-fb[1].t).epsilon(1e-7));
  for (const auto& z : fb) {
    auto rep = check_regular_point(r.w, g, s, z, 0.05, 2 * g.h);
    CHECK(rep.c > 0.0);
    CHECK(std::abs(rep.exponent - (1.0 + s)) <= 0.1);
  }
}
