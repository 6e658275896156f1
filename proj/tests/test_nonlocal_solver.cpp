#include <doctest.h>

#include "fracdrift/errors.hpp"
#include "fracdrift/nonlocal_solver.hpp"
#include "fracdrift/oracles.hpp"

#include <cmath>
#include <random>

using namespace fracdrift;
using oracle::ball_constant;

TEST_CASE("solver1d: constants are annihilated by the linear scheme") {
  auto K = StableKernel::fractional_laplacian(0.7, 1);
  auto g = Grid1D::make(-1.0, 1.0, 64, 16);
  auto op = assemble_operator(K, g, 0.0, {Interpolation::linear});
  Eigen::VectorXd u = Eigen::VectorXd::Constant(63, 2.5);
  Eigen::VectorXd ge = Eigen::VectorXd::Constant(op.E.cols(), 2.5);
  auto y = op.apply(u, ge, 2.5);
  CHECK(y.cwiseAbs().maxCoeff() <= 1e-10 * op.A.diagonal().maxCoeff());
  CHECK(op.monotone);
}

TEST_CASE("solver1d: parallel and reference assembly agree") {
  for (auto interp : {Interpolation::linear, Interpolation::boundary_weighted}) {
    StableKernel K(0.7, 1, {1.3});
    auto g = Grid1D::make(0.0, 1.0, 96, 3);
    auto a = assemble_operator(K, g, 1.0, {interp});
    auto b = assemble_operator_reference(K, g, 1.0, {interp});
    double scale = a.A.cwiseAbs().maxCoeff();
    CHECK((a.A - b.A).cwiseAbs().maxCoeff() <= 1e-12 * scale);
    CHECK((a.E - b.E).cwiseAbs().maxCoeff() <= 1e-12 * scale);
    CHECK(a.upwind_rows == b.upwind_rows);
  }
}

TEST_CASE("solver1d: constant source gives the (1-x^2)^s profile") {
  const double s = 0.7;
  auto K = StableKernel::fractional_laplacian(s, 1);
  auto g = Grid1D::make(-1.0, 1.0, 512);
  auto op = assemble_operator(K, g, 0.0);
  Eigen::VectorXd f = Eigen::VectorXd::Ones(g.interior());
  auto u = solve_dirichlet(op, f);
  auto x = g.interior_nodes();
  double c = ball_constant(1, s), err = 0.0, top = 0.0;
  for (int i = 0; i < g.interior(); ++i) {
    double ex = std::pow(1.0 - x[i] * x[i], s) / c;
    err = std::max(err, std::abs(u(i) - ex));
    top = std::max(top, ex);
  }
  CHECK(err / top <= 2e-3);
  CHECK(op.monotone);
}

TEST_CASE("solver1d: zero data, linearity, comparison") {
  auto K = StableKernel::fractional_laplacian(0.7, 1);
  auto g = Grid1D::make(0.0, 1.0, 256);
  auto op = assemble_operator(K, g, 1.0);
  DirichletSolver1D solver(op);
  const int n = g.interior();
  CHECK(solver.solve(Eigen::VectorXd::Zero(n)).cwiseAbs().maxCoeff() == 0.0);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  Eigen::VectorXd f1(n), f2(n);
  for (int i = 0; i < n; ++i) {
    f2(i) = U(rng);
    f1(i) = f2(i) + U(rng);
  }
  auto u1 = solver.solve(f1), u2 = solver.solve(f2);
  CHECK(solver.last_residual() <= 1e-10);
  CHECK((u1 - u2).minCoeff() >= 0.0);
  CHECK(u2.minCoeff() >= 0.0);
  auto u3 = solver.solve(2.0 * f2);
  CHECK((u3 - 2.0 * u2).cwiseAbs().maxCoeff() <= 1e-12 * u3.cwiseAbs().maxCoeff());
}

TEST_CASE("solver1d: drift needs s > 1/2") {
  auto K = StableKernel::fractional_laplacian(0.4, 1);
  CHECK_THROWS_AS(assemble_operator(K, Grid1D::make(0.0, 1.0, 32), 1.0), Error);
}

TEST_CASE("gradient") {
  auto g = Grid1D::make(0.0, 1.0, 64);
  auto x = g.interior_nodes();
  Eigen::VectorXd u(63);
  for (int i = 0; i < 63; ++i) u(i) = x[i];
  for (double v : gradient(u, g, 0.7).grad) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
  auto z = gradient(Eigen::VectorXd::Zero(63), g, 0.7);
  CHECK(z.sup_scaled == 0.0);
}

TEST_CASE("solver2d: disk with constant source") {
  const double s = 0.7;
  auto K = StableKernel::fractional_laplacian(s, 2);
  auto g = Grid2D::disk({0.0, 0.0}, 1.0, 16);
  auto op = assemble_operator_2d(K, g, {0.0, 0.0});
  Eigen::VectorXd f = Eigen::VectorXd::Ones(g.size());
  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(g.size(), -1.0, 1.0);
  CHECK((op.apply(x) - op.apply_serial(x)).cwiseAbs().maxCoeff() <= 1e-12 * op.apply(x).cwiseAbs().maxCoeff());
  IterativeReport rep;
  auto u = solve_dirichlet_2d(op, f, &rep);
  CHECK(rep.residual <= 1e-10);
  double c = ball_constant(2, s), err = 0.0, top = 0.0;
  for (std::size_t p = 0; p < g.size(); ++p) {
    double r2 = g.x[p][0] * g.x[p][0] + g.x[p][1] * g.x[p][1];
    double ex = std::pow(1.0 - r2, s) / c;
    err = std::max(err, std::abs(u(p) - ex));
    top = std::max(top, ex);
  }
  MESSAGE("2D profile error " << err / top);
  CHECK(err / top <= 0.08);
  CHECK(u.minCoeff() >= 0.0);
}
