#pragma once

#include "fracdrift/nonlocal_solver.hpp"

#include <Eigen/Dense>

#include <vector>

namespace fracdrift {

// Smooth compactly supported obstacle shapes on the line.
struct Obstacle {
  enum class Kind { Bump, Parabola } kind = Kind::Bump;
  double height = 1.0;
  double radius = 0.5;
  double center = 0.0;

  // height * exp(1 - 1/(1 - ((x-c)/r)^2)) inside |x - c| < r
  static Obstacle bump(double height, double radius, double center = 0.0);
  // height - x^2, smoothly clipped from below at -0.1
  static Obstacle parabola(double height);
  double operator()(double x) const;
  Eigen::VectorXd sample(const Grid1D& grid) const;
};

struct ObstacleOptions {
  double relaxation = 1.5;
  double tol = 1e-8;
  int max_sweeps = 20000;
  int stall_window = 1000;
  int psor_sweeps = 200;   // sweeps before switching to active-set polishing
  bool polish = true;
  double contact_tol = 1e-10;  // relative to ||phi||_inf
};

struct FreeBoundaryResult {
  Eigen::VectorXd u;
  Eigen::VectorXd w;          // u - phi
  std::vector<int> contact;   // interior row indices with u = phi
  double residual = 0.0;      // max |min{(Au - f)_i, (u - phi)_i}|
  int sweeps = 0;
  int polish_steps = 0;
  double relaxation = 1.5;    // factor in use at exit
};

double complementarity_residual(const DiscreteOperator1D& op, const Eigen::VectorXd& u,
                                const Eigen::VectorXd& phi, const Eigen::VectorXd& f);

// Projected SOR followed by primal-dual active-set polishing.
FreeBoundaryResult solve_obstacle(const DiscreteOperator1D& op, const Eigen::VectorXd& phi,
                                  const Eigen::VectorXd& f = {}, const ObstacleOptions& opt = {});

struct BoundaryPoint {
  double t = 0.0;
  int side = 1;      // +1: positivity set to the right of t
  double c = 0.0;    // amplitude of c (x - t)_+^{1+s}
};

// w is sampled at the interior nodes of grid.
std::vector<BoundaryPoint> extract_free_boundary(const Eigen::VectorXd& w, const Grid1D& grid,
                                                 double s, double contact_tol = 0.0);

struct RegularityReport {
  double z = 0.0;
  int nodes = 0;
  double c = 0.0;          // inf of d_nu w / dist^s over the window
  double C = 0.0;          // sup of |w'| / dist^s
  double exponent = 0.0;   // log-log growth exponent of w
  double ratio_slope = 0.0;  // log-log slope of d_nu w / dist^s
  double goodness = 0.0;   // R^2 of the growth fit
  bool regular = false;
};

RegularityReport check_regular_point(const Eigen::VectorXd& w, const Grid1D& grid, double s,
                                     const BoundaryPoint& z, double window, double inner = 0.0);

}  // namespace fracdrift
