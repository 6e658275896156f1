#pragma once

#include "fracdrift/kernel.hpp"
#include "fracdrift/nonlocal_solver.hpp"

#include <Eigen/Dense>

#include <array>

namespace fracdrift::oracle {

// Tries every contact set that is an interval of consecutive nodes (and the
// empty set) and returns the one satisfying complementarity best.
Eigen::VectorXd obstacle_by_enumeration(const Eigen::MatrixXd& A, const Eigen::VectorXd& phi,
                                        const Eigen::VectorXd& f, double* residual = nullptr);

// L (1-|x|^2)_+^s for the raw kernel |y|^{-n-2s}; the solution with f = 1 on the
// unit ball is (1-|x|^2)_+^s divided by this.
double ball_constant(int n, double s);

// L(x^gamma (x.e)_+^p)(x) by polar quadrature of the symmetric second difference,
// n = 2, |gamma| <= 1, |gamma| + p < 2s (absolutely convergent case), x.e > 0.
double rotated_power_by_quadrature(const StableKernel& K, double p, std::array<int, 2> gamma,
                                   std::array<double, 2> e, std::array<double, 2> x);

}  // namespace fracdrift::oracle
