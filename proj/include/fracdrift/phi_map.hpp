#pragma once

#include "fracdrift/flatcase.hpp"
#include "fracdrift/kernel.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace fracdrift {

using Monomial = std::array<int, 2>;  // powers of (x1, x2); n = 1 uses [0]

// Monomials of degree <= D ordered by total degree, then x1-power descending.
std::vector<Monomial> monomial_basis(int n, int D);
int basis_index(int n, const Monomial& m);

struct PhiOptions {
  double diag_threshold = 1e-4;
  double resonance_window = 1e-3;
  double fit_tol = 1e-7;
  std::uint64_t seed = 1;
};

struct PhiMatrix {
  int n = 2;
  double s = 0.0, p = 0.0;
  int degree = 0;
  std::vector<Monomial> basis;
  Eigen::MatrixXd entries;  // column j = image of basis[j]
  double diag_min = 0.0;
  std::vector<int> resonance_flags;
  double fit_residual = 0.0;  // worst relative column residual

  double norm_inf() const;
  double strict_upper_max() const;
};

PhiMatrix build_phi(const StableKernel& kernel, double p, int D, const PhiOptions& opt = {});

struct PsiMatrix {
  std::vector<Monomial> basis;
  Eigen::MatrixXd entries;
};

PsiMatrix invert_phi(const PhiMatrix& phi, double diag_threshold = 1e-4,
                     double resonance_window = 1e-3);

// Coefficient map P -> P o Q on polynomials of degree <= D in two variables.
Eigen::MatrixXd composition_matrix(const Eigen::Matrix2d& Q, int D);

// Phi for the half-space {x . e > 0}; Q orthogonal with Q e_2 = e.
PhiMatrix rotate_phi(const StableKernel& kernel, double p, int D, const std::array<double, 2>& e,
                     const Eigen::Matrix2d& Q, const PhiOptions& opt = {});

// Sum_j coeff[j] basis[j](x).
double eval_poly(const std::vector<Monomial>& basis, const Eigen::VectorXd& coeff, const Point2& x);

std::string phi_to_json(const PhiMatrix& phi);

}  // namespace fracdrift
