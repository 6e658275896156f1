#pragma once

#include "fracdrift/distance.hpp"
#include "fracdrift/kernel.hpp"

#include <Eigen/Dense>

#include <array>
#include <memory>
#include <string>
#include <vector>

namespace fracdrift {

// Uniform lattice on [lo, hi] with N cells; nodes x_j = lo + j h for
// j in [-ext, N + ext]. Interior nodes are j = 1..N-1.
struct Grid1D {
  double lo = -1.0, hi = 1.0;
  int N = 0;
  int ext = 0;
  double h = 0.0;

  static Grid1D make(double lo, double hi, int N, int ext = 0);
  double node(int j) const { return lo + j * h; }
  int interior() const { return N - 1; }
  std::vector<double> interior_nodes() const;
  std::vector<double> exterior_nodes() const;  // j <= 0 then j >= N
  double dist(double x) const;                 // to the complement of (lo, hi)
};

enum class Interpolation {
  linear,             // piecewise linear u through all lattice values
  boundary_weighted,  // u = omega v in the domain, omega ~ dist^s, v piecewise polynomial
};

struct DiscreteOperator1D {
  Grid1D grid;
  double s = 0.5, a0 = 1.0, b = 0.0;
  Interpolation interp = Interpolation::boundary_weighted;
  Eigen::MatrixXd A;    // acts on nodal u at interior nodes; includes the tail in the diagonal
  Eigen::MatrixXd E;    // couplings to exterior node data
  Eigen::VectorXd tail; // kernel mass beyond the lattice, applied to the far-field value
  std::vector<int> upwind_rows;
  bool monotone = true;
  double worst_offdiag = 0.0;  // largest positive off-diagonal (relative to the diagonal)

  // L u + b u' at interior nodes for interior values u, exterior node data g
  // (empty means zero) and constant far-field value.
  Eigen::VectorXd apply(const Eigen::VectorXd& u, const Eigen::VectorXd& g = {},
                        double far = 0.0) const;
};

struct AssemblyOptions {
  Interpolation interp = Interpolation::boundary_weighted;
  bool upwind_fallback = true;
};

// OpenMP assembly with precomputed kernel tables.
DiscreteOperator1D assemble_operator(const StableKernel& K, const Grid1D& grid, double b,
                                     const AssemblyOptions& opt = {});
// Serial reference: every quadrature node evaluated directly.
DiscreteOperator1D assemble_operator_reference(const StableKernel& K, const Grid1D& grid, double b,
                                               const AssemblyOptions& opt = {});

// Dense LU, reusable for several right-hand sides.
class DirichletSolver1D {
 public:
  explicit DirichletSolver1D(const DiscreteOperator1D& op);
  // Residual <= 1e-10 ||rhs|| after refinement, else LinearSolveFailed.
  Eigen::VectorXd solve(const Eigen::VectorXd& f, const Eigen::VectorXd& g = {}, double far = 0.0) const;
  double last_residual() const { return residual_; }

 private:
  const DiscreteOperator1D* op_;
  std::unique_ptr<Eigen::PartialPivLU<Eigen::MatrixXd>> lu_;
  mutable double residual_ = 0.0;
};

Eigen::VectorXd solve_dirichlet(const DiscreteOperator1D& op, const Eigen::VectorXd& f,
                                const Eigen::VectorXd& g = {}, double far = 0.0);

struct GradientReport {
  std::vector<double> grad;
  double sup_scaled = 0.0;  // sup |u'| d^{1-s}
};

// Centered differences inside, one-sided at the first and last interior nodes.
GradientReport gradient(const Eigen::VectorXd& u, const Grid1D& grid, double s);

// Disk lattice: nodes c + h (i, j) inside the disk.
struct Grid2D {
  Point2 center{0.0, 0.0};
  double radius = 1.0;
  double h = 0.0;
  int M = 0;
  std::vector<Point2> x;
  std::vector<std::array<int, 2>> ij;
  std::vector<double> d;   // generalized distance
  std::vector<int> index;  // (2M+1)^2 lattice -> interior index or -1

  static Grid2D disk(Point2 c, double r, int M);
  int at(int i, int j) const;
  std::size_t size() const { return x.size(); }
};

struct DiscreteOperator2D {
  Grid2D grid;
  double s = 0.5;
  std::array<double, 2> b{0.0, 0.0};
  Eigen::MatrixXd A;
  std::vector<int> upwind_rows;
  bool monotone = true;

  Eigen::VectorXd apply(const Eigen::VectorXd& u) const;         // OpenMP
  Eigen::VectorXd apply_serial(const Eigen::VectorXd& u) const;  // reference
};

DiscreteOperator2D assemble_operator_2d(const StableKernel& K, const Grid2D& grid,
                                        std::array<double, 2> b);

struct IterativeReport {
  int iterations = 0;
  double residual = 0.0;
};

// BiCGSTAB with diagonal preconditioning.
Eigen::VectorXd solve_dirichlet_2d(const DiscreteOperator2D& op, const Eigen::VectorXd& f,
                                   IterativeReport* rep = nullptr, double tol = 1e-10,
                                   int maxit = 2000);

std::vector<std::array<double, 2>> gradient_2d(const Eigen::VectorXd& u, const Grid2D& grid);

}  // namespace fracdrift
