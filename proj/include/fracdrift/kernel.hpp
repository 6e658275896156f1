#pragma once

#include <array>
#include <vector>

namespace fracdrift {

// Homogeneous kernel K(y) = a(theta) |y|^{-n-2s} with
// a(theta) = scale * sum_k coeffs[k] cos(2k(theta - phase)).
class StableKernel {
 public:
  StableKernel() = default;
  StableKernel(double s, int n, std::vector<double> coeffs, double phase = 0.0,
               bool normalized = false);

  static StableKernel fractional_laplacian(double s, int n, bool normalized = false);

  double s() const { return s_; }
  int n() const { return n_; }
  const std::vector<double>& coeffs() const { return coeffs_; }
  double phase() const { return phase_; }
  bool normalized() const { return normalized_; }
  double scale() const { return scale_; }
  double lambda() const { return lambda_; }
  double Lambda() const { return Lambda_; }
  bool isotropic() const;

  // Angular density at polar angle theta (n = 2); for n = 1 the two
  // directions carry a(0) = a(pi).
  double angular(double theta) const;
  // Same, for a unit direction given by cos(theta), sin(theta).
  double angular_dir(double c, double sn) const;

  double operator()(double y) const;
  double operator()(double y1, double y2) const;

  // Kernel y -> K(Q y) for Q = R(psi) (reflect: R(psi) diag(1,-1)).
  StableKernel composed(double psi, bool reflect) const;

 private:
  void measure_bounds();

  double s_ = 0.5;
  int n_ = 1;
  std::vector<double> coeffs_{1.0};
  double phase_ = 0.0;
  bool normalized_ = false;
  double scale_ = 1.0;
  double lambda_ = 1.0, Lambda_ = 1.0;
};

// c_{n,s} making c |y|^{-n-2s} the kernel of the operator with symbol |xi|^{2s}.
double fourier_normalization(int n, double s);

// Closed form 4^s Gamma(n/2+s) / (pi^{n/2} |Gamma(-s)|), for cross-checks only.
double fourier_normalization_closed(int n, double s);

}  // namespace fracdrift
