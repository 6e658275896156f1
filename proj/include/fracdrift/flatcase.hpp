#pragma once

#include "fracdrift/kernel.hpp"

#include <array>
#include <functional>
#include <string>
#include <vector>

namespace fracdrift {

struct CpOptions {
  double delta = 1e-3;             // Taylor region |r| < delta
  double r_tail = 1e4;             // analytic tail beyond this radius
  double resonance_window = 1e-3;  // |p - 2s - m| below this is LogResonance
};

struct CpValue {
  double value = 0.0;
  double error_estimate = 0.0;
};

// c_p with 1/4 int (2 - (1+r)_+^p - (1-r)_+^p) |r|^{-1-2s} dr = c_p, read as a
// Hadamard finite part at infinity when p > 2s.
CpValue compute_cp(double s, double p, const CpOptions& opt = {});

// Throws LogResonance if p - 2s is within the window of a nonnegative integer.
void check_log_resonance(double s, double p, double window = 1e-3);

struct CpScanRow {
  double p = 0.0, cp = 0.0, err = 0.0;
  std::string flags;
};

std::vector<CpScanRow> scan_cp(double s, double p_min, double p_max, double step,
                               const CpOptions& opt = {});

// Sign changes of the scan; values with |c| <= zero_tol * max|c| count as zero
// and a change across a zero is located at that zero.
struct SignChange {
  double p_lo, p_hi;  // bracket (equal when located at a zero)
};
std::vector<SignChange> sign_changes(const std::vector<CpScanRow>& rows, double zero_tol = 1e-8);

// int_{S^{n-1}} |theta_dir|^{2s} a(theta) dtheta. dir defaults to the last coordinate.
double angular_moment(const StableKernel& k, int dir = -1);
double angular_moment(const std::function<double(double)>& a, int n, double s, int dir = -1);

// c~_p for an odd angular function a(theta) (theta polar angle; n = 1 uses 0 and pi).
double compute_cp_tilde(const std::function<double(double)>& odd_a, int n, double s, double p);

struct GeneralizedEvaluation {
  int k = 0;
  std::vector<double> cutoff_radii;
  // per radius, per evaluation point
  std::vector<std::vector<double>> fitted_polynomials;  // p_R(x)
  std::vector<std::vector<double>> limit_values;        // f_R(x)
  std::vector<double> limit;                             // extrapolated f(x)
  double spread = 0.0;                                   // relative
};

using Point2 = std::array<double, 2>;

// L(x^gamma (x_n)_+^p) in the generalized sense at points with x_n > 0.
// n = 1 uses gamma[0] and x[0]. k < 0 selects floor(|gamma| + p - 2s) + 1.
GeneralizedEvaluation eval_flat_power(const StableKernel& kernel, double p,
                                      std::array<int, 2> gamma,
                                      const std::vector<Point2>& xs, int k = -1,
                                      double spread_tol = 1e-5);

// Canonical homogeneous representative of the generalized value at one point.
double flat_power_value(const StableKernel& kernel, double p, std::array<int, 2> gamma,
                        const Point2& x);

}  // namespace fracdrift
