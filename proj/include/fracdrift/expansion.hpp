#pragma once

#include "fracdrift/distance.hpp"
#include "fracdrift/kernel.hpp"
#include "fracdrift/nonlocal_solver.hpp"

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace fracdrift {

struct LadderEntry {
  int k = 0, l = 0;
  double exponent = 0.0;   // s + k (2s - 1) + l
  bool resonant = false;   // exponent - s or exponent - 2s is a natural number (k >= 1)
  bool collision = false;  // coincides with another entry within 1e-9
};

struct ExponentLadder {
  double s = 0.0, epsilon0 = 0.0, beta = 0.0;
  std::vector<LadderEntry> entries;  // sorted by exponent, then k

  bool has_collision() const;
  // Distinct exponents in increasing order.
  std::vector<double> exponents() const;
  // Smallest exponent beyond the budget (next rung).
  double next_exponent() const;
};

ExponentLadder ladder(double s, double beta);

// u sampled against the distance to a boundary point.
struct ProfileSamples {
  std::vector<double> d, u;
};

// Nodes of a 1D solution ordered by distance to lo (from_lo) or hi.
ProfileSamples normal_profile(const Eigen::VectorXd& u, const Grid1D& grid, bool from_lo = true);

struct FitWindow {
  double lo = 0.0, hi = 0.2;
  // [max(10h, h^0.8), 0.2]
  static FitWindow standard(double h);
};

struct FitOptions {
  double max_condition = 1e8;
  int min_bands = 3;
  bool peel = false;            // sequential peeling instead of IllConditionedLadder
  double probe_exponent = 0.0;  // > 0: add the coefficient change from one more rung to the uncertainty
};

struct ExpansionFit {
  double s = 0.0;
  std::vector<double> exponents;
  std::vector<double> coeff;
  std::vector<double> uncertainty;
  double residual_decay_exponent = 0.0;  // +inf when the residual is at roundoff level
  double condition_number = 0.0;
  FitWindow window;
  int samples = 0, bands = 0;
  bool peeled = false;

  // |c_i| below three times its uncertainty.
  bool statistically_zero(std::size_t i) const;
  int index_of(double exponent, double tol = 1e-9) const;
  double eval(double d) const;
};

ExpansionFit fit_expansion(const ProfileSamples& prof, double s, const std::vector<double>& exponents,
                           const FitWindow& window, const FitOptions& opt = {});
// Ladder exponents, with the next rung as truncation probe.
ExpansionFit fit_expansion(const ProfileSamples& prof, const ExponentLadder& lad, const FitWindow& window,
                           FitOptions opt = {});

struct CorrectionFit {
  std::vector<double> exponents;  // s followed by the fitted free exponents, ascending
  std::vector<double> coeff;
  double residual = 0.0;          // weighted RMS of u/d^s
};

// Variable projection over `terms` free exponents in (s, 4); the first of them
// is the leading correction to c d^s.
CorrectionFit first_correction(const ProfileSamples& prof, double s, const FitWindow& window,
                               int terms = 3);

struct HolderEstimate {
  double exponent = 0.0;   // reported value
  double raw_slope = 0.0;  // log-log slope of osc(r)
  double two_term = 0.0;   // alpha of osc ~ A r^alpha + B r^{2 alpha}
  bool saturated = false;  // raw slope at or beyond the resolvable range
  std::vector<double> radii, osc;
};

struct HolderOptions {
  double saturation = 0.9;  // raw slopes above this are reported as window-saturated
  double max_exponent = 1.0;
};

// osc(r) = sup_{d <= r} |g - gz| over dyadic r in the window.
HolderEstimate holder_exponent(const ProfileSamples& g, double gz, const FitWindow& window,
                               const HolderOptions& opt = {});

struct TangentialReport {
  std::vector<double> arc;          // boundary parameter of each sample
  std::vector<double> value;        // Q_z^{00}
  std::vector<double> difference;   // top-order divided differences
  int order = 0;
  double max_difference = 0.0;
  double exponent = 0.0;            // Hoelder exponent of the top difference along the boundary
  bool saturated = false;
};

// Uniformly spaced samples of z -> Q_z along the boundary (periodic when closed).
TangentialReport tangential_regularity(const std::vector<double>& arc, const std::vector<double>& Q,
                                       int order, bool closed);

// Boundary coefficients Q_z^{00} on a disk: nodes within a tube around the inward normal at
// each angle are fitted against the given exponents.
std::vector<ExpansionFit> disk_normal_fits(const Eigen::VectorXd& u, const Grid2D& grid, double s,
                                           const std::vector<double>& angles,
                                           const std::vector<double>& exponents, const FitWindow& window,
                                           const FitOptions& opt = {});

struct FactorizationResult {
  std::vector<double> t;       // distances along the inward normal
  std::vector<double> value;   // L(eta d^p) at those points
  double phi = 0.0;            // leading coefficient against d^{p-2s}
  double remainder_exponent = 0.0;  // log-log slope of |value - phi d^{p-2s}|
  double max_error = 0.0;      // largest quadrature error estimate
};

// Direct quadrature of L(eta d^p) at z + t nu. With dist == nullptr the domain is
// the half-space {x_n > 0} and d = x_n.
FactorizationResult singular_factorization(const StableKernel& K, const GeneralizedDistance* dist,
                                           const std::function<double(const Point2&)>& eta, double p,
                                           const Point2& z, const Point2& nu, const std::vector<double>& t);

}  // namespace fracdrift
