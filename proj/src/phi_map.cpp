#include "fracdrift/phi_map.hpp"

#include "fracdrift/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <random>

namespace fracdrift {

std::vector<Monomial> monomial_basis(int n, int D) {
  std::vector<Monomial> b;
  for (int d = 0; d <= D; ++d) {
    if (n == 1) {
      b.push_back({d, 0});
      continue;
    }
    for (int a = d; a >= 0; --a) b.push_back({a, d - a});
  }
  return b;
}

int basis_index(int n, const Monomial& m) {
  if (n == 1) return m[0];
  int d = m[0] + m[1];
  return d * (d + 1) / 2 + (d - m[0]);
}

double PhiMatrix::norm_inf() const {
  return entries.cwiseAbs().rowwise().sum().maxCoeff();
}

double PhiMatrix::strict_upper_max() const {
  double m = 0.0;
  for (int j = 0; j < entries.cols(); ++j)
    for (int i = 0; i < j; ++i) m = std::max(m, std::abs(entries(i, j)));
  return m;
}

namespace {

std::vector<Point2> sample_cloud(int n, int D, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const int heights = 6;
  const int total = std::max(24, 4 * (D + 1));
  const int per = (total + heights - 1) / heights;
  std::vector<Point2> pts;
  for (int h = 1; h <= heights; ++h) {
    double xn = std::ldexp(1.0, -h);
    if (n == 1) {
      pts.push_back({xn, 0.0});
      continue;
    }
    for (int i = 0; i < per; ++i) pts.push_back({U(rng), xn});
  }
  return pts;
}

bool near_resonance(double s, double p, double window, long* m) {
  double e = p - s;
  double r = std::round(e);
  if (m) *m = static_cast<long>(r);
  return r >= 0.0 && std::abs(e - r) <= window;
}

}  // namespace

PhiMatrix build_phi(const StableKernel& kernel, double p, int D, const PhiOptions& opt) {
  const int n = kernel.n();
  const double s = kernel.s();
  PhiMatrix phi;
  phi.n = n;
  phi.s = s;
  phi.p = p;
  phi.degree = D;
  phi.basis = monomial_basis(n, D);
  const int N = static_cast<int>(phi.basis.size());
  phi.entries = Eigen::MatrixXd::Zero(N, N);

  for (const auto& m : phi.basis) check_log_resonance(s, p + m[0] + m[1]);

  // inside the resonance window the columns need not be pure powers; keep the
  // least-squares values and leave the verdict to the resonance flags
  const bool window = near_resonance(s, p, opt.resonance_window, nullptr);
  const auto pts = sample_cloud(n, D, opt.seed);
  const int P = static_cast<int>(pts.size());
  Eigen::MatrixXd vals(P, N);
  int nerr = 0;
#pragma omp parallel for collapse(2) schedule(dynamic) reduction(+ : nerr)
  for (int j = 0; j < N; ++j)
    for (int i = 0; i < P; ++i) {
      try {
        vals(i, j) = flat_power_value(kernel, p, phi.basis[j], pts[i]);
      } catch (...) {
        vals(i, j) = std::numeric_limits<double>::quiet_NaN();
        ++nerr;
      }
    }
  if (nerr > 0) throw Error(Errc::FitDiverged, "flat-case evaluation failed on the sample cloud");

  for (int j = 0; j < N; ++j) {
    const Monomial g = phi.basis[j];
    const int deg = g[0] + g[1];
    // image monomials x1^a x2^{deg-a}, a = 0..g[0], times x_n^{p-2s}
    const int nc = (n == 1) ? 1 : g[0] + 1;
    Eigen::MatrixXd A(P, nc);
    for (int i = 0; i < P; ++i)
      for (int a = 0; a < nc; ++a) {
        int a1 = (n == 1) ? 0 : a;
        double xn = (n == 1) ? pts[i][0] : pts[i][1];
        A(i, a) = (n == 1 ? std::pow(xn, deg) : std::pow(pts[i][0], a1) * std::pow(xn, deg - a1)) *
                  std::pow(xn, p - 2.0 * s);
      }
    Eigen::VectorXd scale = A.cwiseAbs().colwise().maxCoeff().transpose();
    for (int a = 0; a < nc; ++a) A.col(a) /= scale(a);
    Eigen::VectorXd y = vals.col(j);
    Eigen::VectorXd c = A.colPivHouseholderQr().solve(y);
    double res = (A * c - y).cwiseAbs().maxCoeff() / std::max(y.cwiseAbs().maxCoeff(), 1e-300);
    phi.fit_residual = std::max(phi.fit_residual, res);
    if (res > opt.fit_tol && !window)
      throw Error(Errc::FitDiverged, "column " + std::to_string(j) + " fit residual " +
                                         std::to_string(res));
    for (int a = 0; a < nc; ++a) {
      Monomial tgt = (n == 1) ? Monomial{deg, 0} : Monomial{a, deg - a};
      phi.entries(basis_index(n, tgt), j) = c(a) / scale(a);
    }
  }

  const double nrm = phi.norm_inf();
  phi.diag_min = phi.entries.diagonal().cwiseAbs().minCoeff();
  for (int j = 0; j < N; ++j)
    if (window || std::abs(phi.entries(j, j)) < opt.diag_threshold * nrm) phi.resonance_flags.push_back(j);
  return phi;
}

PsiMatrix invert_phi(const PhiMatrix& phi, double diag_threshold, double resonance_window) {
  const double nrm = phi.norm_inf();
  long m = 0;
  const bool window = near_resonance(phi.s, phi.p, resonance_window, &m);
  const int N = static_cast<int>(phi.entries.rows());
  for (int j = 0; j < N; ++j) {
    if (window || std::abs(phi.entries(j, j)) < diag_threshold * nrm) {
      long mm = static_cast<long>(std::round(phi.p - phi.s));
      throw Error(Errc::ResonantDiagonal,
                  "diagonal entry " + std::to_string(j) + " is resonant (|Phi_jj| = " +
                      std::to_string(std::abs(phi.entries(j, j))) + ")",
                  j, window ? m : mm);
    }
  }
  PsiMatrix psi;
  psi.basis = phi.basis;
  Eigen::MatrixXd L = phi.entries.triangularView<Eigen::Lower>();
  psi.entries = L.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(N, N));
  // one step of refinement against the full matrix
  Eigen::MatrixXd R = Eigen::MatrixXd::Identity(N, N) - psi.entries * phi.entries;
  psi.entries += R * psi.entries;
  return psi;
}

Eigen::MatrixXd composition_matrix(const Eigen::Matrix2d& Q, int D) {
  const auto basis = monomial_basis(2, D);
  const int N = static_cast<int>(basis.size());
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(N, N);
  // (Q00 y1 + Q01 y2)^a (Q10 y1 + Q11 y2)^b as a dense coefficient grid c[i][k] of y1^i y2^k
  auto mul = [D](const std::vector<std::vector<double>>& f, double u, double v) {
    std::vector<std::vector<double>> g(D + 1, std::vector<double>(D + 1, 0.0));
    for (int i = 0; i <= D; ++i)
      for (int k = 0; i + k <= D; ++k) {
        if (f[i][k] == 0.0) continue;
        if (i + k + 1 > D) continue;
        g[i + 1][k] += u * f[i][k];
        g[i][k + 1] += v * f[i][k];
      }
    return g;
  };
  for (int j = 0; j < N; ++j) {
    std::vector<std::vector<double>> f(D + 1, std::vector<double>(D + 1, 0.0));
    f[0][0] = 1.0;
    for (int t = 0; t < basis[j][0]; ++t) f = mul(f, Q(0, 0), Q(0, 1));
    for (int t = 0; t < basis[j][1]; ++t) f = mul(f, Q(1, 0), Q(1, 1));
    for (int i = 0; i <= D; ++i)
      for (int k = 0; i + k <= D; ++k)
        if (f[i][k] != 0.0) C(basis_index(2, {i, k}), j) = f[i][k];
  }
  return C;
}

PhiMatrix rotate_phi(const StableKernel& kernel, double p, int D, const std::array<double, 2>& e,
                     const Eigen::Matrix2d& Q, const PhiOptions& opt) {
  if (kernel.n() != 2) throw Error(Errc::BadFrame, "rotations need n = 2");
  double orth = (Q.transpose() * Q - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff();
  if (orth > 1e-12) throw Error(Errc::BadFrame, "Q is not orthogonal");
  if (std::abs(Q(0, 1) - e[0]) > 1e-12 || std::abs(Q(1, 1) - e[1]) > 1e-12)
    throw Error(Errc::BadFrame, "Q e_n differs from e");
  const bool reflect = Q.determinant() < 0.0;
  const double psi = std::atan2(Q(1, 0), Q(0, 0));
  PhiMatrix base = build_phi(kernel.composed(psi, reflect), p, D, opt);
  PhiMatrix out = base;
  out.entries = composition_matrix(Q.transpose(), D) * base.entries * composition_matrix(Q, D);
  out.diag_min = out.entries.diagonal().cwiseAbs().minCoeff();
  return out;
}

double eval_poly(const std::vector<Monomial>& basis, const Eigen::VectorXd& coeff, const Point2& x) {
  double v = 0.0;
  for (std::size_t j = 0; j < basis.size(); ++j)
    v += coeff(j) * std::pow(x[0], basis[j][0]) * std::pow(x[1], basis[j][1]);
  return v;
}

std::string phi_to_json(const PhiMatrix& phi) {
  nlohmann::ordered_json j;
  j["n"] = phi.n;
  j["s"] = phi.s;
  j["p"] = phi.p;
  j["degree"] = phi.degree;
  auto& b = j["basis"] = nlohmann::ordered_json::array();
  for (const auto& m : phi.basis) b.push_back(phi.n == 1 ? nlohmann::ordered_json{m[0]} : nlohmann::ordered_json{m[0], m[1]});
  auto& e = j["entries"] = nlohmann::ordered_json::array();
  for (int r = 0; r < phi.entries.rows(); ++r) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (int c = 0; c < phi.entries.cols(); ++c) row.push_back(phi.entries(r, c));
    e.push_back(row);
  }
  j["diag_min"] = phi.diag_min;
  j["resonance_flags"] = phi.resonance_flags;
  j["fit_residual"] = phi.fit_residual;
  return j.dump(2) + "\n";
}

}  // namespace fracdrift
