#include "fracdrift/quadrature.hpp"

#include <Eigen/Dense>

#include <map>
#include <memory>
#include <mutex>

namespace fracdrift {

namespace {

Rule golub_welsch(int n) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    double b = k / std::sqrt(4.0 * k * k - 1.0);
    J(k, k - 1) = b;
    J(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  Rule r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < n; ++i) {
    double t = es.eigenvalues()(i);
    double v = es.eigenvectors()(0, i);
    r.x[i] = 0.5 * (t + 1.0);
    r.w[i] = v * v;  // 2 v^2 on [-1,1], halved
  }
  // symmetrize to kill eigen-solver noise
  for (int i = 0; i < n / 2; ++i) {
    int j = n - 1 - i;
    double x = 0.5 * (r.x[i] + 1.0 - r.x[j]);
    double w = 0.5 * (r.w[i] + r.w[j]);
    r.x[i] = x;
    r.x[j] = 1.0 - x;
    r.w[i] = r.w[j] = w;
  }
  if (n % 2) r.x[n / 2] = 0.5;
  return r;
}

}  // namespace

const Rule& gauss_legendre(int n) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<Rule>> cache;
  std::lock_guard<std::mutex> lk(mu);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<Rule>(golub_welsch(n));
  return *slot;
}

std::vector<DeNode> de_rule(double a, double b, int level) {
  const double h = std::ldexp(1.0, -level);
  const double L = b - a;
  const double hp = 0.5 * M_PI;
  std::vector<DeNode> out;
  const int K = static_cast<int>(std::ceil(3.2 / h));
  out.reserve(2 * K + 1);
  for (int k = -K; k <= K; ++k) {
    double t = k * h;
    double u = hp * std::sinh(t);
    double c = std::cosh(u);
    double w = h * hp * std::cosh(t) / (c * c);
    double da = L / (1.0 + std::exp(-2.0 * u));
    double db = L / (1.0 + std::exp(2.0 * u));
    if (da <= 0.0 || db <= 0.0) continue;
    double wl = 0.5 * L * w;
    if (wl < 1e-300) continue;
    out.push_back({a + da, wl, da, db});
  }
  return out;
}

}  // namespace fracdrift
