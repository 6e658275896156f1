#include "fracdrift/obstacle_solver.hpp"

#include "fracdrift/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fracdrift {

Obstacle Obstacle::bump(double height, double radius, double center) {
  if (!(radius > 0.0)) throw Error(Errc::ConfigError, "bump radius must be positive");
  Obstacle o;
  o.kind = Kind::Bump;
  o.height = height;
  o.radius = radius;
  o.center = center;
  return o;
}

Obstacle Obstacle::parabola(double height) {
  Obstacle o;
  o.kind = Kind::Parabola;
  o.height = height;
  return o;
}

double Obstacle::operator()(double x) const {
  if (kind == Kind::Bump) {
    double t = (x - center) / radius;
    if (std::abs(t) >= 1.0) return 0.0;
    return height * std::exp(1.0 - 1.0 / (1.0 - t * t));
  }
  const double floor = -0.1, eps = 0.02;
  double q = height - x * x;
  double z = (q - floor) / eps;
  return floor + eps * (z > 30.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)));
}

Eigen::VectorXd Obstacle::sample(const Grid1D& grid) const {
  Eigen::VectorXd v(grid.interior());
  for (int r = 0; r < grid.interior(); ++r) v(r) = (*this)(grid.node(r + 1));
  return v;
}

double complementarity_residual(const DiscreteOperator1D& op, const Eigen::VectorXd& u,
                                const Eigen::VectorXd& phi, const Eigen::VectorXd& f) {
  Eigen::VectorXd r = op.A * u;
  if (f.size() > 0) r -= f;
  double m = 0.0;
  for (int i = 0; i < r.size(); ++i) m = std::max(m, std::abs(std::min(r(i), u(i) - phi(i))));
  return m;
}

namespace {

// Solve with u = phi on the contact mask and A u = f elsewhere.
Eigen::VectorXd solve_fixed_set(const Eigen::MatrixXd& A, const Eigen::VectorXd& f,
                                const Eigen::VectorXd& phi, const std::vector<char>& in) {
  const int n = static_cast<int>(A.rows());
  std::vector<int> F, C;
  for (int i = 0; i < n; ++i) (in[i] ? C : F).push_back(i);
  Eigen::VectorXd u = phi;
  if (F.empty()) return u;
  const int m = static_cast<int>(F.size());
  Eigen::MatrixXd AF(m, m);
  Eigen::VectorXd rhs(m);
  for (int a = 0; a < m; ++a) {
    rhs(a) = f(F[a]);
    for (int c : C) rhs(a) -= A(F[a], c) * phi(c);
  }
  for (int b = 0; b < m; ++b)
    for (int a = 0; a < m; ++a) AF(a, b) = A(F[a], F[b]);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(AF);
  Eigen::VectorXd x = lu.solve(rhs);
  for (int it = 0; it < 2; ++it) x += lu.solve(rhs - AF * x);
  for (int a = 0; a < m; ++a) u(F[a]) = x(a);
  return u;
}

}  // namespace

FreeBoundaryResult solve_obstacle(const DiscreteOperator1D& op, const Eigen::VectorXd& phi,
                                  const Eigen::VectorXd& f_in, const ObstacleOptions& opt) {
  const Eigen::MatrixXd& A = op.A;
  const int n = static_cast<int>(A.rows());
  if (phi.size() != n) throw Error(Errc::ConfigError, "obstacle size does not match the grid");
  const Eigen::VectorXd f = f_in.size() > 0 ? f_in : Eigen::VectorXd::Zero(n);
  const Eigen::MatrixXd At = A.transpose();

  FreeBoundaryResult res;
  res.relaxation = opt.relaxation;
  Eigen::VectorXd u = phi.cwiseMax(0.0);

  double omega = opt.relaxation;
  double prev = std::numeric_limits<double>::infinity();
  double anchor = prev;
  int rises = 0;
  const int psor_budget = opt.polish ? std::min(opt.psor_sweeps, opt.max_sweeps) : opt.max_sweeps;
  double r = complementarity_residual(op, u, phi, f);
  for (int sweep = 0; sweep < psor_budget && r > opt.tol; ++sweep) {
    for (int i = 0; i < n; ++i) {
      double aii = A(i, i);
      double gs = u(i) + (f(i) - At.col(i).dot(u)) / aii;
      u(i) = std::max(phi(i), u(i) + omega * (gs - u(i)));
    }
    ++res.sweeps;
    r = complementarity_residual(op, u, phi, f);
    if (r > prev) {
      if (++rises >= 3 && omega > 1.0) {
        omega = 1.0;
        rises = 0;
      }
    } else {
      rises = 0;
    }
    prev = r;
    if (res.sweeps % opt.stall_window == 0) {
      if (!opt.polish && r > 0.99 * anchor)
        throw Error(Errc::ObstacleStall, "residual plateau at " + std::to_string(r));
      anchor = r;
    }
  }
  res.relaxation = omega;

  if (opt.polish) {
    const double c = A.diagonal().maxCoeff();
    std::vector<char> in(n, 0), last;
    Eigen::VectorXd lam = A * u - f;
    for (int i = 0; i < n; ++i) in[i] = lam(i) - c * (u(i) - phi(i)) > 0.0;
    for (int it = 0; it < 200; ++it) {
      u = solve_fixed_set(A, f, phi, in);
      ++res.polish_steps;
      lam = A * u - f;
      last = in;
      for (int i = 0; i < n; ++i) in[i] = lam(i) - c * (u(i) - phi(i)) > 0.0;
      if (in == last) break;
    }
    if (in != last) throw Error(Errc::ObstacleStall, "active-set iteration did not settle");
    r = complementarity_residual(op, u, phi, f);
  }
  if (!(r <= opt.tol)) throw Error(Errc::ObstacleStall, "complementarity residual " + std::to_string(r));

  res.u = u;
  res.w = u - phi;
  res.residual = r;
  const double ctol = opt.contact_tol * std::max(phi.cwiseAbs().maxCoeff(), 1e-300);
  for (int i = 0; i < n; ++i) {
    if (res.w(i) <= ctol) res.contact.push_back(i);
  }
  return res;
}

std::vector<BoundaryPoint> extract_free_boundary(const Eigen::VectorXd& w, const Grid1D& grid,
                                                 double s, double contact_tol) {
  const int n = static_cast<int>(w.size());
  std::vector<char> pos(n);
  int npos = 0;
  for (int i = 0; i < n; ++i) npos += pos[i] = w(i) > contact_tol;
  if (npos == 0 || npos == n) throw Error(Errc::NoFreeBoundary, "no transition between contact and positivity");

  const double e = 1.0 / (1.0 + s);
  std::vector<BoundaryPoint> out;
  auto fit = [&](int first, int side) {
    // least squares w^{1/(1+s)} = a + b t on four positive nodes
    double St = 0, Sy = 0, Stt = 0, Sty = 0;
    int m = 0;
    for (int k = 0; k < 4; ++k) {
      int r = first + side * k;
      if (r < 0 || r >= n || !pos[r]) break;
      double t = grid.node(r + 1), y = std::pow(w(r), e);
      St += t;
      Sy += y;
      Stt += t * t;
      Sty += t * y;
      ++m;
    }
    if (m < 2) return;
    double b = (m * Sty - St * Sy) / (m * Stt - St * St);
    double a = (Sy - b * St) / m;
    BoundaryPoint p;
    p.t = -a / b;
    p.side = side;
    p.c = std::pow(std::abs(b), 1.0 + s);
    out.push_back(p);
  };
  for (int i = 0; i + 1 < n; ++i) {
    if (!pos[i] && pos[i + 1]) fit(i + 1, +1);
    if (pos[i] && !pos[i + 1]) fit(i, -1);
  }
  if (out.empty()) throw Error(Errc::NoFreeBoundary, "transitions too close to fit");
  return out;
}

RegularityReport check_regular_point(const Eigen::VectorXd& w, const Grid1D& grid, double s,
                                     const BoundaryPoint& z, double window, double inner) {
  RegularityReport rep;
  rep.z = z.t;
  const int n = static_cast<int>(w.size());
  const double h = grid.h;
  std::vector<double> ld, lw, lr;
  rep.c = std::numeric_limits<double>::infinity();
  for (int r = 1; r + 1 < n; ++r) {
    double dist = z.side * (grid.node(r + 1) - z.t);
    if (!(dist > inner) || dist > window || !(w(r) > 0.0)) continue;
    double g = (w(r + 1) - w(r - 1)) / (2.0 * h);
    double ds = std::pow(dist, s);
    double ratio = z.side * g / ds;
    rep.c = std::min(rep.c, ratio);
    rep.C = std::max(rep.C, std::abs(g) / ds);
    ld.push_back(std::log(dist));
    lw.push_back(std::log(w(r)));
    lr.push_back(ratio > 0.0 ? std::log(ratio) : std::numeric_limits<double>::quiet_NaN());
    ++rep.nodes;
  }
  if (rep.nodes < 3) throw Error(Errc::EmptyWindow, "fewer than three positive nodes in the window");

  auto slope = [&](const std::vector<double>& y, double* r2) {
    const double m = static_cast<double>(ld.size());
    double mx = 0, my = 0;
    for (std::size_t k = 0; k < ld.size(); ++k) {
      mx += ld[k];
      my += y[k];
    }
    mx /= m;
    my /= m;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t k = 0; k < ld.size(); ++k) {
      sxx += (ld[k] - mx) * (ld[k] - mx);
      sxy += (ld[k] - mx) * (y[k] - my);
      syy += (y[k] - my) * (y[k] - my);
    }
    if (r2) *r2 = syy > 0 ? sxy * sxy / (sxx * syy) : 1.0;
    return sxy / sxx;
  };
  rep.exponent = slope(lw, &rep.goodness);
  rep.ratio_slope = rep.c > 0.0 ? slope(lr, nullptr) : std::numeric_limits<double>::quiet_NaN();
  rep.regular = rep.c > 0.0 && std::abs(rep.exponent - (1.0 + s)) <= 0.1;
  return rep;
}

}  // namespace fracdrift
