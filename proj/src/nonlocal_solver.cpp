#include "fracdrift/nonlocal_solver.hpp"

#include "fracdrift/errors.hpp"
#include "fracdrift/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace fracdrift {

Grid1D Grid1D::make(double lo, double hi, int N, int ext) {
  if (!(lo < hi)) throw Error(Errc::BadDomain, "grid needs lo < hi");
  if (N < 4) throw Error(Errc::BadDomain, "grid needs at least 4 cells");
  if (ext < 0) throw Error(Errc::BadDomain, "negative exterior width");
  Grid1D g;
  g.lo = lo;
  g.hi = hi;
  g.N = N;
  g.ext = ext;
  g.h = (hi - lo) / N;
  return g;
}

std::vector<double> Grid1D::interior_nodes() const {
  std::vector<double> x(N - 1);
  for (int i = 1; i < N; ++i) x[i - 1] = node(i);
  return x;
}

std::vector<double> Grid1D::exterior_nodes() const {
  std::vector<double> x;
  for (int j = -ext; j <= 0; ++j) x.push_back(node(j));
  for (int j = N; j <= N + ext; ++j) x.push_back(node(j));
  return x;
}

double Grid1D::dist(double x) const { return std::max(0.0, std::min(x - lo, hi - x)); }

namespace {

// column of exterior node j in E
int ext_col(const Grid1D& g, int j) { return j <= 0 ? j + g.ext : (g.ext + 1) + (j - g.N); }

struct HatTable {
  std::vector<double> near, far;  // k = 1..K: cell [k h, (k+1) h] from the row node
};

HatTable hat_table(double s, double a0, double h, int K) {
  const Rule& gl = gauss_legendre(16);
  HatTable t;
  t.near.assign(K + 1, 0.0);
  t.far.assign(K + 1, 0.0);
  const double sc = a0 * std::pow(h, -2.0 * s);
  for (int k = 1; k <= K; ++k) {
    double a = 0.0, b = 0.0;
    for (std::size_t q = 0; q < gl.size(); ++q) {
      double kv = std::pow(k + gl.x[q], -1.0 - 2.0 * s);
      a += gl.w[q] * (1.0 - gl.x[q]) * kv;
      b += gl.w[q] * gl.x[q] * kv;
    }
    t.near[k] = sc * a;
    t.far[k] = sc * b;
  }
  return t;
}

double omega(const Grid1D& g, double s, double x) {
  if (!(x > g.lo && x < g.hi)) return 0.0;
  return std::pow((x - g.lo) * (g.hi - x) / (g.hi - g.lo), s);
}

double omega_prime(const Grid1D& g, double s, double x) {
  double a = x - g.lo, c = g.hi - x;
  return s * omega(g, s, x) * (c - a) / (a * c);
}

// Quadratic-v coefficients of the |y| < h part for row i (weighted mode).
void near_part(const Grid1D& g, double s, double a0, int i, std::array<int, 3>& nodes,
               std::array<double, 3>& coef) {
  const int N = g.N;
  if (i == 1) nodes = {1, 2, 3};
  else if (i == N - 1) nodes = {N - 3, N - 2, N - 1};
  else nodes = {i - 1, i, i + 1};
  const double xi = g.node(i);
  double xn[3];
  for (int m = 0; m < 3; ++m) xn[m] = g.node(nodes[m]);
  auto lag = [&](int m, double x) {
    double v = 1.0;
    for (int q = 0; q < 3; ++q)
      if (q != m) v *= (x - xn[q]) / (xn[m] - xn[q]);
    return v;
  };
  const Rule& gl = gauss_legendre(24);
  const double e = 2.0 - 2.0 * s;
  const double Tmax = std::pow(g.h, e);
  const double wi = omega(g, s, xi);
  coef = {0.0, 0.0, 0.0};
  for (std::size_t q = 0; q < gl.size(); ++q) {
    double T = gl.x[q] * Tmax;
    double r = std::pow(T, 1.0 / e);
    double wr = gl.w[q] * Tmax / (e * r * r);
    double op = omega(g, s, xi + r), om = omega(g, s, xi - r);
    for (int m = 0; m < 3; ++m) {
      double F = 2.0 * wi * lag(m, xi) - op * lag(m, xi + r) - om * lag(m, xi - r);
      coef[m] += a0 * wr * F;
    }
  }
}

struct CellData {
  int Q = 0;
  std::vector<double> t;               // nodes on [0,1]
  std::vector<double> left, right;     // per cell k, per node: h w omega hat
};

CellData cell_data(const Grid1D& g, double s, int Q) {
  const Rule& gl = gauss_legendre(Q);
  CellData c;
  c.Q = Q;
  c.t = gl.x;
  c.left.assign(static_cast<std::size_t>(g.N) * Q, 0.0);
  c.right.assign(static_cast<std::size_t>(g.N) * Q, 0.0);
  for (int k = 1; k <= g.N - 2; ++k)
    for (int q = 0; q < Q; ++q) {
      double w = g.h * gl.w[q] * omega(g, s, g.node(k) + g.h * gl.x[q]);
      c.left[k * Q + q] = w * (1.0 - gl.x[q]);
      c.right[k * Q + q] = w * gl.x[q];
    }
  return c;
}

// boundary cells [lo, x_1] and [x_{N-1}, hi] with x = lo + h t^2, v constant
struct EdgeCell {
  std::vector<double> x, w;  // points and h w omega weights
};

EdgeCell edge_cell(const Grid1D& g, double s, bool left) {
  const Rule& gl = gauss_legendre(16);
  EdgeCell e;
  for (std::size_t q = 0; q < gl.size(); ++q) {
    double t = gl.x[q];
    double x = left ? g.lo + g.h * t * t : g.hi - g.h * t * t;
    e.x.push_back(x);
    e.w.push_back(gl.w[q] * 2.0 * t * g.h * omega(g, s, x));
  }
  return e;
}

bool near_cell(const Grid1D& g, int i, int k) {
  return std::abs(k - i) <= 8 || k <= 8 || k >= g.N - 9;
}

void add_drift_weighted(DiscreteOperator1D& op, int i, bool upwind) {
  const Grid1D& g = op.grid;
  const double b = op.b;
  const int r = i - 1, n = g.N - 1;
  if (upwind) {
    if (b > 0.0) {
      op.A(r, r) += b / g.h;
      if (r > 0) op.A(r, r - 1) -= b / g.h;
    } else {
      op.A(r, r) -= b / g.h;
      if (r + 1 < n) op.A(r, r + 1) += b / g.h;
    }
    return;
  }
  if (op.interp == Interpolation::boundary_weighted && i > 1 && i < g.N - 1) {
    double xi = g.node(i), wi = omega(g, op.s, xi);
    op.A(r, r) += b * omega_prime(g, op.s, xi) / wi;
    op.A(r, r + 1) += b * wi / (2.0 * g.h * omega(g, op.s, g.node(i + 1)));
    op.A(r, r - 1) -= b * wi / (2.0 * g.h * omega(g, op.s, g.node(i - 1)));
    return;
  }
  if (r + 1 < n) op.A(r, r + 1) += b / (2.0 * g.h);
  else op.E(r, ext_col(g, g.N)) += b / (2.0 * g.h);
  if (r > 0) op.A(r, r - 1) -= b / (2.0 * g.h);
  else op.E(r, ext_col(g, 0)) -= b / (2.0 * g.h);
}

void finish_drift(DiscreteOperator1D& op, const AssemblyOptions& opt) {
  const int n = op.grid.N - 1;
  op.worst_offdiag = 0.0;
  for (int i = 1; i <= op.grid.N - 1; ++i) {
    const int r = i - 1;
    if (op.b != 0.0) {
      Eigen::VectorXd saved = op.A.row(r).transpose();
      Eigen::VectorXd savedE = op.E.row(r).transpose();
      add_drift_weighted(op, i, false);
      bool bad = false;
      for (int j = std::max(0, r - 1); j <= std::min(n - 1, r + 1); ++j)
        if (j != r && op.A(r, j) > 0.0) bad = true;
      if (bad && opt.upwind_fallback) {
        op.A.row(r) = saved.transpose();
        op.E.row(r) = savedE.transpose();
        add_drift_weighted(op, i, true);
        op.upwind_rows.push_back(i);
      }
    }
    double dg = op.A(r, r);
    for (int j = 0; j < n; ++j)
      if (j != r && op.A(r, j) > 0.0) op.worst_offdiag = std::max(op.worst_offdiag, op.A(r, j) / dg);
  }
  op.monotone = op.worst_offdiag <= 1e-12;
}

void exterior_cells(DiscreteOperator1D& op, const HatTable& hat, int i, double* diag_sum) {
  const Grid1D& g = op.grid;
  const int r = i - 1;
  // left cells [x_j, x_{j+1}], j = -ext .. -1: nearer node j+1 at k = i - j - 1
  for (int j = -g.ext; j <= -1; ++j) {
    int k = i - j - 1;
    op.E(r, ext_col(g, j + 1)) -= hat.near[k];
    op.E(r, ext_col(g, j)) -= hat.far[k];
    *diag_sum += hat.near[k] + hat.far[k];
  }
  for (int j = g.N; j <= g.N + g.ext - 1; ++j) {
    int k = j - i;
    op.E(r, ext_col(g, j)) -= hat.near[k];
    op.E(r, ext_col(g, j + 1)) -= hat.far[k];
    *diag_sum += hat.near[k] + hat.far[k];
  }
}

void assemble_linear_row(DiscreteOperator1D& op, const HatTable& hat, int i) {
  const Grid1D& g = op.grid;
  const int r = i - 1;
  const double s = op.s, a0 = op.a0, h = g.h;
  double diag = 0.0;
  auto couple = [&](int j, double w) {
    if (j >= 1 && j <= g.N - 1) op.A(r, j - 1) -= w;
    else op.E(r, ext_col(g, j)) -= w;
    diag += w;
  };
  // right: cells [x_{i+k}, x_{i+k+1}], k >= 1, up to the lattice end
  for (int k = 1; i + k + 1 <= g.N + g.ext; ++k) {
    couple(i + k, hat.near[k]);
    couple(i + k + 1, hat.far[k]);
  }
  for (int k = 1; i - k - 1 >= -g.ext; ++k) {
    couple(i - k, hat.near[k]);
    couple(i - k - 1, hat.far[k]);
  }
  // |y| < h: Taylor with the second difference
  double c = a0 * std::pow(h, -2.0 * s) / (2.0 - 2.0 * s);
  couple(i + 1, c);
  couple(i - 1, c);
  double Rr = g.node(g.N + g.ext) - g.node(i), Rl = g.node(i) - g.node(-g.ext);
  op.tail(r) = a0 * (std::pow(Rr, -2.0 * s) + std::pow(Rl, -2.0 * s)) / (2.0 * s);
  op.A(r, r) += diag + op.tail(r);
}

DiscreteOperator1D init_operator(const StableKernel& K, const Grid1D& grid, double b,
                                 const AssemblyOptions& opt) {
  if (K.n() != 1) throw Error(Errc::BadDomain, "1D operator needs a 1D kernel");
  if (b != 0.0 && !(K.s() > 0.5)) throw Error(Errc::ConfigError, "drift requires s > 1/2");
  DiscreteOperator1D op;
  op.grid = grid;
  op.s = K.s();
  op.a0 = K.angular(0.0);
  op.b = b;
  op.interp = opt.interp;
  const int n = grid.N - 1;
  op.A = Eigen::MatrixXd::Zero(n, n);
  op.E = Eigen::MatrixXd::Zero(n, 2 * (grid.ext + 1));
  op.tail = Eigen::VectorXd::Zero(n);
  return op;
}

template <bool Reference>
DiscreteOperator1D assemble_impl(const StableKernel& K, const Grid1D& g, double b,
                                 const AssemblyOptions& opt) {
  DiscreteOperator1D op = init_operator(K, g, b, opt);
  const double s = op.s, a0 = op.a0, h = g.h;
  const int N = g.N;
  HatTable hat = hat_table(s, a0, h, N + 2 * g.ext + 2);

  if (opt.interp == Interpolation::linear) {
    if constexpr (Reference) {
      for (int i = 1; i < N; ++i) assemble_linear_row(op, hat, i);
    } else {
#pragma omp parallel for schedule(static)
      for (int i = 1; i < N; ++i) assemble_linear_row(op, hat, i);
    }
    finish_drift(op, opt);
    return op;
  }

  const double kexp = -1.0 - 2.0 * s;
  CellData c6 = cell_data(g, s, 6), c16 = cell_data(g, s, 16);
  EdgeCell eL = edge_cell(g, s, true), eR = edge_cell(g, s, false);
  // kernel tables over m = k - i in [-N, N]
  std::vector<double> T6, T16;
  if constexpr (!Reference) {
    T6.resize((2 * N + 1) * 6);
    T16.resize((2 * N + 1) * 16);
    const double hk = std::pow(h, kexp);
    for (int m = -N; m <= N; ++m) {
      for (int q = 0; q < 6; ++q) T6[(m + N) * 6 + q] = hk * std::pow(std::abs(m + c6.t[q]), kexp);
      for (int q = 0; q < 16; ++q) T16[(m + N) * 16 + q] = hk * std::pow(std::abs(m + c16.t[q]), kexp);
    }
  }
  std::vector<double> omn(N + 1);
  for (int j = 0; j <= N; ++j) omn[j] = omega(g, s, g.node(j));

  auto row = [&](int i) {
    const int r = i - 1;
    const double xi = g.node(i);
    std::vector<double> Wv(N + 1, 0.0);
    for (int k = 1; k <= N - 2; ++k) {
      if (k == i - 1 || k == i) continue;
      const bool nc = near_cell(g, i, k);
      const CellData& c = nc ? c16 : c6;
      const int Q = c.Q;
      double L = 0.0, R = 0.0;
      if constexpr (Reference) {
        const Rule& gl = gauss_legendre(Q);
        for (int q = 0; q < Q; ++q) {
          double x = g.node(k) + h * gl.x[q];
          double w = h * gl.w[q] * omega(g, s, x) * std::pow(std::abs(x - xi), kexp);
          L += w * (1.0 - gl.x[q]);
          R += w * gl.x[q];
        }
      } else {
        const double* T = nc ? &T16[(k - i + N) * 16] : &T6[(k - i + N) * 6];
        const double* cl = &c.left[k * Q];
        const double* cr = &c.right[k * Q];
        for (int q = 0; q < Q; ++q) {
          L += cl[q] * T[q];
          R += cr[q] * T[q];
        }
      }
      Wv[k] += a0 * L;
      Wv[k + 1] += a0 * R;
    }
    if (i != 1)
      for (std::size_t q = 0; q < eL.x.size(); ++q) Wv[1] += a0 * eL.w[q] * std::pow(xi - eL.x[q], kexp);
    if (i != N - 1)
      for (std::size_t q = 0; q < eR.x.size(); ++q) Wv[N - 1] += a0 * eR.w[q] * std::pow(eR.x[q] - xi, kexp);
    for (int j = 1; j <= N - 1; ++j) op.A(r, j - 1) -= Wv[j] / omn[j];

    std::array<int, 3> nodes;
    std::array<double, 3> coef;
    near_part(g, s, a0, i, nodes, coef);
    for (int m = 0; m < 3; ++m) op.A(r, nodes[m] - 1) += coef[m] / omn[nodes[m]];

    double ext_sum = 0.0;
    exterior_cells(op, hat, i, &ext_sum);
    double Rr = g.node(N + g.ext) - xi, Rl = xi - g.node(-g.ext);
    op.tail(r) = a0 * (std::pow(Rr, -2.0 * s) + std::pow(Rl, -2.0 * s)) / (2.0 * s);
    op.A(r, r) += a0 * 2.0 * std::pow(h, -2.0 * s) / (2.0 * s);
  };

  if constexpr (Reference) {
    for (int i = 1; i < N; ++i) row(i);
  } else {
#pragma omp parallel for schedule(dynamic, 16)
    for (int i = 1; i < N; ++i) row(i);
  }
  finish_drift(op, opt);
  return op;
}

}  // namespace

DiscreteOperator1D assemble_operator(const StableKernel& K, const Grid1D& grid, double b,
                                     const AssemblyOptions& opt) {
  return assemble_impl<false>(K, grid, b, opt);
}

DiscreteOperator1D assemble_operator_reference(const StableKernel& K, const Grid1D& grid, double b,
                                               const AssemblyOptions& opt) {
  return assemble_impl<true>(K, grid, b, opt);
}

Eigen::VectorXd DiscreteOperator1D::apply(const Eigen::VectorXd& u, const Eigen::VectorXd& g,
                                          double far) const {
  Eigen::VectorXd y = A * u - tail * far;
  if (g.size() > 0) y += E * g;
  return y;
}

DirichletSolver1D::DirichletSolver1D(const DiscreteOperator1D& op)
    : op_(&op), lu_(std::make_unique<Eigen::PartialPivLU<Eigen::MatrixXd>>(op.A)) {}

Eigen::VectorXd DirichletSolver1D::solve(const Eigen::VectorXd& f, const Eigen::VectorXd& g,
                                         double far) const {
  Eigen::VectorXd rhs = f + op_->tail * far;
  if (g.size() > 0) rhs -= op_->E * g;
  Eigen::VectorXd u = lu_->solve(rhs);
  const double scale = std::max(rhs.cwiseAbs().maxCoeff(), 1e-300);
  Eigen::VectorXd res = rhs - op_->A * u;
  for (int it = 0; it < 3 && res.cwiseAbs().maxCoeff() > 1e-12 * scale; ++it) {
    u += lu_->solve(res);
    res = rhs - op_->A * u;
  }
  residual_ = res.cwiseAbs().maxCoeff() / scale;
  if (!(residual_ <= 1e-10) && rhs.cwiseAbs().maxCoeff() > 0.0)
    throw Error(Errc::LinearSolveFailed, "residual " + std::to_string(residual_) + " after refinement");
  if (rhs.cwiseAbs().maxCoeff() == 0.0) residual_ = 0.0;
  return u;
}

Eigen::VectorXd solve_dirichlet(const DiscreteOperator1D& op, const Eigen::VectorXd& f,
                                const Eigen::VectorXd& g, double far) {
  DirichletSolver1D solver(op);
  return solver.solve(f, g, far);
}

GradientReport gradient(const Eigen::VectorXd& u, const Grid1D& grid, double s) {
  const int n = static_cast<int>(u.size());
  GradientReport rep;
  rep.grad.resize(n);
  const double h = grid.h;
  for (int r = 0; r < n; ++r) {
    double g;
    if (r == 0) g = (u(1) - u(0)) / h;
    else if (r == n - 1) g = (u(n - 1) - u(n - 2)) / h;
    else g = (u(r + 1) - u(r - 1)) / (2.0 * h);
    rep.grad[r] = g;
    double d = grid.dist(grid.node(r + 1));
    rep.sup_scaled = std::max(rep.sup_scaled, std::abs(g) * std::pow(d, 1.0 - s));
  }
  return rep;
}

// ---------------------------------------------------------------------------

Grid2D Grid2D::disk(Point2 c, double r, int M) {
  if (!(r > 0.0) || M < 4) throw Error(Errc::BadDomain, "disk grid needs r > 0 and M >= 4");
  Grid2D g;
  g.center = c;
  g.radius = r;
  g.M = M;
  g.h = r / M;
  GeneralizedDistance dist(DomainSpec::disk(c, r));
  const int W = 2 * M + 1;
  g.index.assign(W * W, -1);
  for (int j = -M; j <= M; ++j)
    for (int i = -M; i <= M; ++i) {
      Point2 x{c[0] + i * g.h, c[1] + j * g.h};
      if (std::hypot(i, j) < M - 1e-9) {
        g.index[(j + M) * W + (i + M)] = static_cast<int>(g.x.size());
        g.x.push_back(x);
        g.ij.push_back({i, j});
        g.d.push_back(dist(x));
      }
    }
  return g;
}

int Grid2D::at(int i, int j) const {
  if (i < -M || i > M || j < -M || j > M) return -1;
  return index[(j + M) * (2 * M + 1) + (i + M)];
}

namespace {

// second moments int_square y_k y_l K of the centred square of side h
struct SelfCell {
  double m11 = 0.0, m12 = 0.0, m22 = 0.0;
};

SelfCell self_cell(const StableKernel& K, double h) {
  const double s = K.s();
  SelfCell sc;
  const double q = M_PI / 4.0;
  for (int part = 0; part < 8; ++part) {
    for (const auto& nd : de_rule(part * q, (part + 1) * q, 7)) {
      double c = std::cos(nd.x), sn = std::sin(nd.x);
      double rho = 0.5 * h / std::max(std::abs(c), std::abs(sn));
      double a = K.angular_dir(c, sn);
      double m = nd.w * a * std::pow(rho, 2.0 - 2.0 * s) / (2.0 - 2.0 * s);
      sc.m11 += m * c * c;
      sc.m12 += m * c * sn;
      sc.m22 += m * sn * sn;
    }
  }
  return sc;
}

}  // namespace

DiscreteOperator2D assemble_operator_2d(const StableKernel& K, const Grid2D& g,
                                        std::array<double, 2> b) {
  if (K.n() != 2) throw Error(Errc::BadDomain, "2D operator needs a 2D kernel");
  if ((b[0] != 0.0 || b[1] != 0.0) && !(K.s() > 0.5))
    throw Error(Errc::ConfigError, "drift requires s > 1/2");
  DiscreteOperator2D op;
  op.grid = g;
  op.s = K.s();
  op.b = b;
  const int n = static_cast<int>(g.size());
  const double h = g.h, s = K.s();
  op.A = Eigen::MatrixXd::Zero(n, n);
  GeneralizedDistance dist(DomainSpec::disk(g.center, g.radius));

  const int Qf = 6, Qn = 12;
  const Rule& gf = gauss_legendre(Qf);
  const Rule& gn = gauss_legendre(Qn);
  // omega = d^s at cell quadrature points
  std::vector<double> omf(static_cast<std::size_t>(n) * Qf * Qf), omn(static_cast<std::size_t>(n) * Qn * Qn);
  std::vector<double> om(n);
#pragma omp parallel for schedule(static)
  for (int q = 0; q < n; ++q) {
    om[q] = std::pow(g.d[q], s);
    for (int a = 0; a < Qf; ++a)
      for (int c = 0; c < Qf; ++c) {
        Point2 x{g.x[q][0] + h * (gf.x[a] - 0.5), g.x[q][1] + h * (gf.x[c] - 0.5)};
        omf[(static_cast<std::size_t>(q) * Qf + a) * Qf + c] = std::pow(dist(x), s);
      }
    for (int a = 0; a < Qn; ++a)
      for (int c = 0; c < Qn; ++c) {
        Point2 x{g.x[q][0] + h * (gn.x[a] - 0.5), g.x[q][1] + h * (gn.x[c] - 0.5)};
        omn[(static_cast<std::size_t>(q) * Qn + a) * Qn + c] = std::pow(dist(x), s);
      }
  }
  SelfCell sc = self_cell(K, h);

  // bare kernel mass of the cell at lattice offset (di, dj) under the rule
  // used for that offset, with 2D prefix sums over [-2M, 2M]^2
  const int M = g.M, W = 4 * M + 1;
  auto cell_rule = [&](int di, int dj, int Q) {
    const Rule& gr = gauss_legendre(Q);
    double acc = 0.0;
    for (int a = 0; a < Q; ++a)
      for (int c = 0; c < Q; ++c) acc += gr.w[a] * gr.w[c] * K(h * (di + gr.x[a] - 0.5), h * (dj + gr.x[c] - 0.5));
    return acc * h * h;
  };
  auto table_rule = [&](int di, int dj) {
    int cheb = std::max(std::abs(di), std::abs(dj));
    if (cheb == 0) return 0.0;
    if (cheb <= 1) return cell_rule(di, dj, Qn);
    if (cheb <= 3) return cell_rule(di, dj, Qf);
    return K(h * di, h * dj) * h * h;
  };
  std::vector<double> pre(static_cast<std::size_t>(W + 1) * (W + 1), 0.0);
  for (int b2 = 0; b2 < W; ++b2)
    for (int a = 0; a < W; ++a)
      pre[(b2 + 1) * (W + 1) + a + 1] = table_rule(a - 2 * M, b2 - 2 * M) + pre[b2 * (W + 1) + a + 1] +
                                        pre[(b2 + 1) * (W + 1) + a] - pre[b2 * (W + 1) + a];
  auto box_sum = [&](int i0, int i1, int j0, int j1) {
    i0 += 2 * M, i1 += 2 * M + 1, j0 += 2 * M, j1 += 2 * M + 1;
    return pre[j1 * (W + 1) + i1] - pre[j0 * (W + 1) + i1] - pre[j1 * (W + 1) + i0] + pre[j0 * (W + 1) + i0];
  };
  // kernel mass outside the lattice box seen from x
  const double half = (M + 0.5) * h;
  auto outside_box = [&](const Point2& x) {
    double lx = x[0] - g.center[0], ly = x[1] - g.center[1];
    double corner[4] = {std::atan2(half - ly, half - lx), std::atan2(half - ly, -half - lx),
                        std::atan2(-half - ly, -half - lx) + 2 * M_PI, std::atan2(-half - ly, half - lx) + 2 * M_PI};
    double acc = 0.0;
    double lo = corner[3] - 2 * M_PI;
    for (int k = 0; k < 4; ++k) {
      double hi = corner[k];
      for (const auto& nd : de_rule(lo, hi, 6)) {
        double c = std::cos(nd.x), sn = std::sin(nd.x);
        double rho = 1e300;
        if (c > 0) rho = std::min(rho, (half - lx) / c);
        if (c < 0) rho = std::min(rho, (-half - lx) / c);
        if (sn > 0) rho = std::min(rho, (half - ly) / sn);
        if (sn < 0) rho = std::min(rho, (-half - ly) / sn);
        acc += nd.w * K.angular_dir(c, sn) * std::pow(rho, -2.0 * K.s()) / (2.0 * K.s());
      }
      lo = hi;
    }
    return acc;
  };

#pragma omp parallel for schedule(dynamic, 8)
  for (int p = 0; p < n; ++p) {
    const auto& xp = g.x[p];
    const int ip = g.ij[p][0], jp = g.ij[p][1];
    double diag = box_sum(-M - ip, M - ip, -M - jp, M - jp) + outside_box(xp);
    for (int q = 0; q < n; ++q) {
      if (q == p) continue;
      int di = g.ij[q][0] - ip, dj = g.ij[q][1] - jp;
      int cheb = std::max(std::abs(di), std::abs(dj));
      double w;
      if (cheb <= 3 || g.d[q] < 2.0 * h) {
        const bool fine = cheb <= 1;
        const Rule& gr = fine ? gn : gf;
        const int Q = fine ? Qn : Qf;
        const double* o = fine ? &omn[static_cast<std::size_t>(q) * Qn * Qn] : &omf[static_cast<std::size_t>(q) * Qf * Qf];
        double acc = 0.0, bare = 0.0;
        for (int a = 0; a < Q; ++a)
          for (int c = 0; c < Q; ++c) {
            double y1 = g.x[q][0] + h * (gr.x[a] - 0.5) - xp[0];
            double y2 = g.x[q][1] + h * (gr.x[c] - 0.5) - xp[1];
            double kw = gr.w[a] * gr.w[c] * K(y1, y2);
            acc += kw * o[a * Q + c];
            bare += kw;
          }
        w = acc * h * h / om[q];
        if (cheb > 3) diag += bare * h * h - K(h * di, h * dj) * h * h;
      } else {
        w = K(g.x[q][0] - xp[0], g.x[q][1] - xp[1]) * h * h;
      }
      op.A(p, q) -= w;
    }
    op.A(p, p) += diag;
    // self cell: -(1/2) sum M_kl d_kl u with second differences
    auto add = [&](int i, int j, double w) {
      int q = g.at(g.ij[p][0] + i, g.ij[p][1] + j);
      if (q >= 0) op.A(p, q) += w;
    };
    double cxx = -0.5 * sc.m11 / (h * h), cyy = -0.5 * sc.m22 / (h * h);
    add(1, 0, cxx);
    add(-1, 0, cxx);
    op.A(p, p) -= 2.0 * cxx + 2.0 * cyy;
    add(0, 1, cyy);
    add(0, -1, cyy);
    double cxy = -sc.m12 / (4.0 * h * h);
    if (cxy != 0.0) {
      add(1, 1, cxy);
      add(-1, -1, cxy);
      add(1, -1, -cxy);
      add(-1, 1, -cxy);
    }
  }

  // drift: central, upwind where the sign condition fails
  if (b[0] != 0.0 || b[1] != 0.0) {
    for (int p = 0; p < n; ++p) {
      int nb[4] = {g.at(g.ij[p][0] + 1, g.ij[p][1]), g.at(g.ij[p][0] - 1, g.ij[p][1]),
                   g.at(g.ij[p][0], g.ij[p][1] + 1), g.at(g.ij[p][0], g.ij[p][1] - 1)};
      double cen[4] = {b[0] / (2 * h), -b[0] / (2 * h), b[1] / (2 * h), -b[1] / (2 * h)};
      bool ok = true;
      for (int k = 0; k < 4; ++k)
        if (nb[k] >= 0 && op.A(p, nb[k]) + cen[k] > 0.0) ok = false;
      if (ok) {
        for (int k = 0; k < 4; ++k)
          if (nb[k] >= 0) op.A(p, nb[k]) += cen[k];
      } else {
        op.upwind_rows.push_back(p);
        for (int dim = 0; dim < 2; ++dim) {
          double bb = b[dim];
          int fwd = nb[2 * dim], bwd = nb[2 * dim + 1];
          op.A(p, p) += std::abs(bb) / h;
          int q = bb > 0 ? bwd : fwd;
          if (q >= 0) op.A(p, q) -= std::abs(bb) / h;
        }
      }
    }
  }
  for (int p = 0; p < n && op.monotone; ++p)
    for (int q = 0; q < n; ++q)
      if (q != p && op.A(p, q) > 1e-12 * op.A(p, p)) {
        op.monotone = false;
        break;
      }
  return op;
}

Eigen::VectorXd DiscreteOperator2D::apply(const Eigen::VectorXd& u) const {
  const int n = static_cast<int>(A.rows());
  Eigen::VectorXd y(n);
  // Row slabs keep every entry's summation order fixed, whatever the thread count.
  const int block = 512;
  const int nb = (n + block - 1) / block;
#pragma omp parallel for schedule(static)
  for (int k = 0; k < nb; ++k) {
    int r0 = k * block, m = std::min(block, n - r0);
    y.segment(r0, m).noalias() = A.middleRows(r0, m) * u;
  }
  return y;
}

Eigen::VectorXd DiscreteOperator2D::apply_serial(const Eigen::VectorXd& u) const {
  const int n = static_cast<int>(A.rows());
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
  for (int c = 0; c < n; ++c) {
    double uc = u(c);
    for (int r = 0; r < n; ++r) y(r) += A(r, c) * uc;
  }
  return y;
}

Eigen::VectorXd solve_dirichlet_2d(const DiscreteOperator2D& op, const Eigen::VectorXd& f,
                                   IterativeReport* rep, double tol, int maxit) {
  const int n = static_cast<int>(op.A.rows());
  Eigen::VectorXd dinv = op.A.diagonal().cwiseInverse();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  const double fn = f.norm();
  if (fn == 0.0) {
    if (rep) *rep = {0, 0.0};
    return x;
  }
  Eigen::VectorXd r = f, rhat = r, p = Eigen::VectorXd::Zero(n), v = Eigen::VectorXd::Zero(n);
  double rho = 1.0, alpha = 1.0, w = 1.0;
  int it = 0;
  double res = 1.0;
  for (; it < maxit; ++it) {
    double rho1 = rhat.dot(r);
    if (rho1 == 0.0) break;
    double beta = (rho1 / rho) * (alpha / w);
    p = r + beta * (p - w * v);
    Eigen::VectorXd ph = dinv.cwiseProduct(p);
    v = op.apply(ph);
    alpha = rho1 / rhat.dot(v);
    Eigen::VectorXd sv = r - alpha * v;
    Eigen::VectorXd sh = dinv.cwiseProduct(sv);
    Eigen::VectorXd t = op.apply(sh);
    w = t.dot(sv) / t.dot(t);
    x += alpha * ph + w * sh;
    r = sv - w * t;
    rho = rho1;
    res = (f - op.apply(x)).norm() / fn;
    if (res <= tol) break;
  }
  if (rep) *rep = {it + 1, res};
  if (!(res <= tol))
    throw Error(Errc::LinearSolveFailed, "BiCGSTAB stopped at relative residual " + std::to_string(res));
  return x;
}

std::vector<std::array<double, 2>> gradient_2d(const Eigen::VectorXd& u, const Grid2D& g) {
  std::vector<std::array<double, 2>> out(g.size());
  auto val = [&](int i, int j) {
    int q = g.at(i, j);
    return q >= 0 ? u(q) : 0.0;
  };
  for (std::size_t p = 0; p < g.size(); ++p) {
    int i = g.ij[p][0], j = g.ij[p][1];
    out[p] = {(val(i + 1, j) - val(i - 1, j)) / (2 * g.h), (val(i, j + 1) - val(i, j - 1)) / (2 * g.h)};
  }
  return out;
}

}  // namespace fracdrift
