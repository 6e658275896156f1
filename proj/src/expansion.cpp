#include "fracdrift/expansion.hpp"

#include "fracdrift/errors.hpp"
#include "fracdrift/quadrature.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace fracdrift {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool near_natural(double v, double tol = 1e-9) {
  double r = std::round(v);
  return r >= 0.0 && std::abs(v - r) <= tol;
}

}  // namespace

// ---------------------------------------------------------------------------
// ladder

bool ExponentLadder::has_collision() const {
  return std::any_of(entries.begin(), entries.end(), [](const LadderEntry& e) { return e.collision; });
}

std::vector<double> ExponentLadder::exponents() const {
  std::vector<double> out;
  for (const auto& e : entries)
    if (out.empty() || e.exponent - out.back() > 1e-9) out.push_back(e.exponent);
  return out;
}

double ExponentLadder::next_exponent() const {
  double best = kInf;
  const int kmax = static_cast<int>(std::ceil((beta + 2.0) / epsilon0)) + 1;
  for (int k = 0; k <= kmax; ++k)
    for (int l = 0; l <= static_cast<int>(beta) + 2; ++l) {
      double lvl = k * epsilon0 + l;
      if (lvl > beta - 1.0 + 1e-12) best = std::min(best, s + lvl);
    }
  return best;
}

ExponentLadder ladder(double s, double beta) {
  if (!(s > 0.5 && s < 1.0)) throw Error(Errc::ConfigError, "ladder needs s in (1/2, 1)");
  if (!(beta > 1.0)) throw Error(Errc::ConfigError, "ladder needs beta > 1");
  ExponentLadder L;
  L.s = s;
  L.epsilon0 = 2.0 * s - 1.0;
  L.beta = beta;
  const double budget = beta - 1.0 + 1e-12;
  for (int k = 0; k * L.epsilon0 <= budget; ++k)
    for (int l = 0; k * L.epsilon0 + l <= budget; ++l) {
      LadderEntry e;
      e.k = k;
      e.l = l;
      e.exponent = s + k * L.epsilon0 + l;
      if (k >= 1) e.resonant = near_natural(e.exponent - s) || near_natural(e.exponent - 2.0 * s);
      L.entries.push_back(e);
    }
  std::sort(L.entries.begin(), L.entries.end(), [](const LadderEntry& a, const LadderEntry& b) {
    return a.exponent != b.exponent ? a.exponent < b.exponent : a.k < b.k;
  });
  for (std::size_t i = 0; i + 1 < L.entries.size(); ++i)
    if (L.entries[i + 1].exponent - L.entries[i].exponent <= 1e-9)
      L.entries[i].collision = L.entries[i + 1].collision = true;
  return L;
}

// ---------------------------------------------------------------------------
// fits

ProfileSamples normal_profile(const Eigen::VectorXd& u, const Grid1D& grid, bool from_lo) {
  ProfileSamples p;
  const int n = static_cast<int>(u.size());
  for (int k = 0; k < n; ++k) {
    int r = from_lo ? k : n - 1 - k;
    double x = grid.node(r + 1);
    p.d.push_back(from_lo ? x - grid.lo : grid.hi - x);
    p.u.push_back(u(r));
  }
  return p;
}

FitWindow FitWindow::standard(double h) { return {std::max(10.0 * h, std::pow(h, 0.8)), 0.2}; }

bool ExpansionFit::statistically_zero(std::size_t i) const {
  return std::abs(coeff.at(i)) < 3.0 * uncertainty.at(i);
}

int ExpansionFit::index_of(double e, double tol) const {
  for (std::size_t i = 0; i < exponents.size(); ++i)
    if (std::abs(exponents[i] - e) <= tol) return static_cast<int>(i);
  return -1;
}

double ExpansionFit::eval(double d) const {
  double v = 0.0;
  for (std::size_t i = 0; i < exponents.size(); ++i) v += coeff[i] * std::pow(d, exponents[i]);
  return v;
}

namespace {

struct Windowed {
  std::vector<double> d, u, w;
  std::vector<int> band;
  int bands = 0;
};

Windowed select(const ProfileSamples& prof, const FitWindow& win) {
  Windowed W;
  for (std::size_t i = 0; i < prof.d.size(); ++i)
    if (prof.d[i] >= win.lo && prof.d[i] <= win.hi) {
      W.d.push_back(prof.d[i]);
      W.u.push_back(prof.u[i]);
    }
  if (W.d.empty()) return W;
  const double dmin = *std::min_element(W.d.begin(), W.d.end());
  std::vector<int> count;
  for (double d : W.d) {
    int b = static_cast<int>(std::floor(std::log2(d / dmin) + 1e-12));
    W.band.push_back(b);
    if (b >= static_cast<int>(count.size())) count.resize(b + 1, 0);
    ++count[b];
  }
  for (int c : count) W.bands += c > 0;
  for (int b : W.band) W.w.push_back(1.0 / std::sqrt(static_cast<double>(count[b])));
  return W;
}

struct LinearFit {
  Eigen::VectorXd c, unc;
  double cond = 0.0;
  double rms = 0.0;
};

// Weighted LS of u/d^s on d^{e_i - s} with normalized columns.
LinearFit linear_fit(const Windowed& W, double s, const std::vector<double>& ex) {
  const int m = static_cast<int>(W.d.size()), k = static_cast<int>(ex.size());
  Eigen::MatrixXd A(m, k);
  Eigen::VectorXd y(m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < k; ++j) A(i, j) = std::pow(W.d[i], ex[j] - s) * W.w[i];
    y(i) = W.u[i] / std::pow(W.d[i], s) * W.w[i];
  }
  Eigen::VectorXd sc = A.colwise().norm().transpose();
  for (int j = 0; j < k; ++j) A.col(j) /= sc(j);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  LinearFit f;
  f.cond = sv(k - 1) > 0.0 ? sv(0) / sv(k - 1) : kInf;
  Eigen::VectorXd cn = svd.solve(y);
  Eigen::VectorXd r = y - A * cn;
  f.rms = std::sqrt(r.squaredNorm() / m);
  // pseudo-inverse rows propagate |r|
  Eigen::MatrixXd G = svd.matrixV() * sv.cwiseInverse().asDiagonal() * svd.matrixU().transpose();
  Eigen::VectorXd prop = G.cwiseAbs() * r.cwiseAbs();
  f.c = cn.cwiseQuotient(sc);
  f.unc = prop.cwiseQuotient(sc);
  return f;
}

double residual_decay(const ProfileSamples& prof, const FitWindow& win, const ExpansionFit& fit) {
  // band maxima of |u - model| over dyadic bands of the window
  std::vector<double> lx, ly;
  double top = 0.0;
  for (double b = win.lo; b < win.hi; b *= 2.0) {
    double hi = std::min(2.0 * b, win.hi), rmax = 0.0, umax = 0.0;
    int cnt = 0;
    for (std::size_t i = 0; i < prof.d.size(); ++i) {
      double d = prof.d[i];
      if (d < b || d >= hi) continue;
      rmax = std::max(rmax, std::abs(prof.u[i] - fit.eval(d)));
      umax = std::max(umax, std::abs(prof.u[i]));
      ++cnt;
    }
    top = std::max(top, umax);
    if (cnt == 0 || rmax <= 1e-12 * umax) continue;
    lx.push_back(std::log(std::sqrt(b * hi)));
    ly.push_back(std::log(rmax));
  }
  if (lx.size() < 2) return kInf;
  double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / lx.size();
  double my = std::accumulate(ly.begin(), ly.end(), 0.0) / ly.size();
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  return sxy / sxx;
}

}  // namespace

ExpansionFit fit_expansion(const ProfileSamples& prof, double s, const std::vector<double>& exponents,
                           const FitWindow& window, const FitOptions& opt) {
  if (exponents.empty()) throw Error(Errc::ConfigError, "no exponents to fit");
  Windowed W = select(prof, window);
  const int k = static_cast<int>(exponents.size());
  if (W.bands < opt.min_bands || static_cast<int>(W.d.size()) < k + 2)
    throw Error(Errc::InsufficientWindow, "window [" + std::to_string(window.lo) + ", " +
                                              std::to_string(window.hi) + "] holds " +
                                              std::to_string(W.bands) + " bands");
  ExpansionFit fit;
  fit.s = s;
  fit.exponents = exponents;
  fit.window = window;
  fit.samples = static_cast<int>(W.d.size());
  fit.bands = W.bands;

  LinearFit lf = linear_fit(W, s, exponents);
  fit.condition_number = lf.cond;
  if (lf.cond <= opt.max_condition) {
    fit.coeff.assign(lf.c.data(), lf.c.data() + k);
    fit.uncertainty.assign(lf.unc.data(), lf.unc.data() + k);
    if (opt.probe_exponent > 0.0) {
      auto ex2 = exponents;
      ex2.push_back(opt.probe_exponent);
      LinearFit lp = linear_fit(W, s, ex2);
      if (lp.cond <= opt.max_condition)
        for (int j = 0; j < k; ++j) fit.uncertainty[j] += std::abs(lp.c(j) - lf.c(j));
    }
  } else if (opt.peel) {
    // leading term on the inner half of the bands, subtract, repeat
    fit.peeled = true;
    Windowed R = W;
    for (int j = 0; j < k; ++j) {
      const int keep = std::max(1, (W.bands + 1) / 2);
      Windowed inner;
      const int top = *std::max_element(R.band.begin(), R.band.end());
      const int cut = j + 1 < k ? keep : top + 1;
      for (std::size_t i = 0; i < R.d.size(); ++i)
        if (R.band[i] < cut) {
          inner.d.push_back(R.d[i]);
          inner.u.push_back(R.u[i]);
          inner.w.push_back(R.w[i]);
          inner.band.push_back(R.band[i]);
        }
      std::vector<double> ex{exponents[j]};
      if (j + 1 < k) ex.push_back(exponents[j + 1]);
      LinearFit lp = linear_fit(inner, s, ex);
      fit.coeff.push_back(lp.c(0));
      fit.uncertainty.push_back(lp.unc(0));
      for (std::size_t i = 0; i < R.d.size(); ++i) R.u[i] -= lp.c(0) * std::pow(R.d[i], exponents[j]);
    }
  } else {
    throw Error(Errc::IllConditionedLadder,
                "condition number " + std::to_string(lf.cond) + " exceeds " + std::to_string(opt.max_condition));
  }
  fit.residual_decay_exponent = residual_decay(prof, window, fit);
  return fit;
}

ExpansionFit fit_expansion(const ProfileSamples& prof, const ExponentLadder& lad, const FitWindow& window,
                           FitOptions opt) {
  if (opt.probe_exponent == 0.0) opt.probe_exponent = lad.next_exponent();
  return fit_expansion(prof, lad.s, lad.exponents(), window, opt);
}

// ---------------------------------------------------------------------------
// variable projection for the leading correction

namespace {

struct VarProContext {
  const Windowed* W;
  double s;
  int terms;
};

double varpro_objective(const std::vector<double>& e, const VarProContext& ctx) {
  std::vector<double> ex{ctx.s};
  for (double v : e) {
    if (!(v > ctx.s + 0.02) || v > 4.0) return 1e30;
    for (double q : ex)
      if (std::abs(v - q) < 0.02) return 1e30;
    ex.push_back(v);
  }
  LinearFit f = linear_fit(*ctx.W, ctx.s, ex);
  if (!std::isfinite(f.rms)) return 1e30;
  return f.rms * f.rms;
}

double gsl_varpro(const gsl_vector* v, void* params) {
  auto* ctx = static_cast<VarProContext*>(params);
  std::vector<double> e(ctx->terms);
  for (int i = 0; i < ctx->terms; ++i) e[i] = gsl_vector_get(v, i);
  return varpro_objective(e, *ctx);
}

std::vector<double> nelder_mead(const std::vector<double>& start, double step, VarProContext& ctx) {
  const int n = static_cast<int>(start.size());
  gsl_multimin_function fn{&gsl_varpro, static_cast<std::size_t>(n), &ctx};
  gsl_vector* x = gsl_vector_alloc(n);
  gsl_vector* ss = gsl_vector_alloc(n);
  for (int i = 0; i < n; ++i) {
    gsl_vector_set(x, i, start[i]);
    gsl_vector_set(ss, i, step);
  }
  gsl_multimin_fminimizer* m = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n);
  gsl_multimin_fminimizer_set(m, &fn, x, ss);
  for (int it = 0; it < 5000; ++it) {
    if (gsl_multimin_fminimizer_iterate(m)) break;
    if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(m), 1e-8) == GSL_SUCCESS) break;
  }
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = gsl_vector_get(m->x, i);
  gsl_multimin_fminimizer_free(m);
  gsl_vector_free(ss);
  gsl_vector_free(x);
  return out;
}

}  // namespace

CorrectionFit first_correction(const ProfileSamples& prof, double s, const FitWindow& window, int terms) {
  if (terms < 1 || terms > 4) throw Error(Errc::ConfigError, "first_correction supports 1..4 free exponents");
  Windowed W = select(prof, window);
  if (W.bands < 3 || static_cast<int>(W.d.size()) < terms + 4)
    throw Error(Errc::InsufficientWindow, "too few samples for the correction fit");
  VarProContext ctx{&W, s, terms};

  // coarse ascending grid as starting points
  std::vector<double> best;
  double fbest = kInf;
  std::vector<double> e(terms);
  const double lo = s + 0.05, step = 0.1;
  std::function<void(int, double)> scan = [&](int i, double from) {
    if (i == terms) {
      double f = varpro_objective(e, ctx);
      if (f < fbest) {
        fbest = f;
        best = e;
      }
      return;
    }
    for (double v = from; v <= 3.5 + 1e-9; v += (i == 0 ? 0.05 : 2 * step)) {
      e[i] = v;
      scan(i + 1, v + step);
    }
  };
  scan(0, lo);
  std::vector<double> x = nelder_mead(best, 0.05, ctx);
  x = nelder_mead(x, 0.01, ctx);
  std::sort(x.begin(), x.end());

  CorrectionFit out;
  out.exponents.push_back(s);
  out.exponents.insert(out.exponents.end(), x.begin(), x.end());
  LinearFit f = linear_fit(W, s, out.exponents);
  out.coeff.assign(f.c.data(), f.c.data() + f.c.size());
  out.residual = f.rms;
  return out;
}

// ---------------------------------------------------------------------------
// Hoelder exponents

HolderEstimate holder_exponent(const ProfileSamples& g, double gz, const FitWindow& window,
                               const HolderOptions& opt) {
  HolderEstimate est;
  for (double r = window.hi; r >= window.lo * (1.0 - 1e-12); r *= 0.5) {
    double o = 0.0;
    bool any = false;
    for (std::size_t i = 0; i < g.d.size(); ++i)
      if (g.d[i] > 0.0 && g.d[i] <= r) {
        o = std::max(o, std::abs(g.u[i] - gz));
        any = true;
      }
    if (!any) break;
    est.radii.push_back(r);
    est.osc.push_back(o);
  }
  const int m = static_cast<int>(est.radii.size());
  if (m < 4) throw Error(Errc::InsufficientWindow, "fewer than 4 dyadic radii in the window");

  const double top = *std::max_element(est.osc.begin(), est.osc.end());
  double scale = 0.0;
  for (double v : g.u) scale = std::max(scale, std::abs(v));
  if (top <= 1e-12 * std::max(scale, 1e-300)) {
    est.saturated = true;
    est.raw_slope = est.exponent = opt.max_exponent;
    est.two_term = std::numeric_limits<double>::quiet_NaN();
    return est;
  }
  std::vector<double> lx, ly;
  for (int i = 0; i < m; ++i)
    if (est.osc[i] > 0.0) {
      lx.push_back(std::log(est.radii[i]));
      ly.push_back(std::log(est.osc[i]));
    }
  {
    double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / lx.size();
    double my = std::accumulate(ly.begin(), ly.end(), 0.0) / ly.size();
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sxx += (lx[i] - mx) * (lx[i] - mx);
      sxy += (lx[i] - mx) * (ly[i] - my);
    }
    est.raw_slope = sxy / sxx;
  }

  // osc ~ A r^a + B r^{2a}, relative residual, leading term dominant at the inner radius
  const double rmin = est.radii.back();
  auto two = [&](double a, double* res) {
    Eigen::MatrixXd M(m, 2);
    Eigen::VectorXd y = Eigen::VectorXd::Ones(m);
    for (int i = 0; i < m; ++i) {
      M(i, 0) = std::pow(est.radii[i], a) / est.osc[i];
      M(i, 1) = std::pow(est.radii[i], 2 * a) / est.osc[i];
    }
    Eigen::Vector2d c = M.colPivHouseholderQr().solve(y);
    *res = (M * c - y).squaredNorm();
    return c(0) > 0.0 && std::abs(c(1)) * std::pow(rmin, a) < 0.5 * c(0);
  };
  double abest = std::numeric_limits<double>::quiet_NaN(), rbest = kInf;
  for (double a = 0.02; a <= 1.5 + 1e-9; a += 0.005) {
    double res;
    if (two(a, &res) && res < rbest) {
      rbest = res;
      abest = a;
    }
  }
  if (std::isfinite(abest)) {
    // golden-section refinement on [abest - 0.005, abest + 0.005]
    double lo = abest - 0.005, hi = abest + 0.005;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 40; ++it) {
      double a1 = hi - gr * (hi - lo), a2 = lo + gr * (hi - lo), r1, r2;
      bool ok1 = two(a1, &r1), ok2 = two(a2, &r2);
      if (!ok1) r1 = kInf;
      if (!ok2) r2 = kInf;
      if (r1 < r2) hi = a2;
      else lo = a1;
    }
    double res;
    double a = 0.5 * (lo + hi);
    est.two_term = two(a, &res) ? a : abest;
  } else {
    est.two_term = std::numeric_limits<double>::quiet_NaN();
  }

  if (est.raw_slope >= opt.saturation) {
    est.saturated = true;
    est.exponent = est.raw_slope;
  } else {
    est.exponent = std::isfinite(est.two_term) ? est.two_term : est.raw_slope;
  }
  return est;
}

// ---------------------------------------------------------------------------
// tangential regularity

TangentialReport tangential_regularity(const std::vector<double>& arc, const std::vector<double>& Q,
                                       int order, bool closed) {
  const int n = static_cast<int>(Q.size());
  if (order < 0 || n < order + 8 || arc.size() != Q.size())
    throw Error(Errc::InsufficientWindow, "boundary sample too coarse for the requested order");
  TangentialReport rep;
  rep.arc = arc;
  rep.value = Q;
  rep.order = order;
  const double dz = arc[1] - arc[0];
  const int m = closed ? n : n - order;
  auto at = [&](int i) { return closed ? Q[((i % n) + n) % n] : Q[i]; };
  // forward differences divided by dz^order
  std::vector<double> D(m);
  for (int i = 0; i < m; ++i) {
    double acc = 0.0, binom = 1.0;
    for (int j = 0; j <= order; ++j) {
      acc += ((order - j) % 2 ? -1.0 : 1.0) * binom * at(i + j);
      binom = binom * (order - j) / (j + 1);
    }
    D[i] = acc / std::pow(dz, order);
  }
  rep.difference = D;
  double dmax = 0.0;
  for (double v : D) dmax = std::max(dmax, std::abs(v));
  rep.max_difference = dmax;

  // oscillation of D over dyadic separations 1, 2, 4, ... samples
  std::vector<double> lx, ly;
  double scale = 0.0;
  for (double v : Q) scale = std::max(scale, std::abs(v));
  for (int k = 1; k <= m / 4; k *= 2) {
    double o = 0.0;
    for (int i = 0; i < m; ++i) {
      int j = i + k;
      if (!closed && j >= m) break;
      o = std::max(o, std::abs(D[((j % m) + m) % m] - D[i]));
    }
    if (o <= 1e-12 * std::max(scale, 1e-300) / std::pow(dz, order)) continue;
    lx.push_back(std::log(k * dz));
    ly.push_back(std::log(o));
  }
  if (lx.size() < 2) {
    rep.saturated = true;
    rep.exponent = 1.0;
    return rep;
  }
  double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / lx.size();
  double my = std::accumulate(ly.begin(), ly.end(), 0.0) / ly.size();
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  rep.exponent = sxy / sxx;
  rep.saturated = rep.exponent >= 0.9;
  return rep;
}

std::vector<ExpansionFit> disk_normal_fits(const Eigen::VectorXd& u, const Grid2D& grid, double s,
                                           const std::vector<double>& angles,
                                           const std::vector<double>& exponents, const FitWindow& window,
                                           const FitOptions& opt) {
  std::vector<ExpansionFit> out(angles.size());
  const double tube = 0.75 * grid.h;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t a = 0; a < angles.size(); ++a) {
    const double c = std::cos(angles[a]), sn = std::sin(angles[a]);
    ProfileSamples prof;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      double x = grid.x[i][0] - grid.center[0], y = grid.x[i][1] - grid.center[1];
      double along = x * c + y * sn, across = -x * sn + y * c;
      if (along <= 0.0 || std::abs(across) > tube) continue;
      prof.d.push_back(grid.radius - std::hypot(x, y));
      prof.u.push_back(u(i));
    }
    out[a] = fit_expansion(prof, s, exponents, window, opt);
  }
  return out;
}

// ---------------------------------------------------------------------------
// singular factorization

namespace {

struct Domain2 {
  const GeneralizedDistance* dist;
  int n;

  bool inside(const Point2& x) const {
    if (!dist) return (n == 1 ? x[0] : x[1]) > 0.0;
    return n == 1 ? dist->inside(x[0]) : dist->inside(x);
  }
  double d(const Point2& x) const {
    if (!dist) return n == 1 ? x[0] : x[1];
    return n == 1 ? (*dist)(x[0]) : (*dist)(x);
  }
  // exit distance along x + r w (r > 0), +inf if the ray stays inside
  double exit(const Point2& x, const Point2& w) const {
    if (!dist) {
      double wn = n == 1 ? w[0] : w[1], xn = n == 1 ? x[0] : x[1];
      return wn < 0.0 ? xn / -wn : kInf;
    }
    const auto& D = dist->domain();
    if (D.kind == DomainSpec::Kind::Interval) return w[0] > 0.0 ? D.b - x[0] : x[0] - D.a;
    if (D.kind == DomainSpec::Kind::Disk) {
      double px = x[0] - D.center[0], py = x[1] - D.center[1];
      double bq = px * w[0] + py * w[1], cq = px * px + py * py - D.radius * D.radius;
      return -bq + std::sqrt(bq * bq - cq);
    }
    // graph: march, then bisect
    double r0 = 0.0, step = 1e-3;
    while (step < 1e3) {
      double r1 = r0 + step;
      if (!inside({x[0] + r1 * w[0], x[1] + r1 * w[1]})) {
        double a = r0, b = r1;
        for (int it = 0; it < 100; ++it) {
          double mid = 0.5 * (a + b);
          (inside({x[0] + mid * w[0], x[1] + mid * w[1]}) ? a : b) = mid;
        }
        return 0.5 * (a + b);
      }
      r0 = r1;
      step *= 1.5;
    }
    return kInf;
  }
};

}  // namespace

FactorizationResult singular_factorization(const StableKernel& K, const GeneralizedDistance* dist,
                                           const std::function<double(const Point2&)>& eta, double p,
                                           const Point2& z, const Point2& nu, const std::vector<double>& t) {
  const double s = K.s();
  const int n = K.n();
  if (!(p > 0.0 && p < 2.0 * s)) throw Error(Errc::BadExponent, "factorization needs p in (0, 2s)");
  if (dist && dist->domain().dim() != n) throw Error(Errc::BadDomain, "domain and kernel dimension differ");
  Domain2 dom{dist, n};
  auto U = [&](const Point2& x) {
    if (!dom.inside(x)) return 0.0;
    double d = dom.d(x);
    return d > 0.0 ? eta(x) * std::pow(d, p) : 0.0;
  };

  FactorizationResult res;
  res.t = t;
  double maxerr = 0.0;

  // a * int_0^inf (2U(x) - U(x + r w) - U(x - r w)) r^{-1-2s} dr
  auto radial = [&](const Point2& x, const Point2& w, double* err) {
    const double Ux = U(x);
    Point2 mw{-w[0], -w[1]};
    double e1 = dom.exit(x, w), e2 = dom.exit(x, mw);
    double r1 = std::min(e1, e2), r2 = std::max(e1, e2);
    auto g = [&](double r) {
      return 2.0 * Ux - U({x[0] + r * w[0], x[1] + r * w[1]}) - U({x[0] - r * w[0], x[1] - r * w[1]});
    };
    double total = 0.0, e = 0.0, ee = 0.0;
    // quadratic behaviour near 0
    const double delta = 1e-3 * r1;
    double d2 = g(delta) / (delta * delta);
    total += d2 * std::pow(delta, 2.0 - 2.0 * s) / (2.0 - 2.0 * s);
    auto f = [&](double r) { return g(r) * std::pow(r, -1.0 - 2.0 * s); };
    total += tanh_sinh(f, delta, r1, 1e-9, &ee);
    e += ee;
    if (std::isfinite(r2)) {
      if (r2 > r1) {
        total += tanh_sinh(f, r1, r2, 1e-9, &ee);
        e += ee;
      }
      total += 2.0 * Ux * std::pow(r2, -2.0 * s) / (2.0 * s);
    } else {
      boost::math::quadrature::exp_sinh<double> es;
      double l1;
      total += es.integrate([&](double r) { return f(r1 + r); }, 0.0, kInf, 1e-9, &ee, &l1);
      e += ee;
    }
    if (err) *err = e;
    return total;
  };

  for (double tk : t) {
    Point2 x{z[0] + tk * nu[0], z[1] + tk * nu[1]};
    double v = 0.0, err = 0.0;
    if (n == 1) {
      v = K.angular(0.0) * radial(x, {1.0, 0.0}, &err);
    } else {
      double e2 = 0.0;
      auto ang = [&](double th) {
        double e;
        double r = K.angular(th) * radial(x, {std::cos(th), std::sin(th)}, &e);
        e2 = std::max(e2, std::abs(e));
        return r;
      };
      // split at the normal direction so the exit-distance kink sits at a node
      double thn = std::atan2(nu[1], nu[0]);
      double a0 = std::fmod(thn + 2.0 * M_PI, M_PI);
      double e1 = 0.0;
      v = tanh_sinh(ang, 0.0, a0, 1e-7, &e1);
      double e3 = 0.0;
      v += tanh_sinh(ang, a0, M_PI, 1e-7, &e3);
      err = e1 + e3 + e2;
    }
    if (!std::isfinite(v)) throw Error(Errc::QuadratureFailed, "non-finite value at t = " + std::to_string(tk));
    const double mag = std::max(std::abs(v), std::abs(eta(x)) * std::pow(tk, p - 2.0 * s));
    maxerr = std::max(maxerr, std::abs(err) / std::max(mag, 1e-300));
    res.value.push_back(v);
  }
  res.max_error = maxerr;
  if (maxerr > 1e-2) throw Error(Errc::QuadratureFailed, "relative quadrature error " + std::to_string(maxerr));

  // leading coefficient: value t^{2s-p} = phi + B t^delta, delta by scan
  const int m = static_cast<int>(t.size());
  std::vector<double> y(m);
  for (int i = 0; i < m; ++i) y[i] = res.value[i] * std::pow(t[i], 2.0 * s - p);
  double spread = *std::max_element(y.begin(), y.end()) - *std::min_element(y.begin(), y.end());
  double ymax = 0.0;
  for (double v : y) ymax = std::max(ymax, std::abs(v));
  if (m < 3 || spread <= 1e-9 * ymax) {
    res.phi = std::accumulate(y.begin(), y.end(), 0.0) / m;
    res.remainder_exponent = kInf;
    return res;
  }
  double best = kInf;
  for (double dl = 0.02; dl <= 2.0 + 1e-9; dl += 0.01) {
    Eigen::MatrixXd M(m, 2);
    Eigen::VectorXd Y(m);
    for (int i = 0; i < m; ++i) {
      M(i, 0) = 1.0;
      M(i, 1) = std::pow(t[i], dl);
      Y(i) = y[i];
    }
    Eigen::Vector2d c = M.colPivHouseholderQr().solve(Y);
    double r = (M * c - Y).squaredNorm();
    if (r < best) {
      best = r;
      res.phi = c(0);
      res.remainder_exponent = p - 2.0 * s + dl;
    }
  }
  return res;
}

}  // namespace fracdrift
