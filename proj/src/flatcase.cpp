#include "fracdrift/flatcase.hpp"

#include "fracdrift/errors.hpp"
#include "fracdrift/quadrature.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

namespace fracdrift {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// generalized binomial coefficients binom(p, k), k = 0..K
std::vector<double> binomials(double p, int K) {
  std::vector<double> b(K + 1);
  b[0] = 1.0;
  for (int k = 1; k <= K; ++k) b[k] = b[k - 1] * (p - k + 1) / k;
  return b;
}

}  // namespace

void check_log_resonance(double s, double p, double window) {
  double e = p - 2.0 * s;
  double m = std::round(e);
  if (m >= 0.0 && std::abs(e - m) < window)
    throw Error(Errc::LogResonance, "p - 2s = " + std::to_string(e) + " is within " +
                                        std::to_string(window) + " of an integer",
                -1, static_cast<long>(m));
}

CpValue compute_cp(double s, double p, const CpOptions& opt) {
  if (!(p > 0.0)) throw Error(Errc::BadExponent, "p must be positive");
  check_log_resonance(s, p, opt.resonance_window);
  const double d = opt.delta;
  const double two_s = 2.0 * s;
  double err = 0.0;

  // [0, delta]: 2 - (1+r)^p - (1-r)^p = -2 sum binom(p,2m) r^{2m}
  double taylor = 0.0;
  {
    auto b = binomials(p, 40);
    for (int m = 1; 2 * m <= 40; ++m) {
      double term = -2.0 * b[2 * m] * std::pow(d, 2.0 * m - two_s) / (2.0 * m - two_s);
      taylor += term;
      if (std::abs(term) < 1e-18 * std::max(1.0, std::abs(taylor))) break;
    }
  }

  // [delta, 1]
  auto near = [p, two_s](double r, double rc) {
    double one_minus_r = (rc > 0.0) ? rc : 1.0 - r;
    double g = -std::expm1(p * std::log1p(r)) + 1.0 - std::pow(one_minus_r, p);
    return g * std::pow(r, -1.0 - two_s);
  };
  double e1 = 0.0;
  double mid = tanh_sinh(near, d, 1.0, 1e-14, &e1);
  err += e1;

  // [1, R] on dyadic panels; for p > 2s the finite part is taken early to
  // avoid cancellation against a large tail
  double R = opt.r_tail;
  if (p > two_s) R = std::min(R, 4.0);
  double outer = 0.0;
  for (double a = 1.0; a < R; a *= 2.0) {
    double b = std::min(2.0 * a, R);
    double e2 = 0.0;
    outer += gauss_kronrod(
        [p, two_s](double r) { return (2.0 - std::pow(1.0 + r, p)) * std::pow(r, -1.0 - two_s); },
        a, b, 1e-14, &e2);
    err += e2;
  }

  // [R, inf): 2 R^{-2s}/(2s) + sum_k binom(p,k) R^{e_k}/e_k, e_k = p - k - 2s
  double tail = 2.0 * std::pow(R, -two_s) / two_s;
  {
    auto b = binomials(p, 200);
    double last = 0.0;
    for (int k = 0; k <= 200; ++k) {
      double e = p - k - two_s;
      double term = b[k] * std::pow(R, e) / e;
      tail += term;
      last = std::abs(term);
      if (k > p + 2 && last < 1e-18 * std::max(1.0, std::abs(tail))) break;
    }
    err += last;
  }

  CpValue out;
  out.value = 0.5 * (taylor + mid + outer + tail);
  out.error_estimate = 0.5 * err;
  return out;
}

std::vector<CpScanRow> scan_cp(double s, double p_min, double p_max, double step,
                               const CpOptions& opt) {
  std::vector<CpScanRow> rows;
  const int n = static_cast<int>(std::floor((p_max - p_min) / step + 1e-9));
  double cmax = 0.0;
  for (int i = 0; i <= n; ++i) {
    CpScanRow r;
    r.p = p_min + i * step;
    try {
      auto v = compute_cp(s, r.p, opt);
      r.cp = v.value;
      r.err = v.error_estimate;
      cmax = std::max(cmax, std::abs(r.cp));
    } catch (const Error& e) {
      if (e.code() != Errc::LogResonance) throw;
      r.cp = std::numeric_limits<double>::quiet_NaN();
      r.err = std::numeric_limits<double>::quiet_NaN();
      r.flags = "log_resonance";
    }
    rows.push_back(r);
  }
  for (auto& r : rows)
    if (r.flags.empty() && std::abs(r.cp) <= 1e-8 * cmax) r.flags = "zero";
  return rows;
}

std::vector<SignChange> sign_changes(const std::vector<CpScanRow>& rows, double zero_tol) {
  double cmax = 0.0;
  for (const auto& r : rows)
    if (std::isfinite(r.cp)) cmax = std::max(cmax, std::abs(r.cp));
  std::vector<SignChange> out;
  int last_sign = 0;
  double last_p = 0.0;
  double zero_p = kInf;
  for (const auto& r : rows) {
    if (!std::isfinite(r.cp)) continue;
    if (std::abs(r.cp) <= zero_tol * cmax) {
      zero_p = r.p;
      continue;
    }
    int sg = r.cp > 0 ? 1 : -1;
    if (last_sign != 0 && sg != last_sign) {
      if (std::isfinite(zero_p)) out.push_back({zero_p, zero_p});
      else out.push_back({last_p, r.p});
    }
    last_sign = sg;
    last_p = r.p;
    zero_p = kInf;
  }
  return out;
}

double angular_moment(const std::function<double(double)>& a, int n, double s, int dir) {
  if (n == 1) return a(0.0) + a(M_PI);
  if (dir < 0) dir = 1;
  const double hp = 0.5 * M_PI;
  // half circle, doubled by evenness a(theta + pi) = a(theta)
  double acc = 0.0;
  for (const auto& nd : de_rule(0.0, hp, 6)) {
    double c = std::sin(nd.db), sn = std::sin(nd.da);
    acc += nd.w * std::pow(dir == 1 ? sn : c, 2.0 * s) * a(nd.x);
  }
  for (const auto& nd : de_rule(hp, M_PI, 6)) {
    double c = std::sin(nd.da), sn = std::sin(nd.db);
    acc += nd.w * std::pow(dir == 1 ? sn : c, 2.0 * s) * a(nd.x);
  }
  return 2.0 * acc;
}

double angular_moment(const StableKernel& k, int dir) {
  return angular_moment([&k](double t) { return k.angular(t); }, k.n(), k.s(), dir);
}

double compute_cp_tilde(const std::function<double(double)>& odd_a, int n, double s, double p) {
  double amax = 0.0, worst = 0.0;
  const int M = (n == 1) ? 1 : 256;
  for (int i = 0; i < M; ++i) {
    double t = (n == 1) ? 0.0 : 2.0 * M_PI * i / M;
    double a0 = odd_a(t), a1 = odd_a(t + M_PI);
    amax = std::max({amax, std::abs(a0), std::abs(a1)});
    worst = std::max(worst, std::abs(a0 + a1));
  }
  if (worst > 1e-10 * std::max(amax, 1e-300))
    throw Error(Errc::ParityViolation, "angular function is not odd (defect " +
                                           std::to_string(worst) + ")");
  double cp = compute_cp(s, p).value;
  if (n == 1) return cp * 2.0 * odd_a(0.0);
  // int_0^{2pi} |sin|^{2s-1} sgn(sin) a = 2 int_0^pi sin^{2s-1} a
  double acc = 0.0;
  for (const auto& nd : de_rule(0.0, M_PI, 6)) {
    double sn = std::sin(std::min(nd.da, nd.db));
    acc += nd.w * std::pow(sn, 2.0 * s - 1.0) * odd_a(nd.x);
  }
  return cp * 2.0 * acc;
}

namespace {

struct Monomial2 {
  int g;      // power of z1
  double pp;  // power of (z2)_+
};

double u_at(const Monomial2& m, double z1, double z2) {
  if (z2 <= 0.0) return 0.0;
  return std::pow(z1, m.g) * std::pow(z2, m.pp);
}

// L(u chi_{B_rho})(x) in polar coordinates about x.
double local_part(const StableKernel& K, const Monomial2& mo, const Point2& x, double rho,
                  int level) {
  const double s = K.s(), two_s = 2.0 * s;
  const double x1 = x[0], x2 = x[1];
  const double r2x = x1 * x1 + x2 * x2;
  const double ux = u_at(mo, x1, x2);
  const double gap = rho - std::sqrt(r2x);
  const int g = mo.g;

  std::vector<double> binom_g(g + 1);
  binom_g[0] = 1.0;
  for (int j = 1; j <= g; ++j) binom_g[j] = binom_g[j - 1] * (g - j + 1) / j;
  const int M = 90;
  auto bp = binomials(mo.pp, M);

  auto inner = [&](double c, double sn) {
    double xs = x1 * c + x2 * sn;
    double disc = std::sqrt(xs * xs + rho * rho - r2x);
    double rp = -xs + disc;
    double rmn = xs + disc;
    double rc = sn > 0.0 ? x2 / sn : kInf;
    double rm = std::min(rmn, rc);
    double delta = std::min(sn > 0.0 ? 0.5 * x2 / sn : kInf, 0.5 * gap);

    // Taylor part on [0, delta]
    double taylor = 0.0;
    {
      double x2pp = std::pow(x2, mo.pp);
      double ratio = sn / x2;
      std::vector<double> P(g + 1), Q(M + 1);
      for (int j = 0; j <= g; ++j) P[j] = binom_g[j] * std::pow(x1, g - j) * std::pow(c, j);
      double rk = 1.0;
      for (int k = 0; k <= M; ++k) {
        Q[k] = x2pp * bp[k] * rk;
        rk *= ratio;
      }
      double dm = delta * delta;
      for (int m = 2; m <= M; m += 2, dm *= delta * delta) {
        double gm = 0.0;
        for (int j = 0; j <= std::min(g, m); ++j) gm += P[j] * Q[m - j];
        double term = -2.0 * gm * dm * std::pow(delta, -two_s) / (m - two_s);
        taylor += term;
        if (m > g + 4 && std::abs(term) < 1e-17 * (std::abs(taylor) + std::abs(ux) * std::pow(delta, -two_s)))
          break;
      }
    }

    double b1 = std::min(rp, rm), b2 = std::max(rp, rm);
    auto seg = [&](double lo, double hi) {
      double acc = 0.0;
      for (const auto& nd : de_rule(lo, hi, level)) {
        double r = nd.x;
        double F = 2.0 * ux;
        if (r < rp) F -= u_at(mo, x1 + r * c, x2 + r * sn);
        if (r < rm) {
          double z2 = (sn > 0.0) ? sn * ((rc - hi) + nd.db) : x2;
          if (rm < rc) z2 = x2 - r * sn;
          F -= (z2 > 0.0) ? std::pow(x1 - r * c, g) * std::pow(z2, mo.pp) : 0.0;
        }
        acc += nd.w * F * std::pow(r, -1.0 - two_s);
      }
      return acc;
    };
    double val = taylor + seg(delta, b1);
    if (b2 > b1) val += seg(b1, b2);
    val += 2.0 * ux * std::pow(b2, -two_s) / two_s;
    return val;
  };

  double th1 = std::atan2(x2, x1 + rho);
  double th2 = std::atan2(x2, x1 - rho);
  double cuts[4] = {0.0, th1, th2, M_PI};
  double total = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (const auto& nd : de_rule(cuts[i], cuts[i + 1], level)) {
      double th = nd.x;
      double c = std::cos(th);
      double sn = std::sin(th);
      if (i == 0 && nd.da < 1e-3) sn = std::sin(nd.da);
      if (i == 2 && nd.db < 1e-3) sn = std::sin(nd.db), c = -std::cos(nd.db);
      total += nd.w * K.angular(th) * inner(c, sn);
    }
  }
  return total;
}

// A_m(x) = int_0^pi u(omega) H_m(omega; x) dphi, H_m the degree-m part in x of K(omega - x).
std::vector<double> far_moments(const StableKernel& K, const Monomial2& mo, const Point2& x,
                                int M, int level) {
  const double s = K.s();
  const auto& cj = K.coeffs();
  const int J = static_cast<int>(cj.size()) - 1;
  const double rx = std::hypot(x[0], x[1]);
  const std::complex<double> wx(x[0], x[1]);
  std::vector<double> A(M + 1, 0.0);
  std::vector<double> C(M + 1), rxn(M + 1);
  rxn[0] = 1.0;
  for (int n = 1; n <= M; ++n) rxn[n] = rxn[n - 1] * rx;
  std::vector<std::complex<double>> mwx(2 * J + 1);
  mwx[0] = 1.0;
  for (int l = 1; l <= 2 * J; ++l) mwx[l] = mwx[l - 1] * (-wx);

  for (const auto& nd : de_rule(0.0, M_PI, level)) {
    double sn = std::sin(std::min(nd.da, nd.db));
    double c = (nd.da < nd.db) ? std::cos(nd.da) : -std::cos(nd.db);
    double u = std::pow(c, mo.g) * std::pow(sn, mo.pp);
    if (u == 0.0) continue;
    double t = (c * x[0] + sn * x[1]) / rx;
    std::complex<double> w(c, sn);
    for (int j = 0; j <= J; ++j) {
      if (cj[j] == 0.0) continue;
      double lam = 1.0 + s + j;
      C[0] = 1.0;
      if (M >= 1) C[1] = 2.0 * lam * t;
      for (int n = 2; n <= M; ++n)
        C[n] = (2.0 * t * (n + lam - 1.0) * C[n - 1] - (n + 2.0 * lam - 2.0) * C[n - 2]) / n;
      std::complex<double> ph = std::polar(1.0, -2.0 * j * K.phase());
      // Re[ph binom(2j,l) w^{2j-l} (-wx)^l]
      std::vector<double> pl(2 * j + 1);
      double bl = 1.0;
      for (int l = 0; l <= 2 * j; ++l) {
        pl[l] = std::real(ph * bl * std::pow(w, 2 * j - l) * mwx[l]);
        bl = bl * (2 * j - l) / (l + 1);
      }
      double wt = nd.w * u * cj[j] * K.scale();
      for (int m = 0; m <= M; ++m) {
        double h = 0.0;
        for (int l = 0; l <= std::min(2 * j, m); ++l) h += pl[l] * C[m - l] * rxn[m - l];
        A[m] += wt * h;
      }
    }
  }
  return A;
}

Monomial2 fold(double p, std::array<int, 2> gamma, int n) {
  if (gamma[0] < 0 || gamma[1] < 0) throw Error(Errc::BadExponent, "negative multi-index");
  if (n == 1) return {0, p + gamma[0] + gamma[1]};
  return {gamma[0], p + gamma[1]};
}

struct Pieces {
  double f = 0.0;      // canonical value
  double scale = 0.0;  // magnitude of the summands, for relative checks
  std::vector<double> A;
  double q = 0.0;
};

Pieces evaluate(const StableKernel& K, double p, std::array<int, 2> gamma, const Point2& x,
                int M = 48) {
  const double s = K.s();
  Monomial2 mo = fold(p, gamma, K.n());
  if (!(mo.pp > 0.0)) throw Error(Errc::BadExponent, "p must be positive");
  Pieces out;
  out.q = mo.g + mo.pp;
  check_log_resonance(s, out.q);
  if (K.n() == 1) {
    double xi = x[0];
    if (!(xi > 0.0)) throw Error(Errc::BadDomain, "evaluation point must satisfy x > 0");
    double mom = 2.0 * K.angular(0.0);
    out.f = compute_cp(s, mo.pp).value * mom * std::pow(xi, mo.pp - 2.0 * s);
    out.scale = std::max(std::abs(out.f), mom * std::pow(xi, mo.pp - 2.0 * s));
    out.A.resize(M + 1);
    double b = 1.0;
    for (int m = 0; m <= M; ++m) {
      out.A[m] = K.angular(0.0) * b * std::pow(-xi, m);
      b = b * (-1.0 - 2.0 * s - m) / (m + 1);
    }
    return out;
  }
  if (!(x[1] > 0.0)) throw Error(Errc::BadDomain, "evaluation point must satisfy x_n > 0");
  const double rx = std::hypot(x[0], x[1]);
  const double rho = std::max(2.0, 4.0 * rx);
  const int level = 6;
  double loc = local_part(K, mo, x, rho, level);
  out.A = far_moments(K, mo, x, M, level);
  double far = 0.0, mag = std::abs(loc);
  for (int m = 0; m <= M; ++m) {
    double e = out.q - 2.0 * s - m;
    double t = out.A[m] * std::pow(rho, e) / e;
    far += t;
    mag = std::max(mag, std::abs(t));
  }
  out.f = loc + far;
  out.scale = std::max(std::abs(out.f), mag);
  return out;
}

}  // namespace

double flat_power_value(const StableKernel& kernel, double p, std::array<int, 2> gamma,
                        const Point2& x) {
  return evaluate(kernel, p, gamma, x).f;
}

GeneralizedEvaluation eval_flat_power(const StableKernel& kernel, double p,
                                      std::array<int, 2> gamma, const std::vector<Point2>& xs,
                                      int k, double spread_tol) {
  const double s = kernel.s();
  Monomial2 mo = fold(p, gamma, kernel.n());
  const double q = mo.g + mo.pp;
  if (k < 0) k = static_cast<int>(std::floor(q - 2.0 * s)) + 1;
  if (k < 0) k = 0;

  GeneralizedEvaluation ge;
  ge.k = k;
  for (double R = 2.0; R <= 4096.0; R *= 2.0) ge.cutoff_radii.push_back(R);
  const std::size_t nR = ge.cutoff_radii.size();
  ge.fitted_polynomials.assign(nR, std::vector<double>(xs.size()));
  ge.limit_values.assign(nR, std::vector<double>(xs.size()));
  ge.limit.resize(xs.size());

  double worst = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    Pieces pc = evaluate(kernel, p, gamma, xs[i]);
    const int M = static_cast<int>(pc.A.size()) - 1;
    const double rx = std::hypot(xs[i][0], kernel.n() == 2 ? xs[i][1] : 0.0);
    ge.limit[i] = pc.f;
    std::vector<double> fr;
    std::vector<double> rr;
    for (std::size_t j = 0; j < nR; ++j) {
      double R = ge.cutoff_radii[j];
      double poly = 0.0, rest = 0.0;
      for (int m = 0; m <= M; ++m) {
        double e = q - 2.0 * s - m;
        double t = pc.A[m] * std::pow(R, e) / e;
        if (m < k) poly -= t;
        else rest += t;
      }
      ge.fitted_polynomials[j][i] = poly;
      ge.limit_values[j][i] = pc.f - rest;
      if (R > 2.0 * rx) {
        fr.push_back(pc.f - rest);
        rr.push_back(R);
      }
    }
    if (fr.size() < 5) throw Error(Errc::NoGeneralizedLimit, "evaluation point outside the cutoff range");
    const double ek = q - 2.0 * s - k;
    if (ek >= 0.0) {
      worst = kInf;
      continue;
    }
    // Richardson: remove R^{e_k}, R^{e_k - 1}, R^{e_k - 2} using four radii
    auto extrapolate = [&](std::size_t j0) {
      Eigen::Matrix4d A;
      Eigen::Vector4d b;
      for (int r = 0; r < 4; ++r) {
        double R = rr[j0 + r];
        A(r, 0) = 1.0;
        for (int c = 1; c < 4; ++c) A(r, c) = std::pow(R / rr[j0], ek - (c - 1));
        b(r) = fr[j0 + r];
      }
      return A.colPivHouseholderQr().solve(b)(0);
    };
    std::size_t n = fr.size();
    double sc = std::max(pc.scale, 1e-300);
    double e1 = extrapolate(n - 4), e2 = extrapolate(n - 5);
    worst = std::max({worst, std::abs(e1 - pc.f) / sc, std::abs(e2 - pc.f) / sc});
  }
  ge.spread = worst;
  if (!(worst <= spread_tol))
    throw Error(Errc::NoGeneralizedLimit, "cutoff sequence spread " + std::to_string(worst) +
                                              " exceeds tolerance");
  return ge;
}

}  // namespace fracdrift
