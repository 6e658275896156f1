#include "fracdrift/distance.hpp"

#include "fracdrift/errors.hpp"
#include "fracdrift/quadrature.hpp"

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>

namespace fracdrift {

Jet Jet::constant(double v) {
  Jet j;
  j.c[0] = v;
  return j;
}

Jet Jet::variable(double x0) {
  Jet j;
  j.c[0] = x0;
  j.c[1] = 1.0;
  return j;
}

double Jet::derivative(int k) const {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return c[k] * f;
}

Jet operator+(const Jet& a, const Jet& b) {
  Jet r;
  for (int k = 0; k <= Jet::K; ++k) r.c[k] = a.c[k] + b.c[k];
  return r;
}

Jet operator-(const Jet& a, const Jet& b) {
  Jet r;
  for (int k = 0; k <= Jet::K; ++k) r.c[k] = a.c[k] - b.c[k];
  return r;
}

Jet operator*(const Jet& a, const Jet& b) {
  Jet r;
  for (int k = 0; k <= Jet::K; ++k)
    for (int i = 0; i <= k; ++i) r.c[k] += a.c[i] * b.c[k - i];
  return r;
}

Jet operator/(const Jet& a, const Jet& b) {
  Jet r;
  for (int k = 0; k <= Jet::K; ++k) {
    double v = a.c[k];
    for (int i = 1; i <= k; ++i) v -= b.c[i] * r.c[k - i];
    r.c[k] = v / b.c[0];
  }
  return r;
}

Jet operator*(double s, const Jet& a) {
  Jet r = a;
  for (auto& v : r.c) v *= s;
  return r;
}

Jet operator+(double s, const Jet& a) {
  Jet r = a;
  r.c[0] += s;
  return r;
}

Jet exp(const Jet& a) {
  // r' = a' r
  Jet r;
  r.c[0] = std::exp(a.c[0]);
  for (int k = 1; k <= Jet::K; ++k) {
    double v = 0.0;
    for (int i = 1; i <= k; ++i) v += i * a.c[i] * r.c[k - i];
    r.c[k] = v / k;
  }
  return r;
}

DomainSpec DomainSpec::interval(double a, double b) {
  DomainSpec d;
  d.kind = Kind::Interval;
  d.a = a;
  d.b = b;
  return d;
}

DomainSpec DomainSpec::disk(Point2 c, double r) {
  DomainSpec d;
  d.kind = Kind::Disk;
  d.center = c;
  d.radius = r;
  return d;
}

DomainSpec DomainSpec::graph(double amplitude, double beta) {
  DomainSpec d;
  d.kind = Kind::Graph;
  d.amplitude = amplitude;
  d.beta = beta;
  return d;
}

void DomainSpec::validate() const {
  switch (kind) {
    case Kind::Interval:
      if (!(a < b)) throw Error(Errc::BadDomain, "interval needs a < b");
      break;
    case Kind::Disk:
      if (!(radius > 0.0)) throw Error(Errc::BadDomain, "disk radius must be positive");
      break;
    case Kind::Graph:
      if (!(beta > 1.0)) throw Error(Errc::BadDomain, "graph regularity must exceed 1");
      if (!(mollification > 0.0 && mollification < 1.0))
        throw Error(Errc::BadDomain, "mollification factor must lie in (0,1)");
      break;
  }
}

GeneralizedDistance::GeneralizedDistance(DomainSpec dom) : dom_(dom) { dom_.validate(); }

namespace {

// exp(-1/x) for x > 0, as a jet
Jet flat(const Jet& x) {
  if (x.c[0] <= 0.0) return Jet::constant(0.0);
  return exp(-1.0 * (Jet::constant(1.0) / x));
}

}  // namespace

// L - |t|_s with |t|_s = |t| for |t| >= L/2 and (t^2 + L^2/16)/(L/2) near 0.
Jet GeneralizedDistance::profile(const Jet& t, double L) const {
  double at = std::abs(t.c[0]);
  Jet abs_t = (t.c[0] < 0.0) ? -1.0 * t : t;
  Jet quad = (2.0 / L) * (t * t + Jet::constant(L * L / 16.0));
  Jet mag;
  if (at <= 0.25 * L) {
    mag = quad;
  } else if (at >= 0.5 * L) {
    mag = abs_t;
  } else {
    Jet u = (4.0 / L) * (abs_t - Jet::constant(0.25 * L));
    Jet a = flat(Jet::constant(1.0) - u), b = flat(u);
    Jet chi = a / (a + b);
    mag = chi * quad + (Jet::constant(1.0) - chi) * abs_t;
  }
  return Jet::constant(L) - mag;
}

bool GeneralizedDistance::inside(double x) const {
  if (dom_.kind != DomainSpec::Kind::Interval) throw Error(Errc::BadDomain, "1D query on a 2D domain");
  return x > dom_.a && x < dom_.b;
}

bool GeneralizedDistance::inside(const Point2& x) const {
  switch (dom_.kind) {
    case DomainSpec::Kind::Interval:
      return inside(x[0]);
    case DomainSpec::Kind::Disk:
      return std::hypot(x[0] - dom_.center[0], x[1] - dom_.center[1]) < dom_.radius;
    case DomainSpec::Kind::Graph:
      return x[1] > boundary(x[0]);
  }
  return false;
}

std::array<double, 5> GeneralizedDistance::derivatives(double x) const {
  if (!inside(x)) return {0.0, 0.0, 0.0, 0.0, 0.0};
  double L = 0.5 * (dom_.b - dom_.a);
  Jet d = profile(Jet::variable(x - 0.5 * (dom_.a + dom_.b)), L);
  return {d.derivative(0), d.derivative(1), d.derivative(2), d.derivative(3), d.derivative(4)};
}

double GeneralizedDistance::operator()(double x) const { return derivatives(x)[0]; }

double GeneralizedDistance::boundary(double t) const {
  return dom_.amplitude * std::pow(std::abs(t), dom_.beta) * std::exp(-t * t);
}

double GeneralizedDistance::mollified_boundary(double t, double eps) const {
  // bump exp(-1/(1-z^2)) on [-1,1], normalized; split at the kink of g
  static const double norm = [] {
    double acc = 0.0;
    for (const auto& nd : de_rule(-1.0, 1.0, 7)) acc += nd.w * std::exp(-1.0 / (nd.da * nd.db));
    return acc;
  }();
  auto piece = [&](double lo, double hi) {
    double acc = 0.0;
    for (const auto& nd : de_rule(lo, hi, 6)) {
      double z = nd.x;
      double w = std::exp(-1.0 / ((1.0 - z) * (1.0 + z)));
      acc += nd.w * w * boundary(t - eps * z);
    }
    return acc;
  };
  double z0 = t / eps;
  double v = (z0 > -1.0 && z0 < 1.0) ? piece(-1.0, z0) + piece(z0, 1.0) : piece(-1.0, 1.0);
  return v / norm;
}

double GeneralizedDistance::graph_distance(const Point2& x) const {
  // tau = x2 - (g * phi_{m tau})(x1)
  const double m = dom_.mollification;
  auto F = [&](double tau) { return x[1] - mollified_boundary(x[0], m * tau) - tau; };
  double hi = x[1] - boundary(x[0]);
  if (!(hi > 0.0)) return 0.0;
  double lo = 0.0;
  // F(0+) = hi > 0; grow the bracket until F < 0
  double top = hi;
  while (F(top) > 0.0) top *= 2.0;
  boost::uintmax_t it = 200;
  auto tol = [](double a, double b) { return std::abs(b - a) <= 4e-16 * std::max(std::abs(a), 1e-300); };
  auto r = boost::math::tools::toms748_solve(F, lo + 1e-300, top, F(lo + 1e-300), F(top), tol, it);
  return 0.5 * (r.first + r.second);
}

double GeneralizedDistance::operator()(const Point2& x) const {
  switch (dom_.kind) {
    case DomainSpec::Kind::Interval:
      return (*this)(x[0]);
    case DomainSpec::Kind::Disk:
      return derivatives(x).d;
    case DomainSpec::Kind::Graph:
      return inside(x) ? graph_distance(x) : 0.0;
  }
  return 0.0;
}

Derivs2 GeneralizedDistance::derivatives(const Point2& x) const {
  Derivs2 out;
  if (!inside(x)) return out;
  if (dom_.kind == DomainSpec::Kind::Disk) {
    double dx = x[0] - dom_.center[0], dy = x[1] - dom_.center[1];
    double rho = std::hypot(dx, dy);
    Jet F = profile(Jet::variable(rho), dom_.radius);
    double f1 = F.derivative(1), f2 = F.derivative(2);
    out.d = F.value();
    if (rho == 0.0) {
      out.hess = {f2, 0.0, f2};
      return out;
    }
    double ex = dx / rho, ey = dy / rho, q = f1 / rho;
    out.grad = {f1 * ex, f1 * ey};
    out.hess = {f2 * ex * ex + q * (1.0 - ex * ex), (f2 - q) * ex * ey, f2 * ey * ey + q * (1.0 - ey * ey)};
    return out;
  }
  if (dom_.kind == DomainSpec::Kind::Interval) {
    auto j = derivatives(x[0]);
    out.d = j[0];
    out.grad = {j[1], 0.0};
    out.hess = {j[2], 0.0, 0.0};
    return out;
  }
  // graph: centered differences with step d/100
  double d0 = graph_distance(x);
  out.d = d0;
  double h = d0 / 100.0;
  auto D = [&](double a, double b) { return graph_distance({x[0] + a, x[1] + b}); };
  double dxp = D(h, 0), dxm = D(-h, 0), dyp = D(0, h), dym = D(0, -h);
  out.grad = {(dxp - dxm) / (2 * h), (dyp - dym) / (2 * h)};
  out.hess[0] = (dxp - 2 * d0 + dxm) / (h * h);
  out.hess[2] = (dyp - 2 * d0 + dym) / (h * h);
  out.hess[1] = (D(h, h) - D(h, -h) - D(-h, h) + D(-h, -h)) / (4 * h * h);
  return out;
}

double GeneralizedDistance::exact(double x) const {
  if (!inside(x)) return 0.0;
  return std::min(x - dom_.a, dom_.b - x);
}

double GeneralizedDistance::exact(const Point2& x) const {
  if (!inside(x)) return 0.0;
  switch (dom_.kind) {
    case DomainSpec::Kind::Interval:
      return exact(x[0]);
    case DomainSpec::Kind::Disk:
      return dom_.radius - std::hypot(x[0] - dom_.center[0], x[1] - dom_.center[1]);
    case DomainSpec::Kind::Graph:
      break;
  }
  double v = x[1] - boundary(x[0]);
  auto dist2 = [&](double t) {
    double a = x[0] - t, b = x[1] - boundary(t);
    return a * a + b * b;
  };
  const int M = 256;
  double best_t = x[0], best = dist2(x[0]);
  for (int i = 0; i <= M; ++i) {
    double t = x[0] - v + 2.0 * v * i / M;
    double f = dist2(t);
    if (f < best) best = f, best_t = t;
  }
  double step = 2.0 * v / M;
  auto r = boost::math::tools::brent_find_minima(dist2, best_t - step, best_t + step, 52);
  return std::sqrt(std::min(best, r.second));
}

Comparability measure_comparability(const GeneralizedDistance& d, int samples) {
  Comparability c;
  auto acc = [&](double dv, double ex) {
    if (!(ex > 0.0) || !(dv > 0.0)) return;
    c.sup_d_over_dist = std::max(c.sup_d_over_dist, dv / ex);
    c.sup_dist_over_d = std::max(c.sup_dist_over_d, ex / dv);
  };
  const auto& dom = d.domain();
  switch (dom.kind) {
    case DomainSpec::Kind::Interval:
      for (int i = 1; i < samples; ++i) {
        double x = dom.a + (dom.b - dom.a) * i / samples;
        acc(d(x), d.exact(x));
      }
      break;
    case DomainSpec::Kind::Disk: {
      int m = static_cast<int>(std::sqrt(static_cast<double>(samples))) + 1;
      for (int i = 0; i <= 2 * m; ++i)
        for (int j = 0; j <= 2 * m; ++j) {
          Point2 x{dom.center[0] + dom.radius * (i - m) / m, dom.center[1] + dom.radius * (j - m) / m};
          acc(d(x), d.exact(x));
        }
      break;
    }
    case DomainSpec::Kind::Graph: {
      int m = static_cast<int>(std::sqrt(static_cast<double>(samples))) + 1;
      for (int i = 0; i <= m; ++i)
        for (int j = 1; j <= m; ++j) {
          double x1 = -1.0 + 2.0 * i / m;
          Point2 x{x1, d.boundary(x1) + std::ldexp(1.0, -j / 2) * (1.0 + 0.3 * (j % 2))};
          acc(d(x), d.exact(x));
        }
      break;
    }
  }
  return c;
}

}  // namespace fracdrift
