#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <limits>
#include <vector>

namespace fracdrift {

// Nodes and weights on [0,1].
struct Rule {
  std::vector<double> x, w;
  std::size_t size() const { return x.size(); }
};

// Gauss-Legendre rule on [0,1] (cached per order, thread safe).
const Rule& gauss_legendre(int n);

// Double-exponential node carrying exact distances to both endpoints, so
// integrands like (b-x)^p stay accurate where x rounds to b.
struct DeNode {
  double x, w, da, db;
};

// Fixed tanh-sinh rule on [a,b] with step 2^-level.
std::vector<DeNode> de_rule(double a, double b, int level = 6);

template <class F>
double de_integrate(F&& f, double a, double b, int level = 6) {
  double acc = 0.0;
  for (const auto& nd : de_rule(a, b, level)) acc += nd.w * f(nd.x, nd.da, nd.db);
  return acc;
}

// Adaptive tanh-sinh on a finite interval. f(x, xc) gets the signed
// complement distance to the nearer endpoint, as in Boost.
template <class F>
double tanh_sinh(F&& f, double a, double b, double tol = 1e-13, double* err = nullptr) {
  static thread_local boost::math::quadrature::tanh_sinh<double> ts(15);
  double e = 0.0, l1 = 0.0;
  double v = ts.integrate(f, a, b, tol, &e, &l1);
  if (err) *err = e;
  return v;
}

template <class F>
double gauss_kronrod(F&& f, double a, double b, double tol = 1e-13, double* err = nullptr) {
  double e = 0.0;
  double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 12, tol, &e);
  if (err) *err = e;
  return v;
}

}  // namespace fracdrift
