#pragma once

#include "fracdrift/flatcase.hpp"

#include <array>
#include <string>

namespace fracdrift {

// Truncated Taylor arithmetic: c[k] = f^{(k)}(x0) / k!.
struct Jet {
  static constexpr int K = 4;
  std::array<double, K + 1> c{};

  static Jet constant(double v);
  static Jet variable(double x0);
  double value() const { return c[0]; }
  double derivative(int k) const;
};

Jet operator+(const Jet& a, const Jet& b);
Jet operator-(const Jet& a, const Jet& b);
Jet operator*(const Jet& a, const Jet& b);
Jet operator/(const Jet& a, const Jet& b);
Jet operator*(double s, const Jet& a);
Jet operator+(double s, const Jet& a);
Jet exp(const Jet& a);

struct DomainSpec {
  enum class Kind { Interval, Disk, Graph } kind = Kind::Interval;
  double a = 0.0, b = 1.0;           // interval
  Point2 center{0.0, 0.0};           // disk
  double radius = 1.0;
  double amplitude = 0.1;            // graph: x2 > amplitude |x1|^beta exp(-x1^2)
  double beta = 2.0;
  double mollification = 0.5;        // graph smoothing scale / distance

  static DomainSpec interval(double a, double b);
  static DomainSpec disk(Point2 c, double r);
  static DomainSpec graph(double amplitude, double beta);
  int dim() const { return kind == Kind::Interval ? 1 : 2; }
  void validate() const;
};

struct Derivs2 {
  double d = 0.0;
  std::array<double, 2> grad{};
  std::array<double, 3> hess{};  // xx, xy, yy
};

class GeneralizedDistance {
 public:
  explicit GeneralizedDistance(DomainSpec dom);

  const DomainSpec& domain() const { return dom_; }
  bool inside(double x) const;
  bool inside(const Point2& x) const;

  double operator()(double x) const;
  double operator()(const Point2& x) const;
  // d and its first four derivatives (interval only).
  std::array<double, 5> derivatives(double x) const;
  Derivs2 derivatives(const Point2& x) const;

  double exact(double x) const;
  double exact(const Point2& x) const;

  double boundary(double t) const;  // graph function
  double mollified_boundary(double t, double eps) const;

 private:
  Jet profile(const Jet& t, double L) const;
  double graph_distance(const Point2& x) const;

  DomainSpec dom_;
};

struct Comparability {
  double sup_d_over_dist = 0.0;
  double sup_dist_over_d = 0.0;
  double product() const { return sup_d_over_dist * sup_dist_over_d; }
};

// Sup of d/dist and dist/d over a dense grid of interior points.
Comparability measure_comparability(const GeneralizedDistance& d, int samples = 400);

}  // namespace fracdrift
