#include "fracdrift/config.hpp"

#include "fracdrift/errors.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace fracdrift {

using json = nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw Error(Errc::ConfigError, path + ": " + msg);
}

void only_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
  if (!j.is_object()) fail(path.empty() ? "<root>" : path, "expected an object");
  std::set<std::string> ok(keys.begin(), keys.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!ok.count(it.key())) fail(path.empty() ? it.key() : path + "." + it.key(), "unknown field");
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  double v = j.get<double>();
  if (!std::isfinite(v)) fail(path, "expected a finite number");
  return v;
}

int integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<int>();
}

std::vector<double> numbers(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> v;
  for (std::size_t i = 0; i < j.size(); ++i) v.push_back(number(j[i], path + "[" + std::to_string(i) + "]"));
  return v;
}

Point2 point(const json& j, const std::string& path) {
  auto v = numbers(j, path);
  if (v.size() != 2) fail(path, "expected two coordinates");
  return {v[0], v[1]};
}

KernelSpec kernel(const json& j, const std::string& path) {
  only_keys(j, path, {"s", "n", "coeffs", "phase", "normalized"});
  KernelSpec k;
  if (j.contains("s")) k.s = number(j["s"], join(path, "s"));
  if (!(k.s > 0.0 && k.s < 1.0)) fail(join(path, "s"), "order must lie in (0,1)");
  if (j.contains("n")) k.n = integer(j["n"], join(path, "n"));
  if (k.n != 1 && k.n != 2) fail(join(path, "n"), "dimension must be 1 or 2");
  if (j.contains("coeffs")) k.coeffs = numbers(j["coeffs"], join(path, "coeffs"));
  if (k.coeffs.empty()) fail(join(path, "coeffs"), "need at least one coefficient");
  if (j.contains("phase")) k.phase = number(j["phase"], join(path, "phase"));
  if (j.contains("normalized")) {
    if (!j["normalized"].is_boolean()) fail(join(path, "normalized"), "expected true or false");
    k.normalized = j["normalized"].get<bool>();
  }
  return k;
}

std::optional<DomainSpec> domain(const json& j, const std::string& path) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
    fail(join(path, "kind"), "expected one of interval, disk, graph, halfspace");
  const std::string kind = j["kind"];
  DomainSpec d;
  if (kind == "interval") {
    only_keys(j, path, {"kind", "a", "b"});
    d = DomainSpec::interval(j.contains("a") ? number(j["a"], join(path, "a")) : 0.0,
                             j.contains("b") ? number(j["b"], join(path, "b")) : 1.0);
  } else if (kind == "disk") {
    only_keys(j, path, {"kind", "center", "radius"});
    d = DomainSpec::disk(j.contains("center") ? point(j["center"], join(path, "center")) : Point2{0.0, 0.0},
                         j.contains("radius") ? number(j["radius"], join(path, "radius")) : 1.0);
  } else if (kind == "graph") {
    only_keys(j, path, {"kind", "amplitude", "beta", "mollification"});
    d = DomainSpec::graph(j.contains("amplitude") ? number(j["amplitude"], join(path, "amplitude")) : 0.1,
                          j.contains("beta") ? number(j["beta"], join(path, "beta")) : 2.0);
    if (j.contains("mollification")) d.mollification = number(j["mollification"], join(path, "mollification"));
  } else if (kind == "halfspace") {
    only_keys(j, path, {"kind"});
    return std::nullopt;
  } else {
    fail(join(path, "kind"), "unknown domain kind '" + kind + "'");
  }
  try {
    d.validate();
  } catch (const Error& e) {
    fail(path, e.what());
  }
  return d;
}

Obstacle obstacle(const json& j, const std::string& path) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
    fail(join(path, "kind"), "expected bump or parabola");
  const std::string kind = j["kind"];
  if (kind == "bump") {
    only_keys(j, path, {"kind", "height", "radius", "center"});
    double r = j.contains("radius") ? number(j["radius"], join(path, "radius")) : 0.6;
    if (!(r > 0.0)) fail(join(path, "radius"), "must be positive");
    return Obstacle::bump(j.contains("height") ? number(j["height"], join(path, "height")) : 1.0, r,
                          j.contains("center") ? number(j["center"], join(path, "center")) : 0.0);
  }
  if (kind == "parabola") {
    only_keys(j, path, {"kind", "height"});
    return Obstacle::parabola(j.contains("height") ? number(j["height"], join(path, "height")) : 0.5);
  }
  fail(join(path, "kind"), "unknown obstacle kind '" + kind + "'");
}

}  // namespace

StableKernel KernelSpec::make() const { return StableKernel(s, n, coeffs, phase, normalized); }

double SourceSpec::evaluate(const Point2& x) const {
  if (tag == "zero") return 0.0;
  if (tag == "one") return 1.0;
  if (tag == "linear") return 1.0 + x[0];
  if (tag == "bump") {
    double r2 = x[0] * x[0] + x[1] * x[1];
    return r2 < 0.25 ? std::exp(1.0 - 1.0 / (1.0 - 4.0 * r2)) : 0.0;
  }
  throw Error(Errc::ConfigError, "f: unknown source tag '" + tag + "'");
}

const char* problem_name(Problem p) {
  switch (p) {
    case Problem::dirichlet: return "dirichlet";
    case Problem::obstacle: return "obstacle";
    case Problem::flatcase: return "flatcase";
    case Problem::phi: return "phi";
    case Problem::expansion: return "expansion";
  }
  return "?";
}

RunConfig parse_config(const json& j) {
  only_keys(j, "", {"kernel", "domain", "problem", "b", "f", "obstacle", "grid", "output", "seed", "p", "degree",
                    "scan", "direction", "t", "z", "nu", "exponents", "beta", "window", "peel", "points", "samples",
                    "criteria"});
  RunConfig c;
  c.raw = j;
  if (j.contains("kernel")) c.kernel = kernel(j["kernel"], "kernel");
  if (j.contains("domain"))
    c.domain = domain(j["domain"], "domain");
  else
    c.domain = c.kernel.n == 1 ? DomainSpec::interval(0.0, 1.0) : DomainSpec::disk({0.0, 0.0}, 1.0);
  if (c.domain && c.domain->dim() != c.kernel.n) fail("domain.kind", "domain dimension differs from kernel.n");

  if (j.contains("problem")) {
    if (!j["problem"].is_string()) fail("problem", "expected a string");
    const std::string p = j["problem"];
    if (p == "dirichlet") c.problem = Problem::dirichlet;
    else if (p == "obstacle") c.problem = Problem::obstacle;
    else if (p == "flatcase") c.problem = Problem::flatcase;
    else if (p == "phi") c.problem = Problem::phi;
    else if (p == "expansion") c.problem = Problem::expansion;
    else fail("problem", "expected dirichlet, obstacle, flatcase, phi or expansion");
  }
  if (j.contains("b")) {
    if (j["b"].is_number()) c.b = {number(j["b"], "b"), 0.0};
    else c.b = point(j["b"], "b");
  }
  if (j.contains("f")) {
    if (!j["f"].is_string()) fail("f", "expected a source tag");
    c.f.tag = j["f"];
    if (c.f.tag != "zero" && c.f.tag != "one" && c.f.tag != "linear" && c.f.tag != "bump")
      fail("f", "expected zero, one, linear or bump");
  }
  if (j.contains("obstacle")) c.obstacle = obstacle(j["obstacle"], "obstacle");
  if (j.contains("grid")) {
    only_keys(j["grid"], "grid", {"N", "M"});
    if (j["grid"].contains("N")) c.grid.N = integer(j["grid"]["N"], "grid.N");
    if (j["grid"].contains("M")) c.grid.M = integer(j["grid"]["M"], "grid.M");
    if (c.grid.N < 4) fail("grid.N", "need at least 4 cells");
    if (c.grid.M < 4) fail("grid.M", "need a lattice radius of at least 4");
  }
  if (j.contains("output")) {
    if (!j["output"].is_string()) fail("output", "expected a directory name");
    c.output = j["output"];
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) fail("seed", "expected a nonnegative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("p")) c.p = number(j["p"], "p");
  if (j.contains("degree")) {
    c.degree = integer(j["degree"], "degree");
    if (c.degree < 0 || c.degree > 6) fail("degree", "must lie in 0..6");
  }
  if (j.contains("scan")) {
    only_keys(j["scan"], "scan", {"p_min", "p_max", "step"});
    if (j["scan"].contains("p_min")) c.p_min = number(j["scan"]["p_min"], "scan.p_min");
    if (j["scan"].contains("p_max")) c.p_max = number(j["scan"]["p_max"], "scan.p_max");
    if (j["scan"].contains("step")) c.p_step = number(j["scan"]["step"], "scan.step");
    if (!(c.p_step > 0.0)) fail("scan.step", "must be positive");
    if (!(c.p_min < c.p_max)) fail("scan.p_max", "must exceed scan.p_min");
  } else {
    c.p_max = 2 * c.kernel.s - 0.05;
  }
  if (j.contains("direction")) c.direction = point(j["direction"], "direction");
  if (j.contains("t")) {
    c.t = numbers(j["t"], "t");
    for (std::size_t i = 0; i < c.t.size(); ++i)
      if (!(c.t[i] > 0.0)) fail("t[" + std::to_string(i) + "]", "distances must be positive");
  }
  if (j.contains("z")) c.z = point(j["z"], "z");
  if (j.contains("nu")) c.nu = point(j["nu"], "nu");
  if (j.contains("exponents")) c.exponents = numbers(j["exponents"], "exponents");
  if (j.contains("beta")) c.beta = number(j["beta"], "beta");
  if (j.contains("window")) {
    only_keys(j["window"], "window", {"lo", "hi"});
    FitWindow w;
    if (!j["window"].contains("lo") || !j["window"].contains("hi")) fail("window", "needs lo and hi");
    w.lo = number(j["window"]["lo"], "window.lo");
    w.hi = number(j["window"]["hi"], "window.hi");
    if (!(w.lo > 0.0 && w.lo < w.hi)) fail("window", "need 0 < lo < hi");
    c.window = w;
  }
  if (j.contains("peel")) {
    if (!j["peel"].is_boolean()) fail("peel", "expected true or false");
    c.peel = j["peel"];
  }
  if (j.contains("points")) {
    if (!j["points"].is_array()) fail("points", "expected an array of points");
    for (std::size_t i = 0; i < j["points"].size(); ++i)
      c.points.push_back(point(j["points"][i], "points[" + std::to_string(i) + "]"));
  }
  if (j.contains("samples")) c.samples = integer(j["samples"], "samples");
  if (j.contains("criteria")) {
    if (!j["criteria"].is_array()) fail("criteria", "expected an array of criterion numbers");
    for (std::size_t i = 0; i < j["criteria"].size(); ++i) {
      int id = integer(j["criteria"][i], "criteria[" + std::to_string(i) + "]");
      if (id < 1 || id > 11) fail("criteria[" + std::to_string(i) + "]", "criteria are numbered 1..11");
      c.criteria.push_back(id);
    }
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::ConfigError, path + ": cannot open");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(Errc::ConfigError, path + ": " + e.what());
  }
  return parse_config(j);
}

nlohmann::ordered_json resolved_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["kernel"] = {{"s", c.kernel.s}, {"n", c.kernel.n}, {"coeffs", c.kernel.coeffs}, {"phase", c.kernel.phase},
                 {"normalized", c.kernel.normalized}};
  if (!c.domain) {
    j["domain"] = {{"kind", "halfspace"}};
  } else if (c.domain->kind == DomainSpec::Kind::Interval) {
    j["domain"] = {{"kind", "interval"}, {"a", c.domain->a}, {"b", c.domain->b}};
  } else if (c.domain->kind == DomainSpec::Kind::Disk) {
    j["domain"] = {{"kind", "disk"}, {"center", c.domain->center}, {"radius", c.domain->radius}};
  } else {
    j["domain"] = {{"kind", "graph"}, {"amplitude", c.domain->amplitude}, {"beta", c.domain->beta},
                   {"mollification", c.domain->mollification}};
  }
  j["problem"] = problem_name(c.problem);
  j["b"] = c.b;
  j["f"] = c.f.tag;
  if (c.obstacle.kind == Obstacle::Kind::Bump)
    j["obstacle"] = {{"kind", "bump"}, {"height", c.obstacle.height}, {"radius", c.obstacle.radius},
                     {"center", c.obstacle.center}};
  else
    j["obstacle"] = {{"kind", "parabola"}, {"height", c.obstacle.height}};
  j["grid"] = {{"N", c.grid.N}, {"M", c.grid.M}};
  j["output"] = c.output;
  j["seed"] = c.seed;
  j["p"] = c.p;
  j["degree"] = c.degree;
  j["scan"] = {{"p_min", c.p_min}, {"p_max", c.p_max}, {"step", c.p_step}};
  j["direction"] = c.direction;
  j["t"] = c.t;
  j["z"] = c.z;
  j["nu"] = c.nu;
  j["exponents"] = c.exponents;
  j["beta"] = c.beta;
  if (c.window) j["window"] = {{"lo", c.window->lo}, {"hi", c.window->hi}};
  j["peel"] = c.peel;
  j["points"] = c.points;
  j["samples"] = c.samples;
  j["criteria"] = c.criteria;
  return j;
}

}  // namespace fracdrift
