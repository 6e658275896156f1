#pragma once

#include "fracdrift/distance.hpp"
#include "fracdrift/expansion.hpp"
#include "fracdrift/kernel.hpp"
#include "fracdrift/obstacle_solver.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fracdrift {

enum class Problem { dirichlet, obstacle, flatcase, phi, expansion };

struct KernelSpec {
  double s = 0.7;
  int n = 1;
  std::vector<double> coeffs{1.0};
  double phase = 0.0;
  bool normalized = false;

  StableKernel make() const;
};

// Closed-form data tags: "zero", "one", "linear" (1 + x1), "bump".
struct SourceSpec {
  std::string tag = "one";
  double evaluate(const Point2& x) const;
};

struct GridSpec {
  int N = 512;  // cells on an interval
  int M = 32;   // lattice radius on a disk
};

struct RunConfig {
  KernelSpec kernel;
  std::optional<DomainSpec> domain;  // empty: half-space (factorize only)
  Problem problem = Problem::dirichlet;
  std::array<double, 2> b{0.0, 0.0};
  SourceSpec f;
  Obstacle obstacle = Obstacle::bump(1.0, 0.6);
  GridSpec grid;
  std::string output = "run";
  std::uint64_t seed = 1;

  // flatcase / phi / factorize
  double p = 0.9;
  int degree = 2;
  double p_min = 0.1, p_max = 1.35, p_step = 0.05;
  std::array<double, 2> direction{0.0, 1.0};  // phi: boundary normal e
  std::vector<double> t;                      // factorize: distances along the normal
  Point2 z{0.0, 0.0}, nu{0.0, 1.0};

  // expansion
  std::vector<double> exponents;  // empty: ladder(s, beta)
  double beta = 2.6;
  std::optional<FitWindow> window;
  bool peel = false;

  // distance
  std::vector<Point2> points;
  int samples = 400;

  std::vector<int> criteria;  // report; empty = all

  nlohmann::ordered_json raw;  // as given
};

// Unknown keys and type or range violations throw ConfigError naming the field path.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

// Fully resolved form, written next to every run's outputs.
nlohmann::ordered_json resolved_json(const RunConfig& c);

const char* problem_name(Problem p);

}  // namespace fracdrift
