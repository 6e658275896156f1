#include "fracdrift/acceptance.hpp"
#include "fracdrift/config.hpp"
#include "fracdrift/errors.hpp"
#include "fracdrift/expansion.hpp"
#include "fracdrift/flatcase.hpp"
#include "fracdrift/nonlocal_solver.hpp"
#include "fracdrift/obstacle_solver.hpp"
#include "fracdrift/phi_map.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <omp.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <random>
#include <sstream>

namespace fs = std::filesystem;
using namespace fracdrift;
using ojson = nlohmann::ordered_json;

namespace {

constexpr int kOk = 0, kError = 1, kTolerance = 2;

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add(const std::vector<double>& v) {
    std::vector<std::string> r;
    char buf[32];
    for (double x : v) {
      std::snprintf(buf, sizeof buf, "%.17g", x);
      r.push_back(buf);
    }
    rows.push_back(std::move(r));
  }
  void write(const fs::path& p) const {
    std::ofstream out(p);
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << "\n";
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
      out << "\n";
    }
  }
};

void write_json(const fs::path& p, const ojson& j) { std::ofstream(p) << j.dump(2) << "\n"; }

// --out names a directory, or a file whose directory receives the side outputs.
struct Target {
  fs::path dir, primary;
};

Target target(const std::string& out, const RunConfig& cfg, const std::string& default_name) {
  Target t;
  fs::path o = out.empty() ? fs::path(cfg.output) : fs::path(out);
  if (o.has_extension() && (o.extension() == ".json" || o.extension() == ".csv")) {
    t.dir = o.has_parent_path() ? o.parent_path() : fs::path(".");
    t.primary = o;
  } else {
    t.dir = o;
    t.primary = o / default_name;
  }
  fs::create_directories(t.dir);
  return t;
}

std::vector<std::vector<double>> read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::ConfigError, path + ": cannot open");
  std::string line;
  std::getline(in, line);  // header
  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> r;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        r.push_back(std::stod(cell));
      } catch (...) {
        throw Error(Errc::ConfigError, path + ":" + std::to_string(lineno) + ": not a number '" + cell + "'");
      }
    }
    rows.push_back(r);
  }
  return rows;
}

const DomainSpec& interval_domain(const RunConfig& c) {
  if (!c.domain || c.domain->kind != DomainSpec::Kind::Interval)
    throw Error(Errc::ConfigError, "domain.kind: this command needs an interval");
  return *c.domain;
}

// 1D solution from u.csv (columns x, u, ...) on the configured interval.
struct LoadedSolution {
  Grid1D grid;
  Eigen::VectorXd u;
};

LoadedSolution load_solution(const std::string& path, const RunConfig& c) {
  const auto& dom = interval_domain(c);
  auto rows = read_csv(path);
  if (rows.size() < 8) throw Error(Errc::ConfigError, path + ": too few nodes");
  LoadedSolution s;
  s.grid = Grid1D::make(dom.a, dom.b, static_cast<int>(rows.size()) + 1);
  s.u.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() < 2) throw Error(Errc::ConfigError, path + ": expected columns x,u");
    if (std::abs(rows[i][0] - s.grid.node(static_cast<int>(i) + 1)) > 1e-9 * (1.0 + std::abs(rows[i][0])))
      throw Error(Errc::ConfigError, path + ": nodes do not match a uniform grid on the configured interval");
    s.u(static_cast<Eigen::Index>(i)) = rows[i][1];
  }
  return s;
}

int compute_cp_cmd(const RunConfig& c, const Target& t) {
  const double s = c.kernel.s;
  auto rows = scan_cp(s, c.p_min, c.p_max, c.p_step);
  Csv csv{{"p [1; exponent]", "c_p [1; compute_cp]", "error [1; quadrature estimate]", "flags [-; scan]"}, {}};
  char buf[3][32];
  for (const auto& r : rows) {
    std::snprintf(buf[0], 32, "%.17g", r.p);
    std::snprintf(buf[1], 32, "%.17g", r.cp);
    std::snprintf(buf[2], 32, "%.17g", r.err);
    csv.rows.push_back({buf[0], buf[1], buf[2], r.flags});
  }
  csv.write(t.primary);
  auto ch = sign_changes(rows);
  ojson j{{"s", s}, {"sign_changes", ojson::array()}};
  for (const auto& x : ch) j["sign_changes"].push_back({x.p_lo, x.p_hi});
  const bool covers = c.p_min < s && s < c.p_max;
  const bool ok = !covers || (ch.size() == 1 && std::abs(ch[0].p_lo - s) <= 1e-9 && std::abs(ch[0].p_hi - s) <= 1e-9);
  j["single_zero_at_s"] = ok;
  write_json(t.dir / "cp_scan.json", j);
  return ok ? kOk : kTolerance;
}

int build_phi_cmd(const RunConfig& c, const Target& t) {
  auto K = c.kernel.make();
  PhiOptions opt;
  opt.seed = c.seed;
  PhiMatrix phi;
  const auto e = c.direction;
  if (K.n() == 2 && (std::abs(e[0]) > 0.0 || std::abs(e[1] - 1.0) > 0.0)) {
    double nrm = std::hypot(e[0], e[1]);
    if (std::abs(nrm - 1.0) > 1e-12) throw Error(Errc::ConfigError, "direction: must be a unit vector");
    Eigen::Matrix2d Q;
    Q << e[1], e[0], -e[0], e[1];
    phi = rotate_phi(K, c.p, c.degree, e, Q, opt);
  } else {
    phi = build_phi(K, c.p, c.degree, opt);
  }
  std::ofstream(t.primary) << phi_to_json(phi);
  auto psi = invert_phi(phi);
  ojson j{{"basis", ojson::array()}, {"entries", ojson::array()}};
  for (const auto& m : psi.basis) j["basis"].push_back({m[0], m[1]});
  for (int r = 0; r < psi.entries.rows(); ++r) {
    ojson row = ojson::array();
    for (int k = 0; k < psi.entries.cols(); ++k) row.push_back(psi.entries(r, k));
    j["entries"].push_back(row);
  }
  write_json(t.dir / "psi.json", j);
  return kOk;
}

int eval_distance_cmd(const RunConfig& c, const Target& t) {
  if (!c.domain) throw Error(Errc::ConfigError, "domain: distance needs a bounded domain");
  GeneralizedDistance D(*c.domain);
  std::vector<Point2> pts = c.points;
  if (pts.empty()) {
    std::mt19937_64 rng(c.seed);
    const auto& dom = *c.domain;
    if (dom.kind == DomainSpec::Kind::Interval) {
      std::uniform_real_distribution<double> U(dom.a, dom.b);
      while (static_cast<int>(pts.size()) < c.samples) pts.push_back({U(rng), 0.0});
    } else {
      double lo0 = dom.kind == DomainSpec::Kind::Disk ? dom.center[0] - dom.radius : -1.0;
      double hi0 = dom.kind == DomainSpec::Kind::Disk ? dom.center[0] + dom.radius : 1.0;
      double lo1 = dom.kind == DomainSpec::Kind::Disk ? dom.center[1] - dom.radius : 0.0;
      double hi1 = dom.kind == DomainSpec::Kind::Disk ? dom.center[1] + dom.radius : 1.0;
      std::uniform_real_distribution<double> U0(lo0, hi0), U1(lo1, hi1);
      while (static_cast<int>(pts.size()) < c.samples) {
        Point2 x{U0(rng), U1(rng)};
        if (D.inside(x)) pts.push_back(x);
      }
    }
  }
  const bool one = c.domain->dim() == 1;
  Csv csv{one ? std::vector<std::string>{"x [length; sample]", "d [length; generalized distance]",
                                         "dist [length; exact distance]", "d' [1; derivative]"}
              : std::vector<std::string>{"x1 [length; sample]", "x2 [length; sample]",
                                         "d [length; generalized distance]", "dist [length; exact distance]",
                                         "d_x1 [1; gradient]", "d_x2 [1; gradient]"},
          {}};
  for (const auto& x : pts) {
    if (one) {
      if (!D.inside(x[0])) continue;
      auto dv = D.derivatives(x[0]);
      csv.add({x[0], dv[0], D.exact(x[0]), dv[1]});
    } else {
      if (!D.inside(x)) continue;
      auto dv = D.derivatives(x);
      csv.add({x[0], x[1], dv.d, D.exact(x), dv.grad[0], dv.grad[1]});
    }
  }
  csv.write(t.primary);
  auto cmp = measure_comparability(D, c.samples);
  write_json(t.dir / "comparability.json",
             ojson{{"sup_d_over_dist", cmp.sup_d_over_dist}, {"sup_dist_over_d", cmp.sup_dist_over_d},
                   {"product", cmp.product()}});
  return kOk;
}

int solve_dirichlet_cmd(const RunConfig& c, const Target& t) {
  auto K = c.kernel.make();
  ojson summary{{"kernel_s", K.s()}};
  if (!c.domain) throw Error(Errc::ConfigError, "domain: solve-dirichlet needs a bounded domain");
  if (c.domain->kind == DomainSpec::Kind::Interval) {
    auto g = Grid1D::make(c.domain->a, c.domain->b, c.grid.N);
    auto op = assemble_operator(K, g, c.b[0]);
    Eigen::VectorXd f(g.interior());
    for (int i = 0; i < g.interior(); ++i) f(i) = c.f.evaluate({g.node(i + 1), 0.0});
    DirichletSolver1D solver(op);
    auto u = solver.solve(f);
    Csv csv{{"x [length; grid node]", "u [1; solve-dirichlet]", "f [1; source tag " + c.f.tag + "]"}, {}};
    for (int i = 0; i < g.interior(); ++i) csv.add({g.node(i + 1), u(i), f(i)});
    csv.write(t.primary);
    auto gr = gradient(u, g, K.s());
    summary.update({{"N", c.grid.N}, {"h", g.h}, {"residual", solver.last_residual()}, {"monotone", op.monotone},
                    {"upwind_rows", op.upwind_rows.size()}, {"sup_grad_d^(1-s)", gr.sup_scaled}});
  } else if (c.domain->kind == DomainSpec::Kind::Disk) {
    auto g = Grid2D::disk(c.domain->center, c.domain->radius, c.grid.M);
    auto op = assemble_operator_2d(K, g, c.b);
    Eigen::VectorXd f(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) f(i) = c.f.evaluate(g.x[i]);
    IterativeReport rep;
    auto u = solve_dirichlet_2d(op, f, &rep);
    Csv csv{{"x1 [length; lattice node]", "x2 [length; lattice node]", "u [1; solve-dirichlet]",
             "f [1; source tag " + c.f.tag + "]"},
            {}};
    for (std::size_t i = 0; i < g.size(); ++i) csv.add({g.x[i][0], g.x[i][1], u(i), f(i)});
    csv.write(t.primary);
    summary.update({{"M", c.grid.M}, {"h", g.h}, {"iterations", rep.iterations}, {"residual", rep.residual},
                    {"monotone", op.monotone}});
  } else {
    throw Error(Errc::ConfigError, "domain.kind: solve-dirichlet supports interval and disk");
  }
  write_json(t.dir / "summary.json", summary);
  return kOk;
}

int solve_obstacle_cmd(const RunConfig& c, const Target& t) {
  const auto& dom = interval_domain(c);
  auto K = c.kernel.make();
  auto g = Grid1D::make(dom.a, dom.b, c.grid.N);
  auto op = assemble_operator(K, g, c.b[0]);
  // without an explicit source the obstacle problem is homogeneous
  Eigen::VectorXd f = Eigen::VectorXd::Zero(g.interior());
  if (c.raw.contains("f"))
    for (int i = 0; i < g.interior(); ++i) f(i) = c.f.evaluate({g.node(i + 1), 0.0});
  Eigen::VectorXd phi = c.obstacle.sample(g);
  auto res = solve_obstacle(op, phi, f);
  Csv u{{"x [length; grid node]", "u [1; solve-obstacle]", "phi [1; obstacle]"}, {}};
  Csv w{{"x [length; grid node]", "w [1; u - phi]"}, {}};
  for (int i = 0; i < g.interior(); ++i) {
    u.add({g.node(i + 1), res.u(i), phi(i)});
    w.add({g.node(i + 1), res.w(i)});
  }
  u.write(t.dir / "u.csv");
  w.write(t.dir / "w.csv");
  ojson fb{{"residual", res.residual}, {"sweeps", res.sweeps}, {"polish_steps", res.polish_steps},
           {"relaxation", res.relaxation}, {"contact_nodes", res.contact.size()}, {"points", ojson::array()}};
  try {
    for (const auto& z : extract_free_boundary(res.w, g, K.s())) {
      ojson pj{{"t", z.t}, {"side", z.side}, {"c", z.c}};
      try {
        auto rep = check_regular_point(res.w, g, K.s(), z, std::min(0.05, 0.25 * (dom.b - dom.a)), 2 * g.h);
        pj["regularity"] = {{"exponent", rep.exponent}, {"c", rep.c},         {"C", rep.C},
                            {"nodes", rep.nodes},       {"regular", rep.regular}, {"goodness", rep.goodness}};
      } catch (const Error& e) {
        pj["regularity"] = {{"error", errc_name(e.code())}};
      }
      fb["points"].push_back(pj);
    }
  } catch (const Error& e) {
    if (e.code() != Errc::NoFreeBoundary) throw;
    fb["points_error"] = errc_name(e.code());
  }
  write_json(t.primary.extension() == ".json" ? t.primary : t.dir / "fb.json", fb);
  return kOk;
}

ExpansionFit fit_for(const RunConfig& c, const ProfileSamples& prof, const FitWindow& win) {
  FitOptions opt;
  opt.peel = c.peel;
  if (c.exponents.empty()) return fit_expansion(prof, ladder(c.kernel.s, c.beta), win, opt);
  return fit_expansion(prof, c.kernel.s, c.exponents, win, opt);
}

ojson fit_to_json(const ExpansionFit& f) {
  ojson j{{"s", f.s}, {"exponents", f.exponents}, {"coeff", f.coeff}, {"uncertainty", f.uncertainty}};
  j["statistically_zero"] = ojson::array();
  for (std::size_t i = 0; i < f.coeff.size(); ++i) j["statistically_zero"].push_back(f.statistically_zero(i));
  j["residual_decay_exponent"] =
      std::isfinite(f.residual_decay_exponent) ? ojson(f.residual_decay_exponent) : ojson("inf");
  j["condition_number"] = f.condition_number;
  j["window"] = {f.window.lo, f.window.hi};
  j["samples"] = f.samples;
  j["bands"] = f.bands;
  j["peeled"] = f.peeled;
  return j;
}

int fit_expansion_cmd(const RunConfig& c, const Target& t, const std::string& solution) {
  auto sol = load_solution(solution, c);
  auto prof = normal_profile(sol.u, sol.grid, true);
  auto win = c.window.value_or(FitWindow::standard(sol.grid.h));
  auto fit = fit_for(c, prof, win);
  ojson j = fit_to_json(fit);
  try {
    auto cf = first_correction(prof, c.kernel.s, win, 3);
    j["first_correction"] = {{"exponents", cf.exponents}, {"coeff", cf.coeff}, {"residual", cf.residual}};
  } catch (const Error& e) {
    j["first_correction"] = {{"error", errc_name(e.code())}};
  }
  write_json(t.primary, j);
  return kOk;
}

int holder_cmd(const RunConfig& c, const Target& t, const std::string& solution, const std::string& field) {
  auto sol = load_solution(solution, c);
  const double s = c.kernel.s;
  auto prof = normal_profile(sol.u, sol.grid, true);
  double gz = 0.0;
  FitWindow win;
  if (field == "quotient") {
    auto std_win = FitWindow::standard(sol.grid.h);
    gz = fit_for(c, prof, std_win).coeff[0];
    for (std::size_t i = 0; i < prof.d.size(); ++i) prof.u[i] /= std::pow(prof.d[i], s);
    win = c.window.value_or(FitWindow{std_win.lo, 0.05});
  } else {
    win = c.window.value_or(FitWindow{10 * sol.grid.h, std::ldexp(1.0, -6)});
  }
  auto h = holder_exponent(prof, gz, win);
  Csv csv{{"r [length; dyadic radius]", "osc [1; sup |g - g(z)| over d <= r, field " + field + "]"}, {}};
  for (std::size_t i = 0; i < h.radii.size(); ++i) csv.add({h.radii[i], h.osc[i]});
  csv.write(t.primary);
  write_json(t.dir / "holder.json", ojson{{"field", field},
                                          {"boundary_value", gz},
                                          {"exponent", h.exponent},
                                          {"raw_slope", h.raw_slope},
                                          {"two_term", h.two_term},
                                          {"saturated", h.saturated},
                                          {"window", {win.lo, win.hi}}});
  return kOk;
}

int factorize_cmd(const RunConfig& c, const Target& t) {
  auto K = c.kernel.make();
  if (K.n() != 2) throw Error(Errc::ConfigError, "kernel.n: factorize works in two dimensions");
  std::unique_ptr<GeneralizedDistance> D;
  if (c.domain) D = std::make_unique<GeneralizedDistance>(*c.domain);
  std::vector<double> ts = c.t.empty() ? std::vector<double>{1e-4, 3e-4, 1e-3, 3e-3, 1e-2} : c.t;
  auto eta = [&](const Point2& x) { return c.f.evaluate(x); };
  auto r = singular_factorization(K, D.get(), eta, c.p, c.z, c.nu, ts);
  Csv csv{{"t [length; distance along nu]", "value [1; L(eta d^p) by quadrature]",
           "leading [1; phi t^(p-2s)]"},
          {}};
  for (std::size_t i = 0; i < r.t.size(); ++i)
    csv.add({r.t[i], r.value[i], r.phi * std::pow(r.t[i], c.p - 2 * K.s())});
  csv.write(t.primary);
  ojson j{{"p", c.p}, {"phi", r.phi}, {"remainder_exponent", r.remainder_exponent}, {"max_error", r.max_error}};
  if (!c.domain) j["c_p_times_moment"] = compute_cp(K.s(), c.p).value * angular_moment(K);
  write_json(t.dir / "factorization.json", j);
  return kOk;
}

int report_cmd(const RunConfig& c, const Target& t) {
  auto ids = c.criteria.empty() ? acceptance::criterion_ids() : c.criteria;
  ojson verdict{{"pass", true}, {"criteria", ojson::array()}};
  for (int id : ids) {
    auto r = acceptance::run_criterion(id);
    std::fprintf(stderr, "[%s] criterion %d, %s: %s (%.1f s)\n", r.pass ? "PASS" : "FAIL", id, r.title.c_str(),
                 r.summary.c_str(), r.seconds);
    verdict["criteria"].push_back(acceptance::to_json(r));
    if (!r.pass) verdict["pass"] = false;
    for (const auto& tab : r.tables)
      std::ofstream(t.dir / ("c" + std::to_string(id) + "_" + tab.name + ".csv")) << acceptance::to_csv(tab);
  }
  write_json(t.primary, verdict);
  return verdict["pass"].get<bool>() ? kOk : kTolerance;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonlocal operators with drift: boundary expansions, solvers and checks"};
  app.require_subcommand(1);
  std::string config_path, out;
  int threads = 0;
  std::int64_t seed = -1;
  app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--out", out, "Output directory, or primary output file");
  app.add_option("--threads", threads, "OpenMP threads (0 keeps the default)")->check(CLI::NonNegativeNumber);
  app.add_option("--seed", seed, "Seed for sample clouds, overrides the config");

  std::string solution, field = "quotient";
  auto* cp = app.add_subcommand("compute-cp", "Scan c_p over p; writes cp_scan.csv");
  auto* phi = app.add_subcommand("build-phi", "Matrix of the flat-case map and its inverse");
  auto* dist = app.add_subcommand("eval-distance", "Generalized distance samples and comparability");
  auto* dir = app.add_subcommand("solve-dirichlet", "Linear problem on an interval or disk; writes u.csv");
  auto* obs = app.add_subcommand("solve-obstacle", "Obstacle problem; writes u.csv, w.csv, fb.json");
  auto* fit = app.add_subcommand("fit-expansion", "Boundary expansion of a 1D solution");
  fit->add_option("--solution", solution, "u.csv from solve-dirichlet")->required()->check(CLI::ExistingFile);
  auto* hol = app.add_subcommand("holder", "Boundary Hoelder exponent of u or u/d^s");
  hol->add_option("--solution", solution, "u.csv from solve-dirichlet")->required()->check(CLI::ExistingFile);
  hol->add_option("--field", field, "solution or quotient")->check(CLI::IsMember({"solution", "quotient"}));
  auto* fac = app.add_subcommand("factorize", "Leading coefficient of L(eta d^p) near a boundary point");
  auto* rep = app.add_subcommand("report", "Run the acceptance criteria; writes acceptance.json");
  for (auto* sc : {cp, phi, dist, dir, obs, fit, hol, fac, rep}) sc->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kError;
  }

  try {
    RunConfig cfg = config_path.empty() ? parse_config(nlohmann::json::object()) : load_config(config_path);
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    if (threads > 0) omp_set_num_threads(threads);

    auto* sc = app.get_subcommands().front();
    const std::string name = sc->get_name();
    const std::map<std::string, std::string> primary = {
        {"compute-cp", "cp_scan.csv"},   {"build-phi", "phi.json"},     {"eval-distance", "distance.csv"},
        {"solve-dirichlet", "u.csv"},    {"solve-obstacle", "fb.json"}, {"fit-expansion", "fit.json"},
        {"holder", "holder.csv"},        {"factorize", "factorization.csv"}, {"report", "acceptance.json"}};
    Target t = target(out, cfg, primary.at(name));
    write_json(t.dir / "config.resolved.json", resolved_json(cfg));

    if (name == "compute-cp") return compute_cp_cmd(cfg, t);
    if (name == "build-phi") return build_phi_cmd(cfg, t);
    if (name == "eval-distance") return eval_distance_cmd(cfg, t);
    if (name == "solve-dirichlet") return solve_dirichlet_cmd(cfg, t);
    if (name == "solve-obstacle") return solve_obstacle_cmd(cfg, t);
    if (name == "fit-expansion") return fit_expansion_cmd(cfg, t, solution);
    if (name == "holder") return holder_cmd(cfg, t, solution, field);
    if (name == "factorize") return factorize_cmd(cfg, t);
    if (name == "report") return report_cmd(cfg, t);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kError;
  }
  return kError;
}
