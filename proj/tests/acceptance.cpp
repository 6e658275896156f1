#include "fracdrift/acceptance.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>

using namespace fracdrift;

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria, one verdict line each"};
  std::vector<int> only;
  std::string json_out;
  app.add_option("--only", only, "Criterion numbers to run (default: all)");
  app.add_option("--json", json_out, "Write the verdicts to this file");
  CLI11_PARSE(app, argc, argv);
  if (only.empty()) only = acceptance::criterion_ids();

  nlohmann::ordered_json all = nlohmann::ordered_json::array();
  int failed = 0;
  for (int id : only) {
    auto r = acceptance::run_criterion(id);
    std::printf("[%s] criterion %d, %s: %s (%.1f s)\n", r.pass ? "PASS" : "FAIL", r.id, r.title.c_str(),
                r.summary.c_str(), r.seconds);
    std::fflush(stdout);
    failed += !r.pass;
    all.push_back(acceptance::to_json(r, true));
  }
  if (!json_out.empty()) std::ofstream(json_out) << all.dump(2) << "\n";
  return failed ? 1 : 0;
}
