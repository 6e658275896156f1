#pragma once

#include <json.hpp>

#include <string>
#include <vector>

namespace fracdrift::acceptance {

// Plot data attached to a criterion; written as CSV by `report`.
struct Table {
  std::string name;
  std::vector<std::string> columns;  // "name [unit; source]"
  std::vector<std::vector<double>> rows;
};

struct CriterionResult {
  int id = 0;
  std::string title;
  bool pass = false;
  double seconds = 0.0;
  double budget = 0.0;  // runtime limit in seconds, part of the verdict
  std::string summary;  // one line
  nlohmann::ordered_json detail;
  std::vector<Table> tables;
};

std::vector<int> criterion_ids();
std::string criterion_title(int id);

// Runs one criterion; numerical errors are caught and reported as failures.
CriterionResult run_criterion(int id);

// Wall time is left out by default so that reports are reproducible byte for byte.
nlohmann::ordered_json to_json(const CriterionResult& r, bool timing = false);
std::string to_csv(const Table& t);

}  // namespace fracdrift::acceptance
