#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace koopdim {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string measured;
  double seconds = 0.0;
  double budget_seconds = 0.0;
};

struct AcceptanceOptions {
  std::uint64_t seed = 20240611;
};

struct Criterion {
  int id;
  std::string name;
  double budget_seconds;
  // Returns (numerical pass, measured summary).
  std::function<std::pair<bool, std::string>(const AcceptanceOptions&)> check;
};

const std::vector<Criterion>& acceptance_criteria();
CriterionResult run_criterion(const Criterion& c, const AcceptanceOptions& options);
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options, std::ostream* progress = nullptr);
std::string format_criterion_line(const CriterionResult& r);

}  // namespace koopdim
