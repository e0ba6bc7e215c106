#pragma once

#include <string>
#include <vector>

namespace fmpols {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

/// Runs the full acceptance suite (13 criteria) in order.
std::vector<CriterionResult> run_acceptance();

/// "PASS  6 exp1-log-regret  R^2 = ... (0.41 s)"
std::string format_result(const CriterionResult& r);

}  // namespace fmpols
