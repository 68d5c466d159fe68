#pragma once
#include <string>
#include <vector>

namespace histoport {

struct CheckResult {
  std::string name;
  bool pass = false;
  double residual = 0.0;  // worst observed deviation, check-specific units
  std::string detail;
};

/// Deterministic invariant sweep across all modules.  `inject_fault`
/// deliberately corrupts one construction so the failure path is testable:
/// "regular-shift" flips the cyclic-shift direction inside the
/// discretization/regular intertwiner check.
std::vector<CheckResult> run_invariant_suite(uint64_t seed = 0,
                                             const std::string& inject_fault = "");

}  // namespace histoport
