#pragma once

#include <string>

namespace fracpx {

/// Outcome of a numerical inequality check. `slack` is the measured margin
/// including the check's tolerance (relative to the bound for the Lebesgue
/// checks); negative means violated.
struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double bound = 0.0;
  double slack = 0.0;
  std::string detail;
};

}  // namespace fracpx
