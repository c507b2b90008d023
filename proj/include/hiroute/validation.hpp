#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace hiroute {

struct PropertyResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ValidationOptions {
  std::uint64_t seed = 1;
  // Negative control: flips the sign of the baseline inside the importance
  // term, which must break unbiasedness.
  bool inject_beta_sign_bug = false;
};

/// Fast self-check: estimator unbiasedness, variance pair, action simplex,
/// small exhaustive submodularity, reach-probability chains.
std::vector<PropertyResult> run_property_suite(const ValidationOptions& opts = {});

}  // namespace hiroute
