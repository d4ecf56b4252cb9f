#pragma once

#include <cstdint>
#include <string>
#include <vector>

// Self-check suite behind `cclk verify`: the operator identity, the
// delta-kernel oracle, the λ = 0 reductions, gradient checks and the smoothing
// limit, each reported with its measured deviation.
namespace cclk {

struct PropertyResult {
  std::string name;
  bool passed = false;
  double measured = 0.0;   // worst deviation observed
  double tolerance = 0.0;
  std::string detail;
};

struct VerifyOptions {
  std::uint64_t seed = 2024;
  // Test hook: negate W on the operator route so the identity must fail.
  bool flip_w_sign = false;
};

std::vector<PropertyResult> run_verification(const VerifyOptions& options = {});

}  // namespace cclk
