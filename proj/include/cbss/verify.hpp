#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace cbss {

enum class VerifyLevel { Quick, Full };

struct CheckResult {
  std::string id;
  std::string anchor;  ///< the result being checked, or "plumbing"
  bool pass = false;
  double statistic = 0;
  double threshold = 0;
  std::string detail;
};

struct VerifyReport {
  VerifyLevel level = VerifyLevel::Quick;
  std::uint64_t seed = 0;
  std::vector<CheckResult> checks;
  double seconds = 0;

  bool pass() const;
  std::string to_json() const;
};

/// Runs the check battery; failures are collected, never thrown.  Progress
/// lines go to `log` when it is non-null.
VerifyReport verify(VerifyLevel level, std::uint64_t seed, int workers = 1, std::ostream* log = nullptr);

}  // namespace cbss
